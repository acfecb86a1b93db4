//! Symbolic and numeric toolkit for Shubin-type calculi on graded nilpotent
//! Lie groups: exact group laws, deformed polynomial actions and their tangent
//! groupoids, differential operators with polynomial coefficients, principal
//! cocosymbols in enveloping algebras, Rockland certificates, and Hermite
//! spectral checks.

pub mod action;
pub mod coeff;
pub mod elliptic;
pub mod hermite;
pub mod lie;
pub mod opalg;
pub mod poly;
pub mod spectral;
pub mod symbolrn;

pub use coeff::{Gaussian, Rational};
