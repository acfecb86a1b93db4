//! Polynomial right actions, their deformations over a time parameter,
//! property (P)/(R) verification, zoom equivariance and the symbol Lie
//! algebra attached to a linear t=0 action.

use crate::coeff::{Gaussian, Rational};
use crate::lie::{self, GradedLieAlgebra, GroupLaw, LieError, PolyVectorField};
use crate::poly::{PolyError, PolyMap, Polynomial, Var, VarRole, VarTable};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("not a Shubin action: component {component} has t-exponent {exponent}")]
    NotShubin { component: usize, exponent: i64 },
    #[error("field compatibility check failed: {0}")]
    FieldCompatibility(String),
    #[error("property (R) fails: witness monomial {0}")]
    PropertyRFails(String),
    #[error("lie error: {0}")]
    Lie(#[from] LieError),
    #[error("polynomial error: {0}")]
    Poly(#[from] PolyError),
    #[error("{0}")]
    Unsupported(String),
}

/// Polynomial right action of a graded group on a graded vector space.
/// `theta` has d components over the table (x1..xd, v1..vn).
#[derive(Clone, Debug)]
pub struct PolynomialAction {
    pub group: GroupLaw,
    pub space_dim: usize,
    pub space_weights: Vec<u32>,
    pub theta: PolyMap,
}

/// Variable table (x1..xd, v1..vn) of an action.
pub fn action_table(d: usize, n: usize) -> Arc<VarTable> {
    VarTable::concat(&[
        VarTable::family("x", VarRole::Space, d),
        VarTable::family("v", VarRole::Group, n),
    ])
}

/// Variable table (x1..xd, t, v1..vn) of a deformed action.
pub fn deformed_table(d: usize, n: usize) -> Arc<VarTable> {
    VarTable::concat(&[
        VarTable::family("x", VarRole::Space, d),
        vec![Var {
            name: "t".into(),
            role: VarRole::Time,
        }],
        VarTable::family("v", VarRole::Group, n),
    ])
}

impl PolynomialAction {
    pub fn group_dim(&self) -> usize {
        self.group.dim()
    }

    /// Substitutes x- and v-arguments (polynomials over a common table).
    pub fn apply(
        &self,
        x: &[Polynomial],
        v: &[Polynomial],
    ) -> Result<Vec<Polynomial>, ActionError> {
        let target = x[0].vars().clone();
        let mut subs = BTreeMap::new();
        for (j, p) in x.iter().enumerate() {
            subs.insert(format!("x{}", j + 1), p.clone());
        }
        for (j, p) in v.iter().enumerate() {
            subs.insert(format!("v{}", j + 1), p.clone());
        }
        let mut out = Vec::with_capacity(self.space_dim);
        for comp in &self.theta.components {
            out.push(comp.substitute(&subs, &target)?);
        }
        Ok(out)
    }

    /// Checks the action axioms exactly; an empty report means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let d = self.space_dim;
        let n = self.group_dim();
        if self.theta.components.len() != d {
            problems.push(format!(
                "component count {} differs from space dimension {}",
                self.theta.components.len(),
                d
            ));
            return problems;
        }
        let vt = action_table(d, n);
        let x: Vec<Polynomial> = (0..d)
            .map(|j| Polynomial::var(&vt, &format!("x{}", j + 1)).unwrap())
            .collect();
        let zero_v: Vec<Polynomial> = (0..n).map(|_| Polynomial::zero(&vt)).collect();
        match self.apply(&x, &zero_v) {
            Ok(at_zero) => {
                for j in 0..d {
                    if at_zero[j] != x[j] {
                        problems.push(format!(
                            "theta(x, 0) != x in component {}: got {}",
                            j + 1,
                            at_zero[j]
                        ));
                    }
                }
            }
            Err(e) => problems.push(e.to_string()),
        }

        // Compatibility over (x, v, w).
        let big = VarTable::concat(&[
            VarTable::family("x", VarRole::Space, d),
            VarTable::family("v", VarRole::Group, n),
            VarTable::family("w", VarRole::Group, n),
        ]);
        let xb: Vec<Polynomial> = (0..d)
            .map(|j| Polynomial::var(&big, &format!("x{}", j + 1)).unwrap())
            .collect();
        let vb: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(&big, &format!("v{}", j + 1)).unwrap())
            .collect();
        let wb: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(&big, &format!("w{}", j + 1)).unwrap())
            .collect();
        let compat = (|| -> Result<(), ActionError> {
            let xv = self.apply(&xb, &vb)?;
            let lhs = self.apply(&xv, &wb)?;
            let vw = self.group.multiply(&vb, &wb)?;
            let rhs = self.apply(&xb, &vw)?;
            for j in 0..d {
                if lhs[j] != rhs[j] {
                    let diff = lhs[j].sub(&rhs[j]);
                    return Err(ActionError::InvalidAction(format!(
                        "theta(theta(x,v),w) != theta(x, vw) in component {}; difference {}",
                        j + 1,
                        diff
                    )));
                }
            }
            Ok(())
        })();
        if let Err(e) = compat {
            problems.push(e.to_string());
        }
        problems
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Fundamental vector field of the j-th group direction: components
    /// d/dv_j theta(x, v)_k at v = 0, over (x1..xd).
    pub fn fundamental_field(&self, j: usize) -> Result<PolyVectorField, ActionError> {
        let d = self.space_dim;
        let n = self.group_dim();
        if j >= n {
            return Err(ActionError::Unsupported(format!(
                "group index {} out of range",
                j + 1
            )));
        }
        let xt = VarTable::new(VarTable::family("x", VarRole::Space, d));
        let mut components = Vec::with_capacity(d);
        for k in 0..d {
            let mut p = self.theta.components[k]
                .partial_derivative(&format!("v{}", j + 1))?;
            for i in 0..n {
                p = p.eval_var(&format!("v{}", i + 1), &Rational::zero());
            }
            components.push(p.embed(&xt)?);
        }
        Ok(PolyVectorField { components })
    }

    /// Attempts the weighted triangular inversion of the shear map
    /// (x, v) -> (x, theta_v(x)). A failure does not disprove (P).
    pub fn check_property_p(&self) -> PropertyP {
        let d = self.space_dim;
        let n = self.group_dim();
        if d != n {
            return PropertyP::Undetermined {
                reason: format!(
                    "space dimension {d} and group dimension {n} differ; the shear map cannot be a diffeomorphism"
                ),
            };
        }
        // Unknowns in non-decreasing weight order (stable).
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| self.group.algebra.weights[j]);
        let unknown_names: Vec<String> =
            order.iter().map(|&j| format!("v{}", j + 1)).collect();
        let unknown_refs: Vec<&str> = unknown_names.iter().map(|s| s.as_str()).collect();
        // Components must be paired with their unknowns in the same order.
        let f = PolyMap::new(
            self.theta.source.clone(),
            order
                .iter()
                .map(|&j| self.theta.components[j].clone())
                .collect(),
        );
        match f.invert_triangular(&unknown_refs) {
            Ok(inv) => {
                // Reassemble Omega(x, y) = (x, v(x, y)) in basis order.
                let out_table = inv.inverse.source.clone();
                let mut comps_by_basis = vec![Polynomial::zero(&out_table); n];
                for (pos, &j) in order.iter().enumerate() {
                    comps_by_basis[j] = inv.inverse.components[pos].clone();
                }
                let mut components: Vec<Polynomial> = (0..d)
                    .map(|j| Polynomial::var(&out_table, &format!("x{}", j + 1)).unwrap())
                    .collect();
                components.extend(comps_by_basis);
                PropertyP::Holds {
                    omega: PolyMap::new(out_table, components),
                }
            }
            Err(e) => PropertyP::Undetermined {
                reason: format!("triangular inversion failed: {e}"),
            },
        }
    }
}

/// Outcome of the constructive (P) check.
#[derive(Clone, Debug)]
pub enum PropertyP {
    /// The shear map has the verified polynomial inverse
    /// Omega(x, y1..yd) = (x, v(x, y)).
    Holds { omega: PolyMap },
    /// The triangular method did not apply; (P) is undetermined.
    Undetermined { reason: String },
}

impl PropertyP {
    pub fn holds(&self) -> bool {
        matches!(self, PropertyP::Holds { .. })
    }
}

/// A Shubin deformation: theta(x, t, v) polynomial in x, t, v with
/// theta(x, 1, v) the base action and zoom compatibility verified.
#[derive(Clone, Debug)]
pub struct DeformedAction {
    pub base: PolynomialAction,
    /// d components over (x1..xd, t, v1..vn).
    pub theta_t: PolyMap,
}

impl DeformedAction {
    fn assert_invariants(self) -> Result<Self, ActionError> {
        // No negative t-powers.
        for (j, comp) in self.theta_t.components.iter().enumerate() {
            if let Some((lo, _)) = comp.exponent_range("t") {
                if lo < 0 {
                    return Err(ActionError::NotShubin {
                        component: j,
                        exponent: lo,
                    });
                }
            }
        }
        // Slice at 1 equals the base action.
        let at_one = self.slice(&Rational::from_integer(1.into()))?;
        if at_one.theta != self.base.theta {
            return Err(ActionError::InvalidAction(
                "slice at t = 1 differs from the base action".into(),
            ));
        }
        // Slice at 0 is an action.
        let at_zero = self.slice(&Rational::zero())?;
        let report = at_zero.validate();
        if !report.is_empty() {
            return Err(ActionError::InvalidAction(format!(
                "slice at t = 0 is not an action: {}",
                report.join("; ")
            )));
        }
        // Zoom compatibility.
        if !self.zoom_check() {
            return Err(ActionError::InvalidAction(
                "zoom compatibility identity fails".into(),
            ));
        }
        Ok(self)
    }

    pub fn space_dim(&self) -> usize {
        self.base.space_dim
    }

    pub fn group_dim(&self) -> usize {
        self.base.group_dim()
    }

    /// Substitutes t = t0 exactly.
    pub fn slice(&self, t0: &Rational) -> Result<PolynomialAction, ActionError> {
        let d = self.space_dim();
        let n = self.group_dim();
        let at = action_table(d, n);
        let components = self
            .theta_t
            .components
            .iter()
            .map(|c| c.eval_var("t", t0).embed(&at))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolynomialAction {
            group: self.base.group.clone(),
            space_dim: d,
            space_weights: self.base.space_weights.clone(),
            theta: PolyMap::new(at, components),
        })
    }

    pub fn theta_zero(&self) -> Result<PolynomialAction, ActionError> {
        self.slice(&Rational::zero())
    }

    /// Property (R): the t = 0 action is by linear maps. Returns the witness
    /// monomial on failure.
    pub fn check_property_r(&self) -> Result<(), String> {
        let zero = self
            .theta_zero()
            .map_err(|e| format!("cannot slice at 0: {e}"))?;
        let d = self.space_dim();
        let x_idx: Vec<usize> = (0..d)
            .map(|j| zero.theta.source.index_of(&format!("x{}", j + 1)).unwrap())
            .collect();
        for (j, comp) in zero.theta.components.iter().enumerate() {
            let monos: Vec<_> = comp.terms().map(|(m, _)| m.clone()).collect();
            for mono in monos.iter().rev() {
                let xdeg: i64 = x_idx.iter().map(|&ix| mono.0[ix]).sum();
                if xdeg != 1 {
                    let witness = Polynomial::monomial(
                        comp.vars(),
                        mono.0.clone(),
                        Gaussian::one(),
                    )
                    .map(|p| p.to_string())
                    .unwrap_or_else(|_| "?".into());
                    return Err(format!("component {}: monomial {}", j + 1, witness));
                }
            }
        }
        Ok(())
    }

    /// Verifies the zoom identity
    /// theta(beta_{1/lambda} x, t/lambda, alpha_lambda v) =
    /// beta_{1/lambda} theta(x, t, v) as a Laurent identity in lambda.
    pub fn zoom_check(&self) -> bool {
        let d = self.space_dim();
        let n = self.group_dim();
        let big = VarTable::concat(&[
            VarTable::family("x", VarRole::Space, d),
            vec![Var {
                name: "t".into(),
                role: VarRole::Time,
            }],
            VarTable::family("v", VarRole::Group, n),
            vec![Var {
                name: "lambda".into(),
                role: VarRole::Scale,
            }],
        ]);
        let lam = big.index_of("lambda").unwrap();
        let scaled_var = |name: &str, power: i64| -> Polynomial {
            let mut exps = vec![0i64; big.len()];
            exps[big.index_of(name).unwrap()] = 1;
            exps[lam] = power;
            Polynomial::monomial(&big, exps, Gaussian::one()).unwrap()
        };
        let mut subs = BTreeMap::new();
        for j in 0..d {
            subs.insert(
                format!("x{}", j + 1),
                scaled_var(&format!("x{}", j + 1), -(self.base.space_weights[j] as i64)),
            );
        }
        subs.insert("t".to_string(), scaled_var("t", -1));
        for j in 0..n {
            subs.insert(
                format!("v{}", j + 1),
                scaled_var(&format!("v{}", j + 1), self.base.group.algebra.weights[j] as i64),
            );
        }
        for (j, comp) in self.theta_t.components.iter().enumerate() {
            let lhs = match comp.substitute(&subs, &big) {
                Ok(p) => p,
                Err(_) => return false,
            };
            let mut exps = vec![0i64; big.len()];
            exps[lam] = -(self.base.space_weights[j] as i64);
            let lam_pow = Polynomial::monomial(&big, exps, Gaussian::one()).unwrap();
            let rhs = match comp.embed(&big) {
                Ok(p) => p.mul(&lam_pow),
                Err(_) => return false,
            };
            if lhs != rhs {
                return false;
            }
        }
        true
    }

    /// Fundamental vector field at a rational time slice.
    pub fn fundamental_field_at(
        &self,
        j: usize,
        t0: &Rational,
    ) -> Result<PolyVectorField, ActionError> {
        self.slice(t0)?.fundamental_field(j)
    }

    /// Fundamental vector field with the time kept formal: components
    /// d/dv_j theta(x, t, v) at v = 0, polynomials in (x, t).
    pub fn fundamental_field_formal(&self, j: usize) -> Result<PolyVectorField, ActionError> {
        let d = self.space_dim();
        let n = self.group_dim();
        if j >= n {
            return Err(ActionError::Unsupported(format!(
                "group index {} out of range",
                j + 1
            )));
        }
        let table = VarTable::concat(&[
            VarTable::family("x", VarRole::Space, d),
            vec![Var {
                name: "t".into(),
                role: VarRole::Time,
            }],
        ]);
        let mut components = Vec::with_capacity(d);
        for k in 0..d {
            let mut p = self.theta_t.components[k]
                .partial_derivative(&format!("v{}", j + 1))?;
            for i in 0..n {
                p = p.eval_var(&format!("v{}", i + 1), &Rational::zero());
            }
            components.push(p.embed(&table)?);
        }
        Ok(PolyVectorField { components })
    }

    /// The symbol Lie algebra X* x|0 g on basis (eta_1..eta_d, X_1..X_n);
    /// requires property (R).
    pub fn symbol_group(&self) -> Result<SymbolAlgebra, ActionError> {
        if let Err(witness) = self.check_property_r() {
            return Err(ActionError::PropertyRFails(witness));
        }
        let zero = self.theta_zero()?;
        let d = self.space_dim();
        let n = self.group_dim();
        let dim = d + n;
        let mut weights = Vec::with_capacity(dim);
        weights.extend(self.base.space_weights.iter().copied());
        weights.extend(self.base.group.algebra.weights.iter().copied());

        let mut brackets: Vec<(usize, usize, usize, Rational)> = Vec::new();
        // Group part in slots d..d+n.
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let c = self.base.group.algebra.structure_constant(i, j, k);
                    if !c.is_zero() {
                        brackets.push((d + i, d + j, d + k, c.clone()));
                    }
                }
            }
        }
        // Mixed part: [X_j, eta_i] = hat X^0_j (x_i) with x_k read as eta_k.
        for j in 0..n {
            let field = zero.fundamental_field(j)?;
            for i in 0..d {
                // field.components[i] is linear in x by (R).
                for (mono, c) in field.components[i].terms() {
                    let k = mono
                        .0
                        .iter()
                        .position(|&e| e == 1)
                        .expect("(R) guarantees linear coefficients");
                    assert!(c.is_real(), "symbol algebra constants must be real");
                    brackets.push((d + j, i, k, c.re.clone()));
                }
            }
        }
        let mut algebra = GradedLieAlgebra::from_brackets(dim, weights, &brackets);
        for i in 0..d {
            algebra.labels[i] = format!("eta{}", i + 1);
        }
        for j in 0..n {
            algebra.labels[d + j] = format!("X{}", j + 1);
        }
        let defects = algebra.validate();
        if !defects.is_empty() {
            let msgs: Vec<String> = defects.iter().map(|x| x.to_string()).collect();
            return Err(ActionError::InvalidAction(format!(
                "symbol algebra failed validation: {}",
                msgs.join("; ")
            )));
        }
        Ok(SymbolAlgebra {
            algebra,
            space_dim: d,
            group_dim: n,
        })
    }
}

/// Graded Lie algebra on (eta_1..eta_d, X_1..X_n) encoding the t = 0 action.
#[derive(Clone, Debug)]
pub struct SymbolAlgebra {
    pub algebra: GradedLieAlgebra,
    pub space_dim: usize,
    pub group_dim: usize,
}

impl SymbolAlgebra {
    pub fn dim(&self) -> usize {
        self.algebra.dim
    }

    /// Basis slot of eta_i (zero-based i).
    pub fn eta_slot(&self, i: usize) -> usize {
        i
    }

    /// Basis slot of X_j (zero-based j).
    pub fn x_slot(&self, j: usize) -> usize {
        self.space_dim + j
    }
}

/// Conjugates the base action by dilations with a formal Laurent t and
/// inspects exponents; the smooth t = 0 extension exists iff none are
/// negative.
pub fn deform(action: &PolynomialAction) -> Result<DeformedAction, ActionError> {
    let report = action.validate();
    if !report.is_empty() {
        return Err(ActionError::InvalidAction(report.join("; ")));
    }
    let d = action.space_dim;
    let n = action.group_dim();
    let dt = deformed_table(d, n);
    let t_idx = dt.index_of("t").unwrap();
    let scaled_var = |name: &str, power: i64| -> Polynomial {
        let mut exps = vec![0i64; dt.len()];
        exps[dt.index_of(name).unwrap()] = 1;
        exps[t_idx] = power;
        Polynomial::monomial(&dt, exps, Gaussian::one()).unwrap()
    };
    let mut subs = BTreeMap::new();
    for j in 0..d {
        subs.insert(
            format!("x{}", j + 1),
            scaled_var(&format!("x{}", j + 1), -(action.space_weights[j] as i64)),
        );
    }
    for j in 0..n {
        subs.insert(
            format!("v{}", j + 1),
            scaled_var(&format!("v{}", j + 1), action.group.algebra.weights[j] as i64),
        );
    }
    let mut components = Vec::with_capacity(d);
    for (j, comp) in action.theta.components.iter().enumerate() {
        let conjugated = comp.substitute(&subs, &dt)?;
        let mut exps = vec![0i64; dt.len()];
        exps[t_idx] = action.space_weights[j] as i64;
        let t_pow = Polynomial::monomial(&dt, exps, Gaussian::one()).unwrap();
        let scaled = conjugated.mul(&t_pow);
        if let Some((lo, _)) = scaled.exponent_range("t") {
            if lo < 0 {
                return Err(ActionError::NotShubin {
                    component: j,
                    exponent: lo,
                });
            }
        }
        components.push(scaled);
    }
    DeformedAction {
        base: action.clone(),
        theta_t: PolyMap::new(dt, components),
    }
    .assert_invariants()
}

/// Rescales a t-field of actions: checks the lambda-compatibility identity
/// with exponent k, then substitutes t -> t^k. The field is given by its
/// d space components over (x1..xd, t, v1..vn); the t-component is the
/// identity by convention.
pub fn rescale_field(
    group: &GroupLaw,
    space_weights: &[u32],
    field: &PolyMap,
    k: u32,
) -> Result<DeformedAction, ActionError> {
    let d = space_weights.len();
    let n = group.dim();
    assert_eq!(field.components.len(), d);
    // Field-of-actions check: theta(x, t, 0) = x and compatibility in
    // (x, t, v, w) with t held formal.
    let probe = VarTable::concat(&[
        VarTable::family("x", VarRole::Space, d),
        vec![Var {
            name: "t".into(),
            role: VarRole::Time,
        }],
        VarTable::family("v", VarRole::Group, n),
        VarTable::family("w", VarRole::Group, n),
    ]);
    let apply = |x: &[Polynomial], v: &[Polynomial]| -> Result<Vec<Polynomial>, ActionError> {
        let mut subs = BTreeMap::new();
        for (j, p) in x.iter().enumerate() {
            subs.insert(format!("x{}", j + 1), p.clone());
        }
        for (j, p) in v.iter().enumerate() {
            subs.insert(format!("v{}", j + 1), p.clone());
        }
        let mut out = Vec::with_capacity(d);
        for comp in &field.components {
            out.push(comp.substitute(&subs, &probe)?);
        }
        Ok(out)
    };
    let x: Vec<Polynomial> = (0..d)
        .map(|j| Polynomial::var(&probe, &format!("x{}", j + 1)).unwrap())
        .collect();
    let v: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&probe, &format!("v{}", j + 1)).unwrap())
        .collect();
    let w: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&probe, &format!("w{}", j + 1)).unwrap())
        .collect();
    let zero_v: Vec<Polynomial> = (0..n).map(|_| Polynomial::zero(&probe)).collect();
    let at_zero = apply(&x, &zero_v)?;
    if at_zero != x {
        return Err(ActionError::FieldCompatibility(
            "field does not satisfy theta(x, t, 0) = x".into(),
        ));
    }
    let xv = apply(&x, &v)?;
    let lhs = apply(&xv, &w)?;
    let vw = group.multiply(&v, &w)?;
    let rhs = apply(&x, &vw)?;
    if lhs != rhs {
        return Err(ActionError::FieldCompatibility(
            "field slices are not actions: compatibility fails".into(),
        ));
    }

    // Lambda identity: beta_l o field^t_{alpha_l v} o beta_{1/l} = field^{l^k t}.
    let lam_table = VarTable::concat(&[
        VarTable::family("x", VarRole::Space, d),
        vec![Var {
            name: "t".into(),
            role: VarRole::Time,
        }],
        VarTable::family("v", VarRole::Group, n),
        vec![Var {
            name: "lambda".into(),
            role: VarRole::Scale,
        }],
    ]);
    let lam = lam_table.index_of("lambda").unwrap();
    let scaled_var = |name: &str, power: i64| -> Polynomial {
        let mut exps = vec![0i64; lam_table.len()];
        exps[lam_table.index_of(name).unwrap()] = 1;
        exps[lam] = power;
        Polynomial::monomial(&lam_table, exps, Gaussian::one()).unwrap()
    };
    let mut subs = BTreeMap::new();
    for j in 0..d {
        subs.insert(
            format!("x{}", j + 1),
            scaled_var(&format!("x{}", j + 1), -(space_weights[j] as i64)),
        );
    }
    for j in 0..n {
        subs.insert(
            format!("v{}", j + 1),
            scaled_var(&format!("v{}", j + 1), group.algebra.weights[j] as i64),
        );
    }
    let mut t_subs = BTreeMap::new();
    t_subs.insert("t".to_string(), scaled_var("t", k as i64));
    for (j, comp) in field.components.iter().enumerate() {
        let conj = comp.substitute(&subs, &lam_table)?;
        let mut exps = vec![0i64; lam_table.len()];
        exps[lam] = space_weights[j] as i64;
        let lam_pow = Polynomial::monomial(&lam_table, exps, Gaussian::one()).unwrap();
        let lhs = conj.mul(&lam_pow);
        let rhs = comp.substitute(&t_subs, &lam_table)?;
        if lhs != rhs {
            let diff = lhs.sub(&rhs);
            let witness = diff
                .coefficients_of("lambda")
                .into_iter()
                .find(|(_, p)| !p.is_zero())
                .map(|(e, p)| format!("lambda^{e}: {p}"))
                .unwrap_or_else(|| "?".into());
            return Err(ActionError::FieldCompatibility(format!(
                "lambda-compatibility with exponent {k} fails in component {}; witness {}",
                j + 1,
                witness
            )));
        }
    }

    // theta(x, t, v) = field(x, t^k, v).
    let dt = deformed_table(d, n);
    let mut t_pow_subs = BTreeMap::new();
    let mut exps = vec![0i64; dt.len()];
    exps[dt.index_of("t").unwrap()] = k as i64;
    t_pow_subs.insert(
        "t".to_string(),
        Polynomial::monomial(&dt, exps, Gaussian::one()).unwrap(),
    );
    let components = field
        .components
        .iter()
        .map(|c| c.substitute(&t_pow_subs, &dt))
        .collect::<Result<Vec<_>, _>>()?;

    let base_table = action_table(d, n);
    let base_components = components
        .iter()
        .map(|c| c.eval_var("t", &Rational::from_integer(1.into())).embed(&base_table))
        .collect::<Result<Vec<_>, _>>()?;
    let base = PolynomialAction {
        group: group.clone(),
        space_dim: d,
        space_weights: space_weights.to_vec(),
        theta: PolyMap::new(base_table, base_components),
    };
    let report = base.validate();
    if !report.is_empty() {
        return Err(ActionError::InvalidAction(report.join("; ")));
    }
    DeformedAction {
        base,
        theta_t: PolyMap::new(dt, components),
    }
    .assert_invariants()
}

/// Right translation of a graded group on itself, deformed by the two
/// dilation families (alpha from the algebra, beta given). Passing the
/// algebra's own weights gives the standard dilation groupoid.
pub fn double_dilation(
    alg: &GradedLieAlgebra,
    beta_weights: &[u32],
) -> Result<DeformedAction, ActionError> {
    let law = lie::bch_product(alg)?;
    let n = alg.dim;
    assert_eq!(beta_weights.len(), n);
    let at = action_table(n, n);
    // theta(x, v) = x . v via the group law with v-slot <- x, w-slot <- v.
    let x: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&at, &format!("x{}", j + 1)).unwrap())
        .collect();
    let v: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&at, &format!("v{}", j + 1)).unwrap())
        .collect();
    let components = law.multiply(&x, &v)?;
    let action = PolynomialAction {
        group: law,
        space_dim: n,
        space_weights: beta_weights.to_vec(),
        theta: PolyMap::new(at, components),
    };
    deform(&action)
}

/// The action field of the representation groupoid:
/// theta_{exp X}(x, t) = (Ad(exp(-X)) x + t sum_{k>=1} ad(-X)^{k-1}(D X)/k!, t),
/// returned as its d = n space components over (x1..xn, t, v1..vn).
pub fn representation_field(alg: &GradedLieAlgebra) -> Result<PolyMap, ActionError> {
    let defects = alg.validate();
    if !defects.is_empty() {
        let msgs: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Err(ActionError::InvalidAction(msgs.join("; ")));
    }
    let n = alg.dim;
    let dt = deformed_table(n, n);
    let x: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&dt, &format!("x{}", j + 1)).unwrap())
        .collect();
    let minus_v: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&dt, &format!("v{}", j + 1)).unwrap().neg())
        .collect();
    let t = Polynomial::var(&dt, "t").unwrap();

    // Ad(exp(-X)) x = sum_{k>=0} ad(-X)^k x / k!.
    let step = alg.step_bound() as usize;
    let mut result = x.clone();
    let mut bracket = x.clone();
    let mut factorial = 1i64;
    for k in 1..=step {
        bracket = alg.bracket_poly(&minus_v, &bracket);
        factorial *= k as i64;
        if bracket.iter().all(|p| p.is_zero()) {
            break;
        }
        let c = Gaussian::from_ratio(1, factorial);
        for j in 0..n {
            result[j] = result[j].add(&bracket[j].scale(&c));
        }
    }
    // t part: t sum_{k>=1} ad(-X)^{k-1}(D X) / k!.
    let dx: Vec<Polynomial> = (0..n)
        .map(|j| {
            Polynomial::var(&dt, &format!("v{}", j + 1))
                .unwrap()
                .scale(&Gaussian::from_int(alg.weights[j] as i64))
        })
        .collect();
    let mut bracket = dx.clone();
    let mut factorial = 1i64;
    for k in 1..=step {
        if k > 1 {
            bracket = alg.bracket_poly(&minus_v, &bracket);
            factorial *= k as i64;
        }
        if bracket.iter().all(|p| p.is_zero()) {
            break;
        }
        let c = Gaussian::from_ratio(1, factorial);
        for j in 0..n {
            result[j] = result[j].add(&bracket[j].mul(&t).scale(&c));
        }
    }
    Ok(PolyMap::new(dt, result))
}

/// Dual dilation weights r + 1 - q_j on the underlying space of the algebra.
pub fn dual_weights(alg: &GradedLieAlgebra) -> Vec<u32> {
    let r = alg.step_bound();
    alg.weights.iter().map(|&q| r + 1 - q).collect()
}

/// The representation groupoid of a graded group: the rescaled action field
/// with exponent r + 1 and the dual dilations on the space side.
pub fn representation(alg: &GradedLieAlgebra) -> Result<DeformedAction, ActionError> {
    let law = lie::bch_product(alg)?;
    let field = representation_field(alg)?;
    let beta = dual_weights(alg);
    let r = alg.step_bound();
    rescale_field(&law, &beta, &field, r + 1)
}

/// Group bundle R^d x G with theta_v(x, w) = (x, w v); beta combines the
/// given weights on R^d with the group weights.
pub fn group_bundle(
    fibre_weights: &[u32],
    alg: &GradedLieAlgebra,
) -> Result<PolynomialAction, ActionError> {
    let law = lie::bch_product(alg)?;
    let d_fibre = fibre_weights.len();
    let n = alg.dim;
    let total = d_fibre + n;
    let at = action_table(total, n);
    let mut components: Vec<Polynomial> = (0..d_fibre)
        .map(|j| Polynomial::var(&at, &format!("x{}", j + 1)).unwrap())
        .collect();
    let w_slot: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&at, &format!("x{}", d_fibre + j + 1)).unwrap())
        .collect();
    let v_slot: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&at, &format!("v{}", j + 1)).unwrap())
        .collect();
    components.extend(law.multiply(&w_slot, &v_slot)?);
    let mut space_weights = fibre_weights.to_vec();
    space_weights.extend(alg.weights.iter().copied());
    Ok(PolynomialAction {
        group: law,
        space_dim: total,
        space_weights,
        theta: PolyMap::new(at, components),
    })
}

/// Homogeneous-space action of the Heisenberg group on R^2 behind the
/// Grushin operator: alpha has weights (k, l, k+l), beta has weights (p, q),
/// and in the coset coordinates [exp(y X3) exp(x X1)] the right translation
/// reads theta_v(x, y) = (x + v1, y + v3 + x v2 + v1 v2 / 2).
pub fn grushin(k: u32, l: u32, p: u32, q: u32) -> Result<PolynomialAction, ActionError> {
    let alg = lie::heisenberg_weighted(k, l);
    let law = lie::bch_product(&alg)?;
    let at = action_table(2, 3);
    let x = Polynomial::var(&at, "x1").unwrap();
    let y = Polynomial::var(&at, "x2").unwrap();
    let v1 = Polynomial::var(&at, "v1").unwrap();
    let v2 = Polynomial::var(&at, "v2").unwrap();
    let v3 = Polynomial::var(&at, "v3").unwrap();
    let half = Gaussian::from_ratio(1, 2);
    let c1 = x.add(&v1);
    let c2 = y
        .add(&v3)
        .add(&x.mul(&v2))
        .add(&v1.mul(&v2).scale(&half));
    let action = PolynomialAction {
        group: law,
        space_dim: 2,
        space_weights: vec![p, q],
        theta: PolyMap::new(at, vec![c1, c2]),
    };
    let report = action.validate();
    if !report.is_empty() {
        return Err(ActionError::InvalidAction(report.join("; ")));
    }
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{abelian, engel, heisenberg};
    use crate::poly::{ratio, WeightVector};

    fn h1_right_translation() -> PolynomialAction {
        let law = lie::bch_product(&heisenberg(1)).unwrap();
        let at = action_table(3, 3);
        let x: Vec<Polynomial> = (0..3)
            .map(|j| Polynomial::var(&at, &format!("x{}", j + 1)).unwrap())
            .collect();
        let v: Vec<Polynomial> = (0..3)
            .map(|j| Polynomial::var(&at, &format!("v{}", j + 1)).unwrap())
            .collect();
        let components = law.multiply(&x, &v).unwrap();
        PolynomialAction {
            group: law,
            space_dim: 3,
            space_weights: vec![1, 1, 2],
            theta: PolyMap::new(at, components),
        }
    }

    #[test]
    fn right_translation_is_valid() {
        assert!(h1_right_translation().is_valid());
    }

    #[test]
    fn grushin_action_is_valid() {
        assert!(grushin(1, 1, 2, 1).unwrap().is_valid());
    }

    #[test]
    fn broken_action_reports_witness() {
        // theta(x, v) = x + v1^2 on abelian R: fails compatibility.
        let law = lie::bch_product(&abelian(1)).unwrap();
        let at = action_table(1, 1);
        let x = Polynomial::var(&at, "x1").unwrap();
        let v = Polynomial::var(&at, "v1").unwrap();
        let action = PolynomialAction {
            group: law,
            space_dim: 1,
            space_weights: vec![1],
            theta: PolyMap::new(at, vec![x.add(&v.pow(2))]),
        };
        let report = action.validate();
        assert!(!report.is_empty());
    }

    #[test]
    fn double_dilation_h1_deforms_with_identity_at_zero() {
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        let zero = dd.theta_zero().unwrap();
        let id = PolyMap::identity(&action_table(3, 3));
        // theta^0_v(x) = x: components equal x_j.
        for j in 0..3 {
            assert_eq!(zero.theta.components[j], id.components[j]);
        }
        // Slice at 1 is right translation.
        let one = dd.slice(&ratio(1, 1)).unwrap();
        assert_eq!(one.theta, h1_right_translation().theta);
    }

    #[test]
    fn engel_double_dilation_with_isotropic_beta() {
        let dd = double_dilation(&engel(), &[1, 1, 1, 1]).unwrap();
        let zero = dd.theta_zero().unwrap();
        let at = action_table(4, 4);
        let x = |j: usize| Polynomial::var(&at, &format!("x{j}")).unwrap();
        let v = |j: usize| Polynomial::var(&at, &format!("v{j}")).unwrap();
        let twelfth = Gaussian::from_ratio(1, 12);
        // theta^0(x, v) = (x1, x2, x3, x4 + x1 (x1 v2 - x2 v1) / 12)
        assert_eq!(zero.theta.components[0], x(1));
        assert_eq!(zero.theta.components[1], x(2));
        assert_eq!(zero.theta.components[2], x(3));
        let expected = x(4).add(
            &x(1)
                .mul(&x(1).mul(&v(2)).sub(&x(2).mul(&v(1))))
                .scale(&twelfth),
        );
        assert_eq!(zero.theta.components[3], expected);
        // (R) fails with an x1^2 v2 witness.
        let r = dd.check_property_r();
        assert!(r.is_err());
        assert!(r.unwrap_err().contains("x1^2"));
    }

    #[test]
    fn grushin_deforms_iff_l_plus_q_ge_p() {
        // (1,1,2,1): l+q = p = 2 -> Shubin with nontrivial theta^0.
        let ok = deform(&grushin(1, 1, 2, 1).unwrap()).unwrap();
        let zero = ok.theta_zero().unwrap();
        let at = action_table(2, 3);
        let x = Polynomial::var(&at, "x1").unwrap();
        let y = Polynomial::var(&at, "x2").unwrap();
        let v2 = Polynomial::var(&at, "v2").unwrap();
        assert_eq!(zero.theta.components[0], x);
        assert_eq!(zero.theta.components[1], y.add(&x.mul(&v2)));
        // (1,1,3,1): l+q = 2 < 3 -> witness t^{-1} in the second component.
        match deform(&grushin(1, 1, 3, 1).unwrap()) {
            Err(ActionError::NotShubin { component, exponent }) => {
                assert_eq!(component, 1);
                assert_eq!(exponent, -1);
            }
            other => panic!("expected NotShubin, got {other:?}"),
        }
        // l+q > p -> trivial theta^0.
        let trivial = deform(&grushin(1, 1, 1, 1).unwrap()).unwrap();
        let z = trivial.theta_zero().unwrap();
        assert_eq!(z.theta.components[0], x);
        assert_eq!(z.theta.components[1], y);
    }

    #[test]
    fn representation_field_matches_closed_forms() {
        // Abelian R^n: field (x + t v, t).
        let f = representation_field(&abelian(2)).unwrap();
        let dt = deformed_table(2, 2);
        for j in 0..2 {
            let x = Polynomial::var(&dt, &format!("x{}", j + 1)).unwrap();
            let v = Polynomial::var(&dt, &format!("v{}", j + 1)).unwrap();
            let t = Polynomial::var(&dt, "t").unwrap();
            assert_eq!(f.components[j], x.add(&t.mul(&v)));
        }
        // Heisenberg H_1: third component x3 + (v2 x1 - v1 x2) + 2 t v3.
        let f = representation_field(&heisenberg(1)).unwrap();
        let dt = deformed_table(3, 3);
        let x = |j: usize| Polynomial::var(&dt, &format!("x{j}")).unwrap();
        let v = |j: usize| Polynomial::var(&dt, &format!("v{j}")).unwrap();
        let t = Polynomial::var(&dt, "t").unwrap();
        assert_eq!(f.components[0], x(1).add(&t.mul(&v(1))));
        assert_eq!(f.components[1], x(2).add(&t.mul(&v(2))));
        let expected = x(3)
            .add(&v(2).mul(&x(1)))
            .sub(&v(1).mul(&x(2)))
            .add(&t.mul(&v(3)).scale(&Gaussian::from_int(2)));
        assert_eq!(f.components[2], expected);
    }

    #[test]
    fn representation_groupoid_is_rescaled_field() {
        // Abelian: k = r + 1 = 2 gives theta(x, t, v) = x + t^2 v.
        let rep = representation(&abelian(1)).unwrap();
        let dt = deformed_table(1, 1);
        let x = Polynomial::var(&dt, "x1").unwrap();
        let v = Polynomial::var(&dt, "v1").unwrap();
        let t = Polynomial::var(&dt, "t").unwrap();
        assert_eq!(rep.theta_t.components[0], x.add(&t.pow(2).mul(&v)));
        // H1: the field with t -> t^3.
        let rep = representation(&heisenberg(1)).unwrap();
        let field = representation_field(&heisenberg(1)).unwrap();
        let dt = deformed_table(3, 3);
        let mut subs = BTreeMap::new();
        subs.insert(
            "t".to_string(),
            Polynomial::var(&dt, "t").unwrap().pow(3),
        );
        for j in 0..3 {
            let expected = field.components[j].substitute(&subs, &dt).unwrap();
            assert_eq!(rep.theta_t.components[j], expected);
        }
        // theta^0 is linear in x: property (R).
        assert!(rep.check_property_r().is_ok());
    }

    #[test]
    fn rescale_identity_on_existing_deformation() {
        // k = 1 on an already-Shubin deformation reproduces it.
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        let rescaled = rescale_field(
            &dd.base.group,
            &dd.base.space_weights,
            &dd.theta_t,
            1,
        )
        .unwrap();
        assert_eq!(rescaled.theta_t.components, dd.theta_t.components);
    }

    #[test]
    fn rescale_rejects_wrong_exponent() {
        // The abelian field (x + t v, t) satisfies the lambda identity with
        // exponent 2 only; requesting k = 3 must fail with a lambda witness.
        let field = representation_field(&abelian(1)).unwrap();
        let law = lie::bch_product(&abelian(1)).unwrap();
        match rescale_field(&law, &[1], &field, 3) {
            Err(ActionError::FieldCompatibility(msg)) => {
                assert!(msg.contains("lambda"), "{msg}");
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(rescale_field(&law, &[1], &field, 2).is_ok());
    }

    #[test]
    fn property_p_double_dilation_h1() {
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        let p = dd.base.check_property_p();
        match &p {
            PropertyP::Holds { omega } => {
                // Omega(x, y) = (x, (-x) . y); third component
                // y3 - x3 - (x1 y2 - x2 y1)/2.
                let ot = &omega.source;
                let x1 = Polynomial::var(ot, "x1").unwrap();
                let x2 = Polynomial::var(ot, "x2").unwrap();
                let x3 = Polynomial::var(ot, "x3").unwrap();
                let y1 = Polynomial::var(ot, "y1").unwrap();
                let y2 = Polynomial::var(ot, "y2").unwrap();
                let y3 = Polynomial::var(ot, "y3").unwrap();
                let half = Gaussian::from_ratio(1, 2);
                let expected = y3
                    .sub(&x3)
                    .sub(&x1.mul(&y2).sub(&x2.mul(&y1)).scale(&half));
                assert_eq!(omega.components[5], expected);
                assert_eq!(omega.components[3], y1.sub(&x1));
            }
            PropertyP::Undetermined { reason } => panic!("expected (P): {reason}"),
        }
    }

    #[test]
    fn property_p_representation_h1() {
        let rep = representation(&heisenberg(1)).unwrap();
        assert!(rep.base.check_property_p().holds());
    }

    #[test]
    fn property_p_grushin_undetermined() {
        let g = grushin(1, 1, 2, 1).unwrap();
        assert!(!g.check_property_p().holds());
    }

    #[test]
    fn property_r_examples() {
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        assert!(dd.check_property_r().is_ok());
        let rep = representation(&heisenberg(1)).unwrap();
        assert!(rep.check_property_r().is_ok());
    }

    #[test]
    fn zoom_checks() {
        assert!(double_dilation(&heisenberg(1), &[1, 1, 2])
            .unwrap()
            .zoom_check());
        assert!(representation(&abelian(2)).unwrap().zoom_check());
        // Corrupt one component: replace t by t^2.
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        let mut corrupted = dd.clone();
        let dtable = corrupted.theta_t.source.clone();
        let mut subs = BTreeMap::new();
        subs.insert("t".to_string(), Polynomial::var(&dtable, "t").unwrap().pow(2));
        corrupted.theta_t.components[2] = corrupted.theta_t.components[2]
            .substitute(&subs, &dtable)
            .unwrap();
        assert!(!corrupted.zoom_check());
    }

    #[test]
    fn symbol_group_double_dilation_is_direct_product() {
        let dd = double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap();
        let sg = dd.symbol_group().unwrap();
        assert_eq!(sg.dim(), 6);
        // Mixed brackets all vanish: [X_j, eta_i] = 0.
        for j in 0..3 {
            for i in 0..3 {
                for k in 0..6 {
                    assert!(sg
                        .algebra
                        .structure_constant(sg.x_slot(j), sg.eta_slot(i), k)
                        .is_zero());
                }
            }
        }
        // Group part survives: [X1, X2] = X3.
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(0), sg.x_slot(1), sg.x_slot(2)),
            &Rational::from_integer(1.into())
        );
    }

    #[test]
    fn symbol_group_representation_heisenberg() {
        let rep = representation(&heisenberg(1)).unwrap();
        let sg = rep.symbol_group().unwrap();
        let one = Rational::from_integer(1.into());
        // [X1, X2] = X3.
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(0), sg.x_slot(1), sg.x_slot(2)),
            &one
        );
        // [X1, eta3] = -eta2, [X2, eta3] = eta1.
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(0), sg.eta_slot(2), sg.eta_slot(1)),
            &(-one.clone())
        );
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(1), sg.eta_slot(2), sg.eta_slot(0)),
            &one
        );
        // Everything else mixed vanishes, e.g. [X3, eta_i] = 0.
        for i in 0..3 {
            for k in 0..6 {
                assert!(sg
                    .algebra
                    .structure_constant(sg.x_slot(2), sg.eta_slot(i), k)
                    .is_zero());
            }
        }
    }

    #[test]
    fn symbol_group_grushin() {
        let da = deform(&grushin(1, 1, 2, 1).unwrap()).unwrap();
        let sg = da.symbol_group().unwrap();
        let one = Rational::from_integer(1.into());
        // Basis: eta1 = x-dual, eta2 = y-dual, X1, X2, X3.
        // [X1, X2] = X3 and [X2, y] = x.
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(0), sg.x_slot(1), sg.x_slot(2)),
            &one
        );
        assert_eq!(
            sg.algebra
                .structure_constant(sg.x_slot(1), sg.eta_slot(1), sg.eta_slot(0)),
            &one
        );
        // No other mixed brackets.
        for j in [0usize, 2] {
            for i in 0..2 {
                for k in 0..5 {
                    assert!(sg
                        .algebra
                        .structure_constant(sg.x_slot(j), sg.eta_slot(i), k)
                        .is_zero());
                }
            }
        }
    }

    #[test]
    fn slices_are_actions_and_slice_one_restores_base() {
        for da in [
            double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap(),
            representation(&heisenberg(1)).unwrap(),
            deform(&grushin(1, 1, 2, 1).unwrap()).unwrap(),
        ] {
            for t0 in [ratio(0, 1), ratio(1, 1), ratio(1, 2), ratio(-1, 2), ratio(2, 1)] {
                let s = da.slice(&t0).unwrap();
                assert!(s.is_valid(), "slice at {t0} invalid");
            }
            let one = da.slice(&ratio(1, 1)).unwrap();
            assert_eq!(one.theta, da.base.theta);
        }
    }

    #[test]
    fn group_bundle_is_shubin_with_r() {
        let gb = group_bundle(&[1, 1], &heisenberg(1)).unwrap();
        assert!(gb.is_valid());
        let da = deform(&gb).unwrap();
        assert!(da.check_property_r().is_ok());
        // Not transitive: property (P) undetermined (dimension mismatch).
        assert!(!gb.check_property_p().holds());
    }

    #[test]
    fn formal_time_fundamental_field() {
        // Representation groupoid of H1: hat X^t_1 = t^3 d1 - x2 d3.
        let rep = representation(&heisenberg(1)).unwrap();
        let f = rep.fundamental_field_formal(0).unwrap();
        let table = f.components[0].vars().clone();
        let t = Polynomial::var(&table, "t").unwrap();
        let x2 = Polynomial::var(&table, "x2").unwrap();
        assert_eq!(f.components[0], t.pow(3));
        assert_eq!(f.components[1], Polynomial::zero(&table));
        assert_eq!(f.components[2], x2.neg());
    }

    #[test]
    fn fundamental_field_order_law_for_builtins() {
        // hat X^0_i x_j homogeneous of beta-degree q_i + r_j, and the t = 1
        // field deviates only by strictly lower beta-degree.
        for da in [
            double_dilation(&heisenberg(1), &[1, 1, 2]).unwrap(),
            representation(&heisenberg(1)).unwrap(),
            deform(&grushin(1, 1, 2, 1).unwrap()).unwrap(),
        ] {
            let beta = WeightVector::for_family("x", &da.base.space_weights);
            for i in 0..da.group_dim() {
                let f0 = da.fundamental_field_at(i, &ratio(0, 1)).unwrap();
                let f1 = da.fundamental_field_at(i, &ratio(1, 1)).unwrap();
                let qi = da.base.group.algebra.weights[i] as i64;
                for j in 0..da.space_dim() {
                    let rj = da.base.space_weights[j] as i64;
                    // Zero polynomials are vacuously homogeneous.
                    assert!(f0.components[j]
                        .is_homogeneous(&beta, qi + rj)
                        .unwrap());
                    let diff = f1.components[j].sub(&f0.components[j]);
                    if let Some(deg) = diff.weighted_degree(&beta).unwrap() {
                        assert!(
                            deg < qi + rj,
                            "correction of hat X_{i} x_{j} has degree {deg} >= {}",
                            qi + rj
                        );
                    }
                }
            }
        }
    }
}
