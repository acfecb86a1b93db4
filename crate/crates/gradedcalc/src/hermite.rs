//! Ladder-matrix representations of position and derivative on truncated
//! Hermite-function bases, tensor assembly and interior projection.
//!
//! Position is (a + a*)/sqrt(2) and derivative (a - a*)/sqrt(2), so every
//! factor couples one ladder step per axis; entries of a degree-p product
//! are exact on indices at distance >= p from the truncation edge.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Position matrix u on the N-dimensional Hermite basis.
pub fn position_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        let val = (k as f64 / 2.0).sqrt();
        m[(k - 1, k)] = val;
        m[(k, k - 1)] = val;
    }
    m
}

/// Derivative matrix d/du on the N-dimensional Hermite basis.
pub fn derivative_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for k in 1..n {
        let val = (k as f64 / 2.0).sqrt();
        m[(k - 1, k)] = val;
        m[(k, k - 1)] = -val;
    }
    m
}

/// Row-major enumeration of the multi-indices of a tensor grid.
pub fn tensor_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        let mut next = Vec::with_capacity(out.len() * d);
        for prefix in &out {
            for k in 0..d {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Linear index of a multi-index in the row-major enumeration.
pub fn linear_index(idx: &[usize], dims: &[usize]) -> usize {
    let mut lin = 0;
    for (k, &d) in idx.iter().zip(dims) {
        lin = lin * d + k;
    }
    lin
}

/// Max |entry| of M - M^H.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Matrix 1-norm (max column absolute sum).
pub fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|i| m[(i, j)].norm()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Smallest singular value.
pub fn sigma_min(m: &DMatrix<Complex64>) -> f64 {
    let svd = m.clone().svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn position_entries() {
        // Off-diagonal entries sqrt(k/2) for k = 1, 2.
        let u = position_matrix(3);
        assert!((u[(0, 1)] - (0.5f64).sqrt()).abs() < 1e-15);
        assert!((u[(1, 2)] - 1.0).abs() < 1e-15);
        assert_eq!(u[(0, 2)], 0.0);
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let n = 8;
        let u = position_matrix(n);
        let d = derivative_matrix(n);
        let comm = &d * &u - &u * &d;
        // Interior block equals the identity.
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn harmonic_oscillator_diagonal() {
        // -d^2 + u^2 has exact interior diagonal 1, 3, 5, ...
        let n = 10;
        let u = position_matrix(n);
        let d = derivative_matrix(n);
        let h = &u * &u - &d * &d;
        for i in 0..n - 2 {
            for j in 0..n - 2 {
                let expected = if i == j { 2.0 * i as f64 + 1.0 } else { 0.0 };
                assert!((h[(i, j)] - expected).abs() < 1e-12, "at ({i},{j})");
            }
        }
    }
}
