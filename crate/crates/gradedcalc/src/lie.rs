//! Graded nilpotent Lie algebras, BCH group laws, dilations, quasi-norms,
//! left-invariant vector fields and the bar-group construction.

use crate::coeff::{Gaussian, Rational};
use crate::poly::{PolyMap, Polynomial, Var, VarRole, VarTable, WeightVector};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LieError {
    #[error("algebra fails validation: {0}")]
    Invalid(String),
    #[error("basis index {0} out of range (dimension {1})")]
    IndexOutOfRange(usize, usize),
    #[error("{0} is not a common multiple of the weights")]
    NotCommonMultiple(u32),
    #[error("polynomial error: {0}")]
    Poly(#[from] crate::poly::PolyError),
}

/// Graded Lie algebra: dimension, integer weights, rational structure
/// constants c[i][j][k] for [X_i, X_j] = sum_k c[i][j][k] X_k.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedLieAlgebra {
    pub dim: usize,
    pub weights: Vec<u32>,
    structure: Vec<Vec<Vec<Rational>>>,
    /// Optional basis labels (defaults X1..Xn); used by reports.
    pub labels: Vec<String>,
}

/// One violated axiom with witness indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieDefect {
    Antisymmetry { i: usize, j: usize },
    Jacobi { i: usize, j: usize, k: usize },
    Grading { i: usize, j: usize, k: usize },
    WeightOutOfRange { j: usize },
}

impl std::fmt::Display for LieDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LieDefect::Antisymmetry { i, j } => {
                write!(f, "antisymmetry fails for pair ({}, {})", i + 1, j + 1)
            }
            LieDefect::Jacobi { i, j, k } => {
                write!(f, "Jacobi identity fails on triple ({}, {}, {})", i + 1, j + 1, k + 1)
            }
            LieDefect::Grading { i, j, k } => write!(
                f,
                "grading violated: c[{},{}]^{} nonzero but q_{} != q_{} + q_{}",
                i + 1, j + 1, k + 1, k + 1, i + 1, j + 1
            ),
            LieDefect::WeightOutOfRange { j } => {
                write!(f, "weight of basis element {} is < 1", j + 1)
            }
        }
    }
}

impl GradedLieAlgebra {
    /// Builds without validating; call `validate` to obtain diagnostics.
    pub fn new_unchecked(
        dim: usize,
        weights: Vec<u32>,
        structure: Vec<Vec<Vec<Rational>>>,
    ) -> Self {
        assert_eq!(weights.len(), dim);
        assert_eq!(structure.len(), dim);
        for row in &structure {
            assert_eq!(row.len(), dim);
            for entry in row {
                assert_eq!(entry.len(), dim);
            }
        }
        let labels = (1..=dim).map(|j| format!("X{j}")).collect();
        GradedLieAlgebra {
            dim,
            weights,
            structure,
            labels,
        }
    }

    /// Builds from a sparse list of brackets (i, j, k, c) meaning
    /// [X_i, X_j] = ... + c X_k (zero-based); antisymmetric closure applied.
    pub fn from_brackets(dim: usize, weights: Vec<u32>, brackets: &[(usize, usize, usize, Rational)]) -> Self {
        let mut c = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        for (i, j, k, val) in brackets {
            c[*i][*j][*k] = &c[*i][*j][*k] + val;
            c[*j][*i][*k] = &c[*j][*i][*k] - val;
        }
        Self::new_unchecked(dim, weights, c)
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.structure[i][j][k]
    }

    /// Bracket of basis elements as a coefficient vector.
    pub fn bracket_basis(&self, i: usize, j: usize) -> Vec<Rational> {
        self.structure[i][j].clone()
    }

    /// Bracket of two coefficient vectors with polynomial entries.
    pub fn bracket_poly(&self, a: &[Polynomial], b: &[Polynomial]) -> Vec<Polynomial> {
        let vars = a[0].vars().clone();
        let mut out = vec![Polynomial::zero(&vars); self.dim];
        for i in 0..self.dim {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..self.dim {
                if b[j].is_zero() {
                    continue;
                }
                let prod = a[i].mul(&b[j]);
                for k in 0..self.dim {
                    let c = &self.structure[i][j][k];
                    if !c.is_zero() {
                        out[k] = out[k].add(&prod.scale(&Gaussian::from_rational(c.clone())));
                    }
                }
            }
        }
        out
    }

    /// Nilpotency step bound: the maximal weight (grading forces
    /// [g_i, g_j] into g_{i+j}, so brackets of length > max weight vanish).
    pub fn step_bound(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(1)
    }

    /// Lists every violated axiom; an empty report means the algebra is valid.
    pub fn validate(&self) -> Vec<LieDefect> {
        let mut defects = Vec::new();
        for (j, &w) in self.weights.iter().enumerate() {
            if w < 1 {
                defects.push(LieDefect::WeightOutOfRange { j });
            }
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = &self.structure[i][j][k];
                    if (c + &self.structure[j][i][k]) != Rational::zero() {
                        if i <= j {
                            defects.push(LieDefect::Antisymmetry { i, j });
                        }
                    }
                    if !c.is_zero()
                        && self.weights[k] as u64 != self.weights[i] as u64 + self.weights[j] as u64
                    {
                        defects.push(LieDefect::Grading { i, j, k });
                    }
                }
            }
        }
        // Jacobi over all basis triples.
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in 0..n {
                        let mut sum = Rational::zero();
                        for m in 0..n {
                            sum += &self.structure[i][j][m] * &self.structure[m][k][l]
                                + &self.structure[j][k][m] * &self.structure[m][i][l]
                                + &self.structure[k][i][m] * &self.structure[m][j][l];
                        }
                        if !sum.is_zero() {
                            defects.push(LieDefect::Jacobi { i, j, k });
                            break;
                        }
                    }
                }
            }
        }
        defects.sort_by_key(|d| format!("{d:?}"));
        defects.dedup();
        defects
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Homogeneous dimension Q = q_1 + ... + q_n.
    pub fn homogeneous_dimension(&self) -> u64 {
        self.weights.iter().map(|&q| q as u64).sum()
    }

    pub fn weight_vector(&self, prefix: &str) -> WeightVector {
        WeightVector::for_family(prefix, &self.weights)
    }

    /// Smallest common multiple of all weights.
    pub fn weight_lcm(&self) -> u32 {
        self.weights.iter().fold(1u32, |acc, &q| lcm(acc, q))
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Heisenberg algebra h_n: dim 2n+1, [X_j, X_{n+j}] = X_{2n+1},
/// weights (1,...,1,2).
pub fn heisenberg(n: usize) -> GradedLieAlgebra {
    let dim = 2 * n + 1;
    let mut weights = vec![1; dim];
    weights[dim - 1] = 2;
    let brackets: Vec<_> = (0..n)
        .map(|j| (j, n + j, dim - 1, Rational::one()))
        .collect();
    GradedLieAlgebra::from_brackets(dim, weights, &brackets)
}

/// Heisenberg algebra with custom weights (k, l, k+l) on (X1, X2, X3);
/// only defined for n = 1.
pub fn heisenberg_weighted(k: u32, l: u32) -> GradedLieAlgebra {
    GradedLieAlgebra::from_brackets(
        3,
        vec![k, l, k + l],
        &[(0, 1, 2, Rational::one())],
    )
}

/// Engel algebra (step 3): [X1,X2] = X3, [X1,X3] = X4, weights (1,1,2,3).
pub fn engel() -> GradedLieAlgebra {
    GradedLieAlgebra::from_brackets(
        4,
        vec![1, 1, 2, 3],
        &[
            (0, 1, 2, Rational::one()),
            (0, 2, 3, Rational::one()),
        ],
    )
}

/// Abelian algebra of the given dimension with all weights 1.
pub fn abelian(n: usize) -> GradedLieAlgebra {
    GradedLieAlgebra::new_unchecked(n, vec![1; n], vec![vec![vec![Rational::zero(); n]; n]; n])
}

/// Abelian algebra with prescribed weights.
pub fn abelian_weighted(weights: Vec<u32>) -> GradedLieAlgebra {
    let n = weights.len();
    GradedLieAlgebra::new_unchecked(n, weights, vec![vec![vec![Rational::zero(); n]; n]; n])
}

/// Exact BCH group law of a graded algebra plus the inverse map i(v) = -v.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    pub algebra: GradedLieAlgebra,
    /// Variables (v1..vn, w1..wn); product components in these.
    pub vars: Arc<VarTable>,
    pub product: PolyMap,
}

impl GroupLaw {
    pub fn dim(&self) -> usize {
        self.algebra.dim
    }

    /// The product's j-th component as a polynomial in (v, w).
    pub fn component(&self, j: usize) -> &Polynomial {
        &self.product.components[j]
    }

    /// Multiplies two points given as polynomial coefficient vectors over an
    /// arbitrary variable table.
    pub fn multiply(
        &self,
        a: &[Polynomial],
        b: &[Polynomial],
    ) -> Result<Vec<Polynomial>, LieError> {
        let n = self.dim();
        assert_eq!(a.len(), n);
        assert_eq!(b.len(), n);
        let target = a[0].vars().clone();
        let mut subs = BTreeMap::new();
        for j in 0..n {
            subs.insert(format!("v{}", j + 1), a[j].clone());
            subs.insert(format!("w{}", j + 1), b[j].clone());
        }
        let mut out = Vec::with_capacity(n);
        for comp in &self.product.components {
            out.push(comp.substitute(&subs, &target)?);
        }
        Ok(out)
    }

    /// Checks unit, inverse, associativity and the triangular shape of
    /// Prop. "c_{j,a,b} v^a w^b"; returns violations as strings.
    pub fn check_axioms(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let n = self.dim();
        let vt = &self.vars;
        let v: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(vt, &format!("v{}", j + 1)).unwrap())
            .collect();
        let w: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(vt, &format!("w{}", j + 1)).unwrap())
            .collect();
        let zero: Vec<Polynomial> = (0..n).map(|_| Polynomial::zero(vt)).collect();
        let neg_v: Vec<Polynomial> = v.iter().map(|p| p.neg()).collect();

        match self.multiply(&v, &zero) {
            Ok(m) => {
                if m != v {
                    problems.push("m(v, 0) != v".to_string());
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
        match self.multiply(&zero, &w) {
            Ok(m) => {
                if m != w {
                    problems.push("m(0, w) != w".to_string());
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
        match self.multiply(&v, &neg_v) {
            Ok(m) => {
                if m != zero {
                    problems.push("m(v, -v) != 0".to_string());
                }
            }
            Err(e) => problems.push(e.to_string()),
        }

        // Associativity over a triple table (u, v, w).
        let triple = VarTable::concat(&[
            VarTable::family("u", VarRole::Group, n),
            VarTable::family("v", VarRole::Group, n),
            VarTable::family("w", VarRole::Group, n),
        ]);
        let u3: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(&triple, &format!("u{}", j + 1)).unwrap())
            .collect();
        let v3: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(&triple, &format!("v{}", j + 1)).unwrap())
            .collect();
        let w3: Vec<Polynomial> = (0..n)
            .map(|j| Polynomial::var(&triple, &format!("w{}", j + 1)).unwrap())
            .collect();
        let assoc = (|| -> Result<bool, LieError> {
            let uv = self.multiply(&u3, &v3)?;
            let uv_w = self.multiply(&uv, &w3)?;
            let vw = self.multiply(&v3, &w3)?;
            let u_vw = self.multiply(&u3, &vw)?;
            Ok(uv_w == u_vw)
        })();
        match assoc {
            Ok(true) => {}
            Ok(false) => problems.push("associativity fails".to_string()),
            Err(e) => problems.push(e.to_string()),
        }

        // Triangularity: (v.w)_j - v_j - w_j is a sum of mixed monomials
        // v^a w^b with a, b != 0 and [a] + [b] = q_j.
        let wv = self.algebra.weight_vector("v").union(&self.algebra.weight_vector("w"));
        for j in 0..n {
            let residual = self.component(j).sub(&v[j]).sub(&w[j]);
            let qj = self.algebra.weights[j] as i64;
            if !residual.is_homogeneous(&wv, qj).unwrap_or(false) {
                problems.push(format!(
                    "component {} violates triangular homogeneity",
                    j + 1
                ));
                continue;
            }
            let v_idx: Vec<usize> = (0..n).map(|i| vt.index_of(&format!("v{}", i + 1)).unwrap()).collect();
            let w_idx: Vec<usize> = (0..n).map(|i| vt.index_of(&format!("w{}", i + 1)).unwrap()).collect();
            for (mono, _) in residual.terms() {
                let av: i64 = v_idx.iter().map(|&ix| mono.0[ix]).sum();
                let bw: i64 = w_idx.iter().map(|&ix| mono.0[ix]).sum();
                if av == 0 || bw == 0 {
                    problems.push(format!(
                        "component {} has a pure-v or pure-w correction term",
                        j + 1
                    ));
                    break;
                }
            }
        }
        problems
    }
}

/// Computes the BCH group law via the Dynkin commutator series truncated at
/// the nilpotency step; exact over Q. Fails when the algebra is invalid.
pub fn bch_product(alg: &GradedLieAlgebra) -> Result<GroupLaw, LieError> {
    let defects = alg.validate();
    if !defects.is_empty() {
        let msgs: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Err(LieError::Invalid(msgs.join("; ")));
    }
    let n = alg.dim;
    let vars = VarTable::concat(&[
        VarTable::family("v", VarRole::Group, n),
        VarTable::family("w", VarRole::Group, n),
    ]);
    let x: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&vars, &format!("v{}", j + 1)).unwrap())
        .collect();
    let y: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&vars, &format!("w{}", j + 1)).unwrap())
        .collect();

    let step = alg.step_bound() as usize;
    let mut result: Vec<Polynomial> = (0..n).map(|_| Polynomial::zero(&vars)).collect();

    // Dynkin: Z = sum_{k>=1} (-1)^{k-1}/k sum_{(p_i,q_i) != 0}
    //   [X^{p1} Y^{q1} ... X^{pk} Y^{qk}] / (N * prod p_i! q_i!)
    // with the right-nested bracket of the word; brackets of word length > step
    // vanish, so compositions are enumerated with total length <= step.
    for k in 1..=step {
        let sign = if k % 2 == 1 {
            Rational::one()
        } else {
            -Rational::one()
        };
        let pairs = enumerate_pairs(k, step);
        for combo in pairs {
            let total: usize = combo.iter().map(|(p, q)| p + q).sum();
            if total == 0 || total > step {
                continue;
            }
            // Build the word X^{p1} Y^{q1} ... as basis of nested brackets.
            let mut word: Vec<bool> = Vec::with_capacity(total); // true = X, false = Y
            for &(p, q) in &combo {
                word.extend(std::iter::repeat(true).take(p));
                word.extend(std::iter::repeat(false).take(q));
            }
            // Right-nested bracket [w1,[w2,[...,[w_{m-1}, w_m]]]].
            let mut acc = if *word.last().unwrap() { x.clone() } else { y.clone() };
            let mut zero_bracket = false;
            for &letter in word[..word.len() - 1].iter().rev() {
                let operand = if letter { &x } else { &y };
                acc = alg.bracket_poly(operand, &acc);
                if acc.iter().all(|p| p.is_zero()) {
                    zero_bracket = true;
                    break;
                }
            }
            if zero_bracket {
                continue;
            }
            let mut denom = Rational::from_integer((total as i64 * k as i64).into());
            for &(p, q) in &combo {
                denom *= Rational::from_integer(factorial(p).into());
                denom *= Rational::from_integer(factorial(q).into());
            }
            let coeff = &sign / denom;
            let g = Gaussian::from_rational(coeff);
            for j in 0..n {
                result[j] = result[j].add(&acc[j].scale(&g));
            }
        }
    }

    let law = GroupLaw {
        algebra: alg.clone(),
        vars: vars.clone(),
        product: PolyMap::new(vars, result),
    };
    let axioms = law.check_axioms();
    if !axioms.is_empty() {
        return Err(LieError::Invalid(format!(
            "BCH law failed self-check: {}",
            axioms.join("; ")
        )));
    }
    Ok(law)
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product::<i64>().max(1)
}

/// All sequences of k pairs (p_i, q_i) != (0,0) with total <= max_total.
fn enumerate_pairs(k: usize, max_total: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(
        k: usize,
        max_total: usize,
        used: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining_slots = k - current.len();
        for p in 0..=(max_total - used) {
            for q in 0..=(max_total - used - p) {
                if p + q == 0 {
                    continue;
                }
                // Each remaining slot needs at least one letter.
                if used + p + q + (remaining_slots - 1) > max_total {
                    continue;
                }
                current.push((p, q));
                rec(k, max_total, used + p + q, current, out);
                current.pop();
            }
        }
    }
    rec(k, max_total, 0, &mut current, &mut out);
    out
}

/// Dilation map alpha_lambda(v)_j = lambda^{q_j} v_j with a formal scale
/// variable named `lambda`.
pub fn dilation(alg: &GradedLieAlgebra) -> PolyMap {
    let n = alg.dim;
    let vars = VarTable::concat(&[
        VarTable::family("v", VarRole::Group, n),
        vec![Var {
            name: "lambda".into(),
            role: VarRole::Scale,
        }],
    ]);
    let components = (0..n)
        .map(|j| {
            let mut exps = vec![0i64; vars.len()];
            exps[j] = 1;
            exps[n] = alg.weights[j] as i64;
            Polynomial::monomial(&vars, exps, Gaussian::one()).unwrap()
        })
        .collect();
    PolyMap::new(vars, components)
}

/// Verifies m(alpha_lambda v, alpha_lambda w) = alpha_lambda m(v, w) as an
/// identity in Q[lambda][v, w].
pub fn dilation_automorphism_check(law: &GroupLaw) -> bool {
    let n = law.dim();
    let table = VarTable::concat(&[
        VarTable::family("v", VarRole::Group, n),
        VarTable::family("w", VarRole::Group, n),
        vec![Var {
            name: "lambda".into(),
            role: VarRole::Scale,
        }],
    ]);
    let lam_idx = table.index_of("lambda").unwrap();
    let scaled = |prefix: &str, j: usize| -> Polynomial {
        let mut exps = vec![0i64; table.len()];
        exps[table.index_of(&format!("{prefix}{}", j + 1)).unwrap()] = 1;
        exps[lam_idx] = law.algebra.weights[j] as i64;
        Polynomial::monomial(&table, exps, Gaussian::one()).unwrap()
    };
    let av: Vec<Polynomial> = (0..n).map(|j| scaled("v", j)).collect();
    let aw: Vec<Polynomial> = (0..n).map(|j| scaled("w", j)).collect();
    let v: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&table, &format!("v{}", j + 1)).unwrap())
        .collect();
    let w: Vec<Polynomial> = (0..n)
        .map(|j| Polynomial::var(&table, &format!("w{}", j + 1)).unwrap())
        .collect();
    let lhs = match law.multiply(&av, &aw) {
        Ok(m) => m,
        Err(_) => return false,
    };
    let m_vw = match law.multiply(&v, &w) {
        Ok(m) => m,
        Err(_) => return false,
    };
    for j in 0..n {
        let mut exps = vec![0i64; table.len()];
        exps[lam_idx] = law.algebra.weights[j] as i64;
        let lam_pow = Polynomial::monomial(&table, exps, Gaussian::one()).unwrap();
        if lhs[j] != m_vw[j].mul(&lam_pow) {
            return false;
        }
    }
    true
}

/// Homogeneous quasi-norm |v|_alpha = (sum v_j^{2q/q_j})^{1/2q} for a common
/// multiple q of the weights.
pub fn quasi_norm(alg: &GradedLieAlgebra, v: &[f64], q: u32) -> Result<f64, LieError> {
    if v.len() != alg.dim {
        return Err(LieError::IndexOutOfRange(v.len(), alg.dim));
    }
    for &w in &alg.weights {
        if q % w != 0 {
            return Err(LieError::NotCommonMultiple(q));
        }
    }
    let mut sum = 0.0f64;
    for (j, &vj) in v.iter().enumerate() {
        sum += vj.powi((2 * q / alg.weights[j]) as i32);
    }
    Ok(sum.powf(1.0 / (2.0 * q as f64)))
}

/// Exact 2q-th power of the quasi-norm at a rational point.
pub fn quasi_norm_pow_2q(alg: &GradedLieAlgebra, v: &[Rational], q: u32) -> Result<Rational, LieError> {
    if v.len() != alg.dim {
        return Err(LieError::IndexOutOfRange(v.len(), alg.dim));
    }
    for &w in &alg.weights {
        if q % w != 0 {
            return Err(LieError::NotCommonMultiple(q));
        }
    }
    let mut sum = Rational::zero();
    for (j, vj) in v.iter().enumerate() {
        let e = (2 * q / alg.weights[j]) as usize;
        let mut p = Rational::one();
        for _ in 0..e {
            p *= vj;
        }
        sum += p;
    }
    Ok(sum)
}

/// Polynomial vector field: one coefficient polynomial per space direction.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    pub components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Commutator of vector fields [A, B]_k = A(B_k) - B(A_k).
    pub fn commutator(&self, other: &PolyVectorField) -> PolyVectorField {
        let d = self.dim();
        assert_eq!(d, other.dim());
        let vars = self.components[0].vars().clone();
        let mut out = Vec::with_capacity(d);
        for k in 0..d {
            let mut acc = Polynomial::zero(&vars);
            for i in 0..d {
                acc = acc.add(&self.components[i].mul(&other.components[k].partial_derivative_idx(i)));
                acc = acc.sub(&other.components[i].mul(&self.components[k].partial_derivative_idx(i)));
            }
            out.push(acc);
        }
        PolyVectorField { components: out }
    }

    pub fn scale(&self, c: &Gaussian) -> PolyVectorField {
        PolyVectorField {
            components: self.components.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &PolyVectorField) -> PolyVectorField {
        PolyVectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|p| p.is_zero())
    }
}

/// Left-invariant vector field of the j-th basis direction:
/// components d/ds m(v, s e_j) at s = 0, as polynomials in v1..vn.
pub fn left_invariant_vf(law: &GroupLaw, j: usize) -> Result<PolyVectorField, LieError> {
    let n = law.dim();
    if j >= n {
        return Err(LieError::IndexOutOfRange(j, n));
    }
    let vt = VarTable::new(VarTable::family("v", VarRole::Group, n));
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        // d/dw_j of the k-th product component, then w = 0.
        let mut p = law.component(k).partial_derivative(&format!("w{}", j + 1))?;
        for i in 0..n {
            p = p.eval_var(&format!("w{}", i + 1), &Rational::zero());
        }
        components.push(p.embed(&vt)?);
    }
    Ok(PolyVectorField { components })
}

/// Builds the bar group: the (2n+1)-dimensional graded algebra on the basis
/// (xi_n-dual, ..., xi_1-dual, tau, X_1, ..., X_n) with weights
/// (r+1-q_n, ..., r+1-q_1, r+1, q_1, ..., q_n) and brackets
/// [X_i, xi^j] = -sum_k c_{ik}^j xi^k + q_i delta_ij tau,
/// [X_i, X_j] as in the input algebra, tau central.
pub fn build_bar_group(alg: &GradedLieAlgebra) -> Result<GradedLieAlgebra, LieError> {
    let defects = alg.validate();
    if !defects.is_empty() {
        let msgs: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Err(LieError::Invalid(msgs.join("; ")));
    }
    let n = alg.dim;
    let r = alg.step_bound();
    let dim = 2 * n + 1;
    // Index layout: 0..n are xi^{n}, xi^{n-1}, ..., xi^{1}; n is tau;
    // n+1..=2n are X_1..X_n.
    let xi_slot = |j: usize| n - 1 - j; // dual of X_{j+1} lives at slot n-1-j
    let tau_slot = n;
    let x_slot = |i: usize| n + 1 + i;

    let mut weights = vec![0u32; dim];
    for j in 0..n {
        weights[xi_slot(j)] = r + 1 - alg.weights[j];
    }
    weights[tau_slot] = r + 1;
    for i in 0..n {
        weights[x_slot(i)] = alg.weights[i];
    }

    let mut brackets: Vec<(usize, usize, usize, Rational)> = Vec::new();
    // Group part.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = alg.structure_constant(i, j, k);
                if !c.is_zero() && i < j {
                    brackets.push((x_slot(i), x_slot(j), x_slot(k), c.clone()));
                }
            }
        }
    }
    // Mixed part: [X_i, xi^j] = ad*_{X_i} xi^j + xi^j(D X_i) tau
    //            = -sum_k c_{ik}^j xi^k + q_i delta_{ij} tau.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = alg.structure_constant(i, k, j);
                if !c.is_zero() {
                    brackets.push((x_slot(i), xi_slot(j), xi_slot(k), -c.clone()));
                }
            }
            if i == j {
                brackets.push((
                    x_slot(i),
                    xi_slot(j),
                    tau_slot,
                    Rational::from_integer((alg.weights[i] as i64).into()),
                ));
            }
        }
    }
    let mut bar = GradedLieAlgebra::from_brackets(dim, weights, &brackets);
    for j in 0..n {
        bar.labels[xi_slot(j)] = format!("xi{}", j + 1);
    }
    bar.labels[tau_slot] = "tau".into();
    for i in 0..n {
        bar.labels[x_slot(i)] = format!("X{}", i + 1);
    }
    let defects = bar.validate();
    if !defects.is_empty() {
        let msgs: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Err(LieError::Invalid(format!(
            "bar group failed validation: {}",
            msgs.join("; ")
        )));
    }
    Ok(bar)
}

/// Nilpotency step via the lower central series of the structure constants.
pub fn nilpotency_step(alg: &GradedLieAlgebra) -> usize {
    // Span-based lower central series over Q.
    let n = alg.dim;
    let full: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    let mut current = full.clone();
    let mut step = 0;
    loop {
        // next = span of [full, current]
        let mut gens: Vec<Vec<Rational>> = Vec::new();
        for a in &full {
            for b in &current {
                let mut out = vec![Rational::zero(); n];
                for i in 0..n {
                    if a[i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if b[j].is_zero() {
                            continue;
                        }
                        let prod = &a[i] * &b[j];
                        for k in 0..n {
                            let c = alg.structure_constant(i, j, k);
                            if !c.is_zero() {
                                out[k] = &out[k] + &(&prod * c);
                            }
                        }
                    }
                }
                if out.iter().any(|x| !x.is_zero()) {
                    gens.push(out);
                }
            }
        }
        let basis = row_reduce(gens);
        step += 1;
        if basis.is_empty() {
            return step;
        }
        current = basis;
        if step > n + 1 {
            return step; // not nilpotent; caller treats as pathological
        }
    }
}

/// Row reduction over Q returning a basis of the row span.
pub fn row_reduce(rows: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for mut row in rows {
        for b in &basis {
            let pivot = b.iter().position(|x| !x.is_zero()).unwrap();
            if !row[pivot].is_zero() {
                let factor = &row[pivot] / &b[pivot];
                for k in 0..row.len() {
                    let delta = &factor * &b[k];
                    row[k] = &row[k] - &delta;
                }
            }
        }
        if row.iter().any(|x| !x.is_zero()) {
            basis.push(row);
        }
    }
    basis
}
