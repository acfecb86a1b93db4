//! Differential operators with polynomial coefficients, normal forms with
//! respect to fundamental vector fields, orders, formal adjoints, and the
//! principal cocosymbol into the enveloping algebra of the symbol group.

use crate::action::{ActionError, DeformedAction, PropertyP, SymbolAlgebra};
use crate::coeff::{Gaussian, Rational};
use crate::lie::{GradedLieAlgebra, PolyVectorField};
use crate::poly::{
    invert_constant_det_matrix, PolyError, Polynomial, VarRole, VarTable,
};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("operators act on different spaces")]
    SpaceMismatch,
    #[error("property (P) is not established: {0}")]
    PropertyPMissing(String),
    #[error("normal form has order {got}, exceeding requested degree {requested}")]
    OrderExceeded { got: i64, requested: i64 },
    #[error("property (R) is required: {0}")]
    PropertyRMissing(String),
    #[error("action error: {0}")]
    Action(#[from] ActionError),
    #[error("polynomial error: {0}")]
    Poly(#[from] PolyError),
}

/// Differential operator sum_a p_a(x) d^a in coefficients-left canonical
/// form; keys are derivative multi-indices on the space variables.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyDiffOp {
    pub space: Arc<VarTable>,
    terms: BTreeMap<Vec<u32>, Polynomial>,
}

impl PolyDiffOp {
    pub fn zero(space: &Arc<VarTable>) -> Self {
        PolyDiffOp {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn space_dim(&self) -> usize {
        self.space.len()
    }

    /// Multiplication operator by a polynomial.
    pub fn multiplication(p: &Polynomial) -> Self {
        let space = p.vars().clone();
        let mut terms = BTreeMap::new();
        if !p.is_zero() {
            terms.insert(vec![0; space.len()], p.clone());
        }
        PolyDiffOp { space, terms }
    }

    pub fn identity(space: &Arc<VarTable>) -> Self {
        Self::multiplication(&Polynomial::one(space))
    }

    /// The coordinate derivative d_j.
    pub fn partial(space: &Arc<VarTable>, j: usize) -> Self {
        let mut a = vec![0; space.len()];
        a[j] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(a, Polynomial::one(space));
        PolyDiffOp {
            space: space.clone(),
            terms,
        }
    }

    /// Single term p(x) d^a.
    pub fn term(p: Polynomial, a: Vec<u32>) -> Self {
        let space = p.vars().clone();
        assert_eq!(a.len(), space.len());
        let mut terms = BTreeMap::new();
        if !p.is_zero() {
            terms.insert(a, p);
        }
        PolyDiffOp { space, terms }
    }

    /// A polynomial vector field as a first-order operator.
    pub fn from_vector_field(f: &PolyVectorField) -> Self {
        let space = f.components[0].vars().clone();
        let mut out = Self::zero(&space);
        for (j, comp) in f.components.iter().enumerate() {
            let mut a = vec![0; space.len()];
            a[j] = 1;
            out = out.add(&Self::term(comp.clone(), a));
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Polynomial)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, a: Vec<u32>, p: Polynomial) {
        if p.is_zero() {
            return;
        }
        match self.terms.entry(a) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(p);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&p);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &PolyDiffOp) -> PolyDiffOp {
        assert!(*self.space.as_ref() == *other.space.as_ref());
        let mut out = self.clone();
        for (a, p) in &other.terms {
            out.insert(a.clone(), p.clone());
        }
        out
    }

    pub fn sub(&self, other: &PolyDiffOp) -> PolyDiffOp {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PolyDiffOp {
        let mut out = self.clone();
        for p in out.terms.values_mut() {
            *p = p.neg();
        }
        out
    }

    pub fn scale(&self, c: &Gaussian) -> PolyDiffOp {
        if c.is_zero() {
            return Self::zero(&self.space);
        }
        let mut out = self.clone();
        for p in out.terms.values_mut() {
            *p = p.scale(c);
        }
        out
    }

    /// Leibniz composition: keeps the canonical coefficients-left form.
    pub fn compose(&self, other: &PolyDiffOp) -> PolyDiffOp {
        assert!(*self.space.as_ref() == *other.space.as_ref());
        let d = self.space.len();
        let mut out = Self::zero(&self.space);
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                // p d^a (q d^b) = sum_{c <= a} binom(a, c) p d^c(q) d^{a - c + b}
                for c in multi_indices_below(a) {
                    let mut coeff = Rational::from_integer(1.into());
                    for j in 0..d {
                        coeff *= Rational::from_integer(binomial(a[j], c[j]).into());
                    }
                    let mut dq = q.clone();
                    for j in 0..d {
                        for _ in 0..c[j] {
                            dq = dq.partial_derivative_idx(j);
                        }
                        if dq.is_zero() {
                            break;
                        }
                    }
                    if dq.is_zero() {
                        continue;
                    }
                    let mut exps = vec![0u32; d];
                    for j in 0..d {
                        exps[j] = a[j] - c[j] + b[j];
                    }
                    out.insert(
                        exps,
                        p.mul(&dq).scale(&Gaussian::from_rational(coeff)),
                    );
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &PolyDiffOp) -> PolyDiffOp {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn pow(&self, k: u32) -> PolyDiffOp {
        let mut acc = Self::identity(&self.space);
        for _ in 0..k {
            acc = acc.compose(self);
        }
        acc
    }

    /// Total differential order (max |a|).
    pub fn diff_order(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.iter().sum()).max()
    }

    /// Formal adjoint sum (-1)^{|a|} d^a conj(p_a), re-expanded.
    pub fn formal_adjoint(&self) -> PolyDiffOp {
        let d = self.space.len();
        let mut out = Self::zero(&self.space);
        for (a, p) in &self.terms {
            let conj_p = conj_poly(p);
            let deriv = Self::term(Polynomial::one(&self.space), a.clone());
            let mult = Self::multiplication(&conj_p);
            let mut term = deriv.compose(&mult);
            if a.iter().sum::<u32>() % 2 == 1 {
                term = term.neg();
            }
            out = out.add(&term);
            let _ = d;
        }
        out
    }

    /// Kohn-Nirenberg full symbol: substitute d_j -> i xi_j. Returns a
    /// polynomial over (space vars, xi1..xid).
    pub fn full_symbol(&self) -> Polynomial {
        let d = self.space.len();
        let table = VarTable::concat(&[
            self.space.vars().to_vec(),
            VarTable::family("xi", VarRole::Dual, d),
        ]);
        let mut out = Polynomial::zero(&table);
        for (a, p) in &self.terms {
            let mut term = p.embed(&table).unwrap();
            for j in 0..d {
                if a[j] > 0 {
                    let xi = Polynomial::var(&table, &format!("xi{}", j + 1)).unwrap();
                    term = term
                        .mul(&xi.pow(a[j]))
                        .scale(&Gaussian::i_pow(a[j]));
                }
            }
            out = out.add(&term);
        }
        out
    }
}

impl std::fmt::Display for PolyDiffOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, p) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({p})")?;
            for (j, &e) in a.iter().enumerate() {
                if e == 1 {
                    write!(f, " d_{}", self.space.var(j).name)?;
                } else if e > 1 {
                    write!(f, " d_{}^{}", self.space.var(j).name, e)?;
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for PolyDiffOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

fn conj_poly(p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero(p.vars());
    for (m, c) in p.terms() {
        out = out.add(
            &Polynomial::monomial(p.vars(), m.0.clone(), c.conj()).expect("same monomial"),
        );
    }
    out
}

fn binomial(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    let mut r = 1i64;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// All multi-indices c with 0 <= c <= a componentwise.
fn multi_indices_below(a: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &aj in a {
        let mut next = Vec::with_capacity(out.len() * (aj as usize + 1));
        for prefix in &out {
            for c in 0..=aj {
                let mut p = prefix.clone();
                p.push(c);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Multi-indices a on `len` slots with |a| = total.
fn multi_indices_of_total(len: usize, total: u32) -> Vec<Vec<u32>> {
    if len == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for rest in multi_indices_of_total(len - 1, total - first) {
            let mut v = Vec::with_capacity(len);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// The unique writing sum c_{a,b} x^b (hat X^1)^a of an operator under
/// property (P); keys are (a: group multi-index, b: space multi-index).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub group_dim: usize,
    pub space_dim: usize,
    pub coefficients: BTreeMap<(Vec<u32>, Vec<u32>), Gaussian>,
}

impl NormalForm {
    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    fn insert(&mut self, key: (Vec<u32>, Vec<u32>), c: Gaussian) {
        if c.is_zero() {
            return;
        }
        match self.coefficients.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    /// Order: max [a]_alpha + [b]_beta over nonzero coefficients; None for 0.
    pub fn order(&self, alpha: &[u32], beta: &[u32]) -> Option<i64> {
        self.coefficients
            .keys()
            .map(|(a, b)| weighted(a, alpha) + weighted(b, beta))
            .max()
    }

    /// Rebuilds the operator sum c_{a,b} x^b (hat X^1)^a.
    pub fn reconstruct(&self, fields: &[PolyDiffOp], space: &Arc<VarTable>) -> PolyDiffOp {
        let mut out = PolyDiffOp::zero(space);
        for ((a, b), c) in &self.coefficients {
            let mut xb = Polynomial::constant(space, c.clone());
            for (j, &e) in b.iter().enumerate() {
                if e > 0 {
                    xb = xb.mul(&Polynomial::var_by_index(space, j).pow(e));
                }
            }
            let mut op = PolyDiffOp::multiplication(&xb);
            for (j, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    op = op.compose(&fields[j]);
                }
            }
            out = out.add(&op);
        }
        out
    }

    /// Principal cocosymbol: the [a]+[b] = m part mapped to
    /// sum c_{a,b} (-i)^{|b|} eta^b X^a in the enveloping algebra.
    pub fn cocosymbol(
        &self,
        m: i64,
        sg: &SymbolAlgebra,
    ) -> Result<EnvelopingElement, OpError> {
        let alpha: Vec<u32> = (0..sg.group_dim)
            .map(|j| sg.algebra.weights[sg.x_slot(j)])
            .collect();
        let beta: Vec<u32> = (0..sg.space_dim)
            .map(|i| sg.algebra.weights[sg.eta_slot(i)])
            .collect();
        if let Some(ord) = self.order(&alpha, &beta) {
            if ord > m {
                return Err(OpError::OrderExceeded {
                    got: ord,
                    requested: m,
                });
            }
        }
        let mut out = EnvelopingElement::zero(&sg.algebra);
        for ((a, b), c) in &self.coefficients {
            if weighted(a, &alpha) + weighted(b, &beta) != m {
                continue;
            }
            let total_b: u32 = b.iter().sum();
            let coeff = c.clone() * Gaussian::i_pow(total_b).conj_sign();
            // Word eta^b X^a is already in PBW order (etas before Xs).
            let mut exps = vec![0u32; sg.dim()];
            for (i, &e) in b.iter().enumerate() {
                exps[sg.eta_slot(i)] = e;
            }
            for (j, &e) in a.iter().enumerate() {
                exps[sg.x_slot(j)] = e;
            }
            out.insert(exps, coeff);
        }
        Ok(out)
    }
}

trait ConjSign {
    /// (-i)^k given i^k: conjugate swaps i and -i.
    fn conj_sign(self) -> Gaussian;
}

impl ConjSign for Gaussian {
    fn conj_sign(self) -> Gaussian {
        self.conj()
    }
}

fn weighted(idx: &[u32], w: &[u32]) -> i64 {
    idx.iter()
        .zip(w)
        .map(|(&e, &q)| e as i64 * q as i64)
        .sum()
}

/// Fundamental vector fields and the rewriting data of a (P)-action.
pub struct OperatorCalculus {
    pub action: DeformedAction,
    pub space: Arc<VarTable>,
    /// hat X^1_j as first-order operators.
    pub fields: Vec<PolyDiffOp>,
    /// d_k = sum_j inv[j][k] hat X^1_j (polynomial matrix inverse).
    inv_matrix: Vec<Vec<Polynomial>>,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

impl OperatorCalculus {
    /// Requires the constructive (P) check to succeed.
    pub fn new(action: &DeformedAction) -> Result<Self, OpError> {
        match action.base.check_property_p() {
            PropertyP::Holds { .. } => {}
            PropertyP::Undetermined { reason } => {
                return Err(OpError::PropertyPMissing(reason));
            }
        }
        let d = action.space_dim();
        let n = action.group_dim();
        assert_eq!(d, n, "(P) forces matching dimensions");
        let space = VarTable::new(VarTable::family("x", VarRole::Space, d));
        let mut fields = Vec::with_capacity(n);
        let mut columns: Vec<PolyVectorField> = Vec::with_capacity(n);
        for j in 0..n {
            let f = action
                .fundamental_field_at(j, &Rational::from_integer(1.into()))?;
            fields.push(PolyDiffOp::from_vector_field(&f));
            columns.push(f);
        }
        // M[k][j] = coefficient of d_k in hat X_j; invert exactly.
        let mut matrix = vec![vec![Polynomial::zero(&space); n]; d];
        for (j, col) in columns.iter().enumerate() {
            for k in 0..d {
                matrix[k][j] = col.components[k].clone();
            }
        }
        let inv_matrix = invert_constant_det_matrix(&matrix).ok_or_else(|| {
            OpError::PropertyPMissing(
                "orbit-map Jacobian is not a nonzero constant".into(),
            )
        })?;
        Ok(OperatorCalculus {
            action: action.clone(),
            space,
            fields,
            inv_matrix,
            alpha: {
                let a = &action.base.group.algebra;
                a.weights.clone()
            },
            beta: action.base.space_weights.clone(),
        })
    }

    pub fn field(&self, j: usize) -> &PolyDiffOp {
        &self.fields[j]
    }

    /// x_j as a multiplication operator.
    pub fn coordinate(&self, j: usize) -> PolyDiffOp {
        PolyDiffOp::multiplication(&Polynomial::var_by_index(&self.space, j))
    }

    pub fn partial(&self, j: usize) -> PolyDiffOp {
        PolyDiffOp::partial(&self.space, j)
    }

    /// Unique normal form sum c_{a,b} x^b (hat X^1)^a. Round-trips exactly.
    pub fn normal_form(&self, op: &PolyDiffOp) -> Result<NormalForm, OpError> {
        let d = self.space.len();
        let n = self.fields.len();
        let mut nf = NormalForm {
            group_dim: n,
            space_dim: d,
            coefficients: BTreeMap::new(),
        };
        let mut remainder = op.clone();
        // Reduce by total differential order. At order D the candidate top
        // part is obtained from the commutative principal symbol: write the
        // order-D symbol in the field symbols sigma_j = sum_k M_{kj} xi_k by
        // substituting xi_k = sum_j N_{jk} sigma_j exactly.
        while let Some(dd) = remainder.diff_order() {
            if dd == 0 {
                // Pure multiplication part.
                let p = remainder.terms.get(&vec![0u32; d]).cloned();
                if let Some(p) = p {
                    for (mono, c) in p.terms() {
                        let b: Vec<u32> = mono.0.iter().map(|&e| e as u32).collect();
                        nf.insert((vec![0; n], b), c.clone());
                    }
                }
                break;
            }
            // Symbol ring (x, s1..sn) where s_j stands for sigma_j.
            let sym_table = VarTable::concat(&[
                self.space.vars().to_vec(),
                VarTable::family("s", VarRole::Dual, n),
            ]);
            let mut top = Polynomial::zero(&sym_table);
            for (a, p) in remainder.terms.iter() {
                if a.iter().sum::<u32>() != dd {
                    continue;
                }
                // xi^a with xi_k = sum_j N[j][k] s_j.
                let mut term = p.embed(&sym_table).unwrap();
                for k in 0..d {
                    if a[k] == 0 {
                        continue;
                    }
                    let mut xi_k = Polynomial::zero(&sym_table);
                    for j in 0..n {
                        let coeff = self.inv_matrix[j][k].embed(&sym_table).unwrap();
                        let s_j = Polynomial::var(&sym_table, &format!("s{}", j + 1)).unwrap();
                        xi_k = xi_k.add(&coeff.mul(&s_j));
                    }
                    term = term.mul(&xi_k.pow(a[k]));
                }
                top = top.add(&term);
            }
            // Collect coefficients of s^a as polynomials in x, then split into
            // normal-form entries; subtract the realized operator.
            let mut candidate = NormalForm {
                group_dim: n,
                space_dim: d,
                coefficients: BTreeMap::new(),
            };
            let s_idx: Vec<usize> = (0..n)
                .map(|j| sym_table.index_of(&format!("s{}", j + 1)).unwrap())
                .collect();
            let x_idx: Vec<usize> = (0..d)
                .map(|k| sym_table.index_of(&format!("x{}", k + 1)).unwrap())
                .collect();
            for (mono, c) in top.terms() {
                let a: Vec<u32> = s_idx.iter().map(|&ix| mono.0[ix] as u32).collect();
                let b: Vec<u32> = x_idx.iter().map(|&ix| mono.0[ix] as u32).collect();
                candidate.insert((a, b), c.clone());
            }
            let realized = candidate.reconstruct(&self.fields, &self.space);
            remainder = remainder.sub(&realized);
            for (key, c) in candidate.coefficients {
                nf.insert(key, c);
            }
            // The top order strictly dropped: realized top part matches.
            if let Some(new_d) = remainder.diff_order() {
                assert!(
                    new_d < dd,
                    "normal-form reduction failed to lower the order"
                );
            }
        }
        Ok(nf)
    }
}

/// Fundamental vector field of a deformed action at a rational time as a
/// first-order operator on (x1..xd).
pub fn fundamental_vf(
    action: &DeformedAction,
    j: usize,
    t0: &Rational,
) -> Result<PolyDiffOp, OpError> {
    let f = action.fundamental_field_at(j, t0)?;
    Ok(PolyDiffOp::from_vector_field(&f))
}

/// Element of the enveloping algebra in PBW normal form: monomials are
/// exponent vectors over the ordered basis of the algebra.
#[derive(Clone, PartialEq)]
pub struct EnvelopingElement {
    pub algebra: GradedLieAlgebra,
    terms: BTreeMap<Vec<u32>, Gaussian>,
}

impl EnvelopingElement {
    pub fn zero(algebra: &GradedLieAlgebra) -> Self {
        EnvelopingElement {
            algebra: algebra.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(algebra: &GradedLieAlgebra) -> Self {
        let mut e = Self::zero(algebra);
        e.insert(vec![0; algebra.dim], Gaussian::one());
        e
    }

    pub fn generator(algebra: &GradedLieAlgebra, slot: usize) -> Self {
        let mut exps = vec![0; algebra.dim];
        exps[slot] = 1;
        let mut e = Self::zero(algebra);
        e.insert(exps, Gaussian::one());
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Gaussian)> {
        self.terms.iter()
    }

    pub fn insert(&mut self, exps: Vec<u32>, c: Gaussian) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &EnvelopingElement) -> EnvelopingElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &EnvelopingElement) -> EnvelopingElement {
        self.add(&other.scale(&-Gaussian::one()))
    }

    pub fn scale(&self, c: &Gaussian) -> EnvelopingElement {
        let mut out = Self::zero(&self.algebra);
        for (m, k) in &self.terms {
            out.insert(m.clone(), k.clone() * c.clone());
        }
        out
    }

    /// Product with PBW normalization.
    pub fn mul(&self, other: &EnvelopingElement) -> EnvelopingElement {
        let mut out = Self::zero(&self.algebra);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let word = [exps_to_word(m1), exps_to_word(m2)].concat();
                let rewritten =
                    pbw_normal_form_word(&self.algebra, &word, RewriteStrategy::Leftmost);
                for (m, c) in rewritten.terms {
                    out.insert(m, c * c1.clone() * c2.clone());
                }
            }
        }
        out
    }

    /// Antihomomorphic star: reverses words and negates generators.
    pub fn star(&self) -> EnvelopingElement {
        let mut out = Self::zero(&self.algebra);
        for (m, c) in &self.terms {
            let word = exps_to_word(m);
            let reversed: Vec<usize> = word.iter().rev().copied().collect();
            let sign = if word.len() % 2 == 1 {
                -Gaussian::one()
            } else {
                Gaussian::one()
            };
            let rewritten =
                pbw_normal_form_word(&self.algebra, &reversed, RewriteStrategy::Leftmost);
            for (mm, cc) in rewritten.terms {
                out.insert(mm, cc * c.conj() * sign.clone());
            }
        }
        out
    }

    /// Graded degree: max sum of weights over monomials (None when zero).
    pub fn graded_degree(&self) -> Option<i64> {
        self.terms
            .keys()
            .map(|m| {
                m.iter()
                    .zip(&self.algebra.weights)
                    .map(|(&e, &q)| e as i64 * q as i64)
                    .sum()
            })
            .max()
    }
}

impl std::fmt::Display for EnvelopingElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (slot, &e) in m.iter().enumerate() {
                if e == 1 {
                    write!(f, " {}", self.algebra.labels[slot])?;
                } else if e > 1 {
                    write!(f, " {}^{}", self.algebra.labels[slot], e)?;
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for EnvelopingElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

fn exps_to_word(exps: &[u32]) -> Vec<usize> {
    let mut word = Vec::new();
    for (slot, &e) in exps.iter().enumerate() {
        word.extend(std::iter::repeat(slot).take(e as usize));
    }
    word
}

/// Rewrite order for the adjacent-transposition confluence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteStrategy {
    Leftmost,
    Rightmost,
}

/// Repeated adjacent-transposition rewriting Z_i Z_j = Z_j Z_i + [Z_i, Z_j]
/// (for i > j in the basis order) until every word is ordered. Terminates
/// because each step either shortens the word or lowers its inversion count.
pub fn pbw_normal_form_word(
    algebra: &GradedLieAlgebra,
    word: &[usize],
    strategy: RewriteStrategy,
) -> EnvelopingElement {
    let mut out = EnvelopingElement::zero(algebra);
    let mut stack: Vec<(Vec<usize>, Gaussian)> = vec![(word.to_vec(), Gaussian::one())];
    while let Some((w, coeff)) = stack.pop() {
        // Locate an inversion.
        let positions: Vec<usize> = (0..w.len().saturating_sub(1))
            .filter(|&i| w[i] > w[i + 1])
            .collect();
        let pos = match strategy {
            RewriteStrategy::Leftmost => positions.first().copied(),
            RewriteStrategy::Rightmost => positions.last().copied(),
        };
        match pos {
            None => {
                let mut exps = vec![0u32; algebra.dim];
                for &slot in &w {
                    exps[slot] += 1;
                }
                out.insert(exps, coeff);
            }
            Some(i) => {
                // Swap.
                let mut swapped = w.clone();
                swapped.swap(i, i + 1);
                stack.push((swapped, coeff.clone()));
                // Bracket insertion.
                let bracket = algebra.bracket_basis(w[i], w[i + 1]);
                for (k, c) in bracket.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let mut shorter = Vec::with_capacity(w.len() - 1);
                    shorter.extend_from_slice(&w[..i]);
                    shorter.push(k);
                    shorter.extend_from_slice(&w[i + 2..]);
                    stack.push((
                        shorter,
                        coeff.clone() * Gaussian::from_rational(c.clone()),
                    ));
                }
            }
        }
    }
    out
}

/// Convenience: PBW normal form of a raw word given by basis slots.
pub fn pbw_normal_form(
    algebra: &GradedLieAlgebra,
    word: &[usize],
) -> EnvelopingElement {
    pbw_normal_form_word(algebra, word, RewriteStrategy::Leftmost)
}

/// All normal-form keys (a, b) with [a]_alpha + [b]_beta equal to a given
/// order; used by random-operator generators in tests.
pub fn keys_of_order(
    alpha: &[u32],
    beta: &[u32],
    m: i64,
) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    let max_total = m.max(0) as u32;
    for ta in 0..=max_total {
        for a in multi_indices_of_total(alpha.len(), ta) {
            let wa = weighted(&a, alpha);
            if wa > m {
                continue;
            }
            for tb in 0..=(max_total - ta) {
                for b in multi_indices_of_total(beta.len(), tb) {
                    if wa + weighted(&b, beta) == m {
                        out.push((a.clone(), b.clone()));
                    }
                }
            }
        }
    }
    out
}
