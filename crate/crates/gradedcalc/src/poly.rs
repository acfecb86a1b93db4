//! Exact multivariate polynomial and polynomial-map arithmetic.
//!
//! Polynomials carry an ordered variable table with role tags. Variables with
//! a parameter role (time, scale) may hold negative (Laurent) exponents, which
//! is how "for all t" and "for all lambda > 0" statements become decidable
//! identities. Terms are kept in canonical graded-lex order with no zero
//! coefficients, so equality is structural.

use crate::coeff::{Gaussian, Rational};
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("negative exponent on non-parameter variable `{0}`")]
    LaurentNotAllowed(String),
    #[error("variable tables are incompatible: {0}")]
    IncompatibleVars(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("map is not triangular: {0}")]
    NotTriangular(String),
    #[error("weight vector does not cover variable `{0}`")]
    MissingWeight(String),
}

/// Role tag of a variable; parameters admit Laurent exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarRole {
    /// Space coordinate x_j.
    Space,
    /// Group coordinate v_j (exponential coordinates).
    Group,
    /// Deformation time t.
    Time,
    /// Dilation scale lambda.
    Scale,
    /// Dual coordinate (eta, xi).
    Dual,
    /// Generic auxiliary variable.
    Aux,
}

impl VarRole {
    pub fn is_parameter(self) -> bool {
        matches!(self, VarRole::Time | VarRole::Scale)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    pub name: String,
    pub role: VarRole,
}

/// Ordered list of variables; shared between polynomials via `Arc`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarTable {
    vars: Vec<Var>,
}

impl VarTable {
    pub fn new(vars: Vec<Var>) -> Arc<Self> {
        let mut seen = std::collections::HashSet::new();
        for v in &vars {
            assert!(seen.insert(v.name.clone()), "duplicate variable {}", v.name);
        }
        Arc::new(VarTable { vars })
    }

    /// Numbered family: `x1..xd` for prefix "x".
    pub fn family(prefix: &str, role: VarRole, count: usize) -> Vec<Var> {
        (1..=count)
            .map(|j| Var {
                name: format!("{prefix}{j}"),
                role,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn var(&self, idx: usize) -> &Var {
        &self.vars[idx]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Concatenation of several variable groups into one table.
    pub fn concat(groups: &[Vec<Var>]) -> Arc<Self> {
        let mut all = Vec::new();
        for g in groups {
            all.extend(g.iter().cloned());
        }
        VarTable::new(all)
    }
}

/// Exponent vector aligned with a `VarTable`; graded-lex ordered.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Monomial(pub Vec<i64>);

impl Monomial {
    pub fn constant(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn total_degree(&self) -> i64 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => self.0.cmp(&other.0),
            ord => ord,
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate Laurent polynomial over Q(i).
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    vars: Arc<VarTable>,
    terms: BTreeMap<Monomial, Gaussian>,
}

impl Polynomial {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        Polynomial {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Arc<VarTable>, c: Gaussian) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::constant(vars.len()), c);
        }
        Polynomial {
            vars: vars.clone(),
            terms,
        }
    }

    pub fn one(vars: &Arc<VarTable>) -> Self {
        Self::constant(vars, Gaussian::one())
    }

    pub fn var(vars: &Arc<VarTable>, name: &str) -> Result<Self, PolyError> {
        let idx = vars
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.into()))?;
        Ok(Self::var_by_index(vars, idx))
    }

    pub fn var_by_index(vars: &Arc<VarTable>, idx: usize) -> Self {
        let mut exps = vec![0; vars.len()];
        exps[idx] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(Monomial(exps), Gaussian::one());
        Polynomial {
            vars: vars.clone(),
            terms,
        }
    }

    /// Single monomial c * prod vars^exps; validates Laurent permissions.
    pub fn monomial(
        vars: &Arc<VarTable>,
        exps: Vec<i64>,
        c: Gaussian,
    ) -> Result<Self, PolyError> {
        assert_eq!(exps.len(), vars.len());
        for (j, &e) in exps.iter().enumerate() {
            if e < 0 && !vars.var(j).role.is_parameter() {
                return Err(PolyError::LaurentNotAllowed(vars.var(j).name.clone()));
            }
        }
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial(exps), c);
        }
        Ok(Polynomial {
            vars: vars.clone(),
            terms,
        })
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Gaussian)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Gaussian {
        self.terms.get(mono).cloned().unwrap_or_else(Gaussian::zero)
    }

    /// The constant term.
    pub fn constant_term(&self) -> Gaussian {
        self.coefficient(&Monomial::constant(self.vars.len()))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
            || (self.terms.len() == 1
                && self.terms.keys().next().unwrap().0.iter().all(|&e| e == 0))
    }

    fn insert_term(&mut self, mono: Monomial, c: Gaussian) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
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

    fn assert_same_vars(&self, other: &Polynomial) {
        assert!(
            Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars,
            "polynomials over different variable tables; embed first"
        );
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.assert_same_vars(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, c: &Gaussian) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.vars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.clone() * c.clone();
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.assert_same_vars(other);
        let mut out = Polynomial::zero(&self.vars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one(&self.vars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// d/d(var); the Laurent power rule d/dt t^{-k} = -k t^{-k-1} is the
    /// ordinary one.
    pub fn partial_derivative(&self, name: &str) -> Result<Polynomial, PolyError> {
        let idx = self
            .vars
            .index_of(name)
            .ok_or_else(|| PolyError::UnknownVariable(name.into()))?;
        Ok(self.partial_derivative_idx(idx))
    }

    pub fn partial_derivative_idx(&self, idx: usize) -> Polynomial {
        let mut out = Polynomial::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[idx] = e - 1;
            out.insert_term(Monomial(exps), c.clone() * Gaussian::from_int(e));
        }
        out
    }

    /// Substitutes variables by polynomials (all over `target` vars).
    /// Unsubstituted variables must exist in `target` by name.
    pub fn substitute(
        &self,
        subs: &BTreeMap<String, Polynomial>,
        target: &Arc<VarTable>,
    ) -> Result<Polynomial, PolyError> {
        // Per-variable images in the target ring.
        let mut images: Vec<Option<Polynomial>> = Vec::with_capacity(self.vars.len());
        for v in self.vars.vars() {
            if let Some(p) = subs.get(&v.name) {
                assert!(*p.vars.as_ref() == *target.as_ref());
                images.push(Some(p.clone()));
            } else {
                match target.index_of(&v.name) {
                    Some(idx) => images.push(Some(Polynomial::var_by_index(target, idx))),
                    None => {
                        // Only an error if the variable actually occurs.
                        images.push(None);
                    }
                }
            }
        }
        let mut out = Polynomial::zero(target);
        // Cache powers per variable to avoid recomputation.
        let mut pow_cache: Vec<BTreeMap<i64, Polynomial>> = vec![BTreeMap::new(); self.vars.len()];
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let img = images[j].as_ref().ok_or_else(|| {
                    PolyError::UnknownVariable(self.vars.var(j).name.clone())
                })?;
                if e < 0 {
                    // Negative powers survive only for parameter variables that
                    // map to themselves (a single monomial).
                    if img.terms.len() == 1 {
                        let (im, ic) = img.terms.iter().next().unwrap();
                        let mono = Monomial(im.0.iter().map(|x| x * e).collect());
                        let coeff = ic.clone().pow((-e) as u32).inv();
                        term = term.mul(&Polynomial {
                            vars: target.clone(),
                            terms: BTreeMap::from([(mono, coeff)]),
                        });
                        continue;
                    }
                    return Err(PolyError::LaurentNotAllowed(
                        self.vars.var(j).name.clone(),
                    ));
                }
                let p = pow_cache[j]
                    .entry(e)
                    .or_insert_with(|| img.pow(e as u32))
                    .clone();
                term = term.mul(&p);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Re-expresses the polynomial over another table containing all its
    /// occurring variables (matched by name).
    pub fn embed(&self, target: &Arc<VarTable>) -> Result<Polynomial, PolyError> {
        let mut mapping = Vec::with_capacity(self.vars.len());
        for (j, v) in self.vars.vars().iter().enumerate() {
            match target.index_of(&v.name) {
                Some(idx) => mapping.push(Some(idx)),
                None => {
                    if self.terms.keys().any(|m| m.0[j] != 0) {
                        return Err(PolyError::UnknownVariable(v.name.clone()));
                    }
                    mapping.push(None);
                }
            }
        }
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0; target.len()];
            for (j, &e) in m.0.iter().enumerate() {
                if e != 0 {
                    exps[mapping[j].unwrap()] = e;
                }
            }
            out.insert_term(Monomial(exps), c.clone());
        }
        Ok(out)
    }

    /// Extremal exponents of one variable over all terms; None when absent.
    pub fn exponent_range(&self, name: &str) -> Option<(i64, i64)> {
        let idx = self.vars.index_of(name)?;
        let mut range: Option<(i64, i64)> = None;
        for m in self.terms.keys() {
            let e = m.0[idx];
            range = Some(match range {
                None => (e, e),
                Some((lo, hi)) => (lo.min(e), hi.max(e)),
            });
        }
        range
    }

    /// Collects coefficients of powers of one variable: exponent -> polynomial
    /// in the remaining variables (still over the full table).
    pub fn coefficients_of(&self, name: &str) -> BTreeMap<i64, Polynomial> {
        let idx = self.vars.index_of(name).expect("variable not in table");
        let mut out: BTreeMap<i64, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[idx];
            let mut exps = m.0.clone();
            exps[idx] = 0;
            out.entry(e)
                .or_insert_with(|| Polynomial::zero(&self.vars))
                .insert_term(Monomial(exps), c.clone());
        }
        out
    }

    /// Substitutes a single variable by an exact rational constant.
    pub fn eval_var(&self, name: &str, value: &Rational) -> Polynomial {
        let idx = self.vars.index_of(name).expect("variable not in table");
        let g = Gaussian::from_rational(value.clone());
        let mut out = Polynomial::zero(&self.vars);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            let mut exps = m.0.clone();
            exps[idx] = 0;
            let factor = if e >= 0 {
                g.pow(e as u32)
            } else {
                g.pow((-e) as u32).inv()
            };
            out.insert_term(Monomial(exps), c.clone() * factor);
        }
        out
    }

    /// Numeric evaluation; `assign` is indexed like the variable table.
    pub fn eval_complex(&self, assign: &[Complex64]) -> Complex64 {
        assert_eq!(assign.len(), self.vars.len());
        let mut sum = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut prod = c.to_complex64();
            for (j, &e) in m.0.iter().enumerate() {
                if e != 0 {
                    prod *= assign[j].powi(e as i32);
                }
            }
            sum += prod;
        }
        sum
    }

    /// Exact rational evaluation (real part must stay real).
    pub fn eval_rational(&self, assign: &[Rational]) -> Gaussian {
        assert_eq!(assign.len(), self.vars.len());
        let mut sum = Gaussian::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for (j, &e) in m.0.iter().enumerate() {
                if e != 0 {
                    let g = Gaussian::from_rational(assign[j].clone());
                    let factor = if e >= 0 {
                        g.pow(e as u32)
                    } else {
                        g.pow((-e) as u32).inv()
                    };
                    prod = prod * factor;
                }
            }
            sum += prod;
        }
        sum
    }

    /// Max over monomials of the weighted degree; `None` for the zero
    /// polynomial (degree -infinity). Parameter variables are ignored.
    pub fn weighted_degree(&self, w: &WeightVector) -> Result<Option<i64>, PolyError> {
        let weights = self.resolve_weights(w)?;
        Ok(self
            .terms
            .keys()
            .map(|m| Self::mono_weight(m, &weights))
            .max())
    }

    fn resolve_weights(&self, w: &WeightVector) -> Result<Vec<Option<i64>>, PolyError> {
        let mut weights = Vec::with_capacity(self.vars.len());
        for (j, v) in self.vars.vars().iter().enumerate() {
            match w.weight_of(&v.name) {
                Some(q) => weights.push(Some(q as i64)),
                None => {
                    if v.role.is_parameter() {
                        weights.push(None);
                    } else if self.terms.keys().any(|m| m.0[j] != 0) {
                        return Err(PolyError::MissingWeight(v.name.clone()));
                    } else {
                        weights.push(None);
                    }
                }
            }
        }
        Ok(weights)
    }

    fn mono_weight(m: &Monomial, weights: &[Option<i64>]) -> i64 {
        m.0.iter()
            .zip(weights)
            .map(|(&e, w)| w.map(|q| q * e).unwrap_or(0))
            .sum()
    }

    /// Sum of monomials of exact weighted degree `deg`.
    pub fn homogeneous_component(
        &self,
        w: &WeightVector,
        deg: i64,
    ) -> Result<Polynomial, PolyError> {
        let weights = self.resolve_weights(w)?;
        let mut out = Polynomial::zero(&self.vars);
        for (m, c) in &self.terms {
            if Self::mono_weight(m, &weights) == deg {
                out.insert_term(m.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// True if every monomial has the same weighted degree `deg`.
    pub fn is_homogeneous(&self, w: &WeightVector, deg: i64) -> Result<bool, PolyError> {
        let weights = self.resolve_weights(w)?;
        Ok(self
            .terms
            .keys()
            .all(|m| Self::mono_weight(m, &weights) == deg))
    }

    /// Total degree in a subset of variables (by table index).
    pub fn degree_in(&self, idxs: &[usize]) -> Option<i64> {
        self.terms
            .keys()
            .map(|m| idxs.iter().map(|&j| m.0[j]).sum())
            .max()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Highest terms first reads better.
        for (m, c) in self.terms.iter().rev() {
            let mut factors = Vec::new();
            for (j, &e) in m.0.iter().enumerate() {
                if e == 1 {
                    factors.push(self.vars.var(j).name.clone());
                } else if e != 0 {
                    factors.push(format!("{}^{}", self.vars.var(j).name, e));
                }
            }
            let coeff_str = format!("{c}");
            let body = if factors.is_empty() {
                coeff_str
            } else if c.is_one() {
                factors.join("*")
            } else if (-c.clone()).is_one() {
                format!("-{}", factors.join("*"))
            } else {
                format!("{}*{}", coeff_str, factors.join("*"))
            };
            if first {
                write!(f, "{body}")?;
                first = false;
            } else if let Some(stripped) = body.strip_prefix('-') {
                write!(f, " - {stripped}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Per-variable positive integer weights, keyed by variable name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    entries: Vec<(String, u32)>,
}

impl WeightVector {
    pub fn new(entries: Vec<(String, u32)>) -> Self {
        for (name, w) in &entries {
            assert!(*w >= 1, "weight of {name} must be >= 1");
        }
        WeightVector { entries }
    }

    /// Weights for a numbered family `x1..xd`.
    pub fn for_family(prefix: &str, weights: &[u32]) -> Self {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(j, &w)| (format!("{prefix}{}", j + 1), w))
                .collect(),
        )
    }

    pub fn weight_of(&self, name: &str) -> Option<u32> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
    }

    pub fn union(&self, other: &WeightVector) -> WeightVector {
        let mut entries = self.entries.clone();
        for (n, w) in &other.entries {
            if !entries.iter().any(|(m, _)| m == n) {
                entries.push((n.clone(), *w));
            }
        }
        WeightVector { entries }
    }

    pub fn weights(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|(_, w)| *w)
    }
}

/// Polynomial map: a list of components over a common source table.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMap {
    pub source: Arc<VarTable>,
    pub components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(source: Arc<VarTable>, components: Vec<Polynomial>) -> Self {
        for c in &components {
            assert!(
                *c.vars().as_ref() == *source.as_ref(),
                "component over a foreign variable table"
            );
        }
        PolyMap { source, components }
    }

    pub fn identity(source: &Arc<VarTable>) -> Self {
        let components = (0..source.len())
            .map(|j| Polynomial::var_by_index(source, j))
            .collect();
        PolyMap {
            source: source.clone(),
            components,
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// f after g: substitutes f's source variables by g's components
    /// positionally. Requires dim(g) == arity(f).
    pub fn compose(&self, g: &PolyMap) -> Result<PolyMap, PolyError> {
        if g.dim() != self.source.len() {
            return Err(PolyError::DimensionMismatch {
                expected: self.source.len(),
                got: g.dim(),
            });
        }
        let mut subs = BTreeMap::new();
        for (j, comp) in g.components.iter().enumerate() {
            subs.insert(self.source.var(j).name.clone(), comp.clone());
        }
        let components = self
            .components
            .iter()
            .map(|c| c.substitute(&subs, &g.source))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PolyMap {
            source: g.source.clone(),
            components,
        })
    }

    /// Jacobian determinant with respect to the named variables, exact.
    pub fn jacobian_det(&self, vars: &[&str]) -> Result<Polynomial, PolyError> {
        if vars.len() != self.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                got: vars.len(),
            });
        }
        let n = vars.len();
        let mut entries = Vec::with_capacity(n);
        for comp in &self.components {
            let mut row = Vec::with_capacity(n);
            for name in vars {
                row.push(comp.partial_derivative(name)?);
            }
            entries.push(row);
        }
        Ok(det_laplace(&entries))
    }

    /// Solves `f = identity` for the given unknowns, in order. Component j
    /// must be c_j * u_j + (terms in earlier unknowns and free variables)
    /// with a nonzero constant c_j. Returns the inverse as a map in the free
    /// variables and fresh target variables named after the unknowns'
    /// components (`prefix` + index), and verifies both compositions.
    pub fn invert_triangular(&self, unknowns: &[&str]) -> Result<TriangularInverse, PolyError> {
        if unknowns.len() != self.dim() {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim(),
                got: unknowns.len(),
            });
        }
        let n = unknowns.len();
        let unknown_idx: Vec<usize> = unknowns
            .iter()
            .map(|u| {
                self.source
                    .index_of(u)
                    .ok_or_else(|| PolyError::UnknownVariable((*u).into()))
            })
            .collect::<Result<Vec<_>, _>>()?;

        // Output table: free source variables plus fresh target variables.
        let free_vars: Vec<Var> = self
            .source
            .vars()
            .iter()
            .filter(|v| !unknowns.contains(&v.name.as_str()))
            .cloned()
            .collect();
        let target_vars: Vec<Var> = (0..n)
            .map(|j| Var {
                name: format!("y{}", j + 1),
                role: VarRole::Aux,
            })
            .collect();
        let out_table = VarTable::concat(&[free_vars.clone(), target_vars.clone()]);

        // Solved expressions for unknowns, over out_table.
        let mut solved: BTreeMap<String, Polynomial> = BTreeMap::new();
        for j in 0..n {
            let comp = &self.components[j];
            // Linearity in unknown j: second derivative vanishes and the
            // first derivative is a nonzero constant.
            let d = comp.partial_derivative_idx(unknown_idx[j]);
            if !d.is_constant() {
                return Err(PolyError::NotTriangular(format!(
                    "component {} is not linear with constant coefficient in {}",
                    j + 1,
                    unknowns[j]
                )));
            }
            let c = d.constant_term();
            if c.is_zero() {
                return Err(PolyError::NotTriangular(format!(
                    "component {} does not involve {}",
                    j + 1,
                    unknowns[j]
                )));
            }
            // The remainder may only involve earlier unknowns and frees.
            let remainder =
                comp.sub(&Polynomial::var_by_index(&self.source, unknown_idx[j]).scale(&c));
            for later in &unknowns[j..] {
                if remainder.exponent_range(later).map(|(lo, hi)| lo != 0 || hi != 0) == Some(true)
                {
                    return Err(PolyError::NotTriangular(format!(
                        "component {} depends on unresolved unknown {}",
                        j + 1,
                        later
                    )));
                }
            }
            // u_j = (y_j - remainder(solved)) / c.
            let mut subs = solved.clone();
            // Remaining free variables map to themselves in out_table.
            let rem_out = remainder.substitute(&subs, &out_table)?;
            let y_j = Polynomial::var(&out_table, &format!("y{}", j + 1))?;
            let expr = y_j.sub(&rem_out).scale(&c.inv());
            subs.insert(unknowns[j].to_string(), expr.clone());
            solved.insert(unknowns[j].to_string(), expr);
        }

        let inverse = PolyMap::new(
            out_table.clone(),
            unknowns
                .iter()
                .map(|u| solved.get(*u).unwrap().clone())
                .collect(),
        );

        let result = TriangularInverse {
            free_vars,
            target_vars,
            inverse,
            unknowns: unknowns.iter().map(|s| s.to_string()).collect(),
        };
        result.verify(self)?;
        Ok(result)
    }
}

impl fmt::Debug for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PolyMap [")?;
        for c in &self.components {
            writeln!(f, "  {c}")?;
        }
        write!(f, "]")
    }
}

/// Outcome of a successful triangular inversion. `inverse` maps
/// (free vars, y1..yn) to the unknowns.
#[derive(Clone, Debug)]
pub struct TriangularInverse {
    pub free_vars: Vec<Var>,
    pub target_vars: Vec<Var>,
    pub inverse: PolyMap,
    pub unknowns: Vec<String>,
}

impl TriangularInverse {
    /// Checks f(frees, inverse(frees, y)) = y exactly, and the reverse order.
    fn verify(&self, f: &PolyMap) -> Result<(), PolyError> {
        let out_table = &self.inverse.source;
        // Forward: substitute unknowns by the solved expressions in f.
        let mut subs = BTreeMap::new();
        for (u, expr) in self.unknowns.iter().zip(&self.inverse.components) {
            subs.insert(u.clone(), expr.clone());
        }
        for (j, comp) in f.components.iter().enumerate() {
            let image = comp.substitute(&subs, out_table)?;
            let y_j = Polynomial::var(out_table, &format!("y{}", j + 1))?;
            if image != y_j {
                return Err(PolyError::NotTriangular(format!(
                    "inversion verification failed on component {}",
                    j + 1
                )));
            }
        }
        // Reverse: substitute y_j by f_j back into the solved expressions.
        let mut back = BTreeMap::new();
        for (j, comp) in f.components.iter().enumerate() {
            back.insert(format!("y{}", j + 1), comp.clone());
        }
        for (u, expr) in self.unknowns.iter().zip(&self.inverse.components) {
            let image = expr.substitute(&back, &f.source)?;
            let u_poly = Polynomial::var(&f.source, u)?;
            if image != u_poly {
                return Err(PolyError::NotTriangular(format!(
                    "reverse inversion verification failed for {u}"
                )));
            }
        }
        Ok(())
    }
}

/// Laplace-expansion determinant of a square polynomial matrix.
pub fn det_laplace(m: &[Vec<Polynomial>]) -> Polynomial {
    let n = m.len();
    assert!(n > 0 && m.iter().all(|row| row.len() == n));
    let vars = m[0][0].vars().clone();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = Polynomial::zero(&vars);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Polynomial>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let cofactor = m[0][j].mul(&det_laplace(&minor));
        det = if j % 2 == 0 {
            det.add(&cofactor)
        } else {
            det.sub(&cofactor)
        };
    }
    det
}

/// Inverse of a square polynomial matrix whose determinant is a nonzero
/// constant; returns None otherwise.
pub fn invert_constant_det_matrix(m: &[Vec<Polynomial>]) -> Option<Vec<Vec<Polynomial>>> {
    let n = m.len();
    let det = det_laplace(m);
    if !det.is_constant() || det.is_zero() {
        return None;
    }
    let det_inv = det.constant_term().inv();
    let mut inv = vec![vec![Polynomial::zero(m[0][0].vars()); n]; n];
    for i in 0..n {
        for j in 0..n {
            // Cofactor C_{ji} for the (i,j) entry of the inverse.
            let minor: Vec<Vec<Polynomial>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let mut cof = if minor.is_empty() {
                Polynomial::one(m[0][0].vars())
            } else {
                det_laplace(&minor)
            };
            if (i + j) % 2 == 1 {
                cof = cof.neg();
            }
            inv[i][j] = cof.scale(&det_inv);
        }
    }
    Some(inv)
}

/// Rational helper: q as BigRational from integers.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Signed check used in reports.
pub fn rational_is_positive(r: &Rational) -> bool {
    r.is_positive()
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
