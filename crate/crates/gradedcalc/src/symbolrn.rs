//! Anisotropic Shubin symbols on R^n as exact rational functions of (x, xi):
//! Kohn-Nirenberg composition asymptotics, parametrix expansion for positive
//! sum-of-even-powers symbols, and numeric verification of the symbol
//! estimates along dyadic rays.

use crate::coeff::Gaussian;
use crate::poly::{Polynomial, VarRole, VarTable, WeightVector};
use num_complex::Complex64;
use num_traits::Signed;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymbolError {
    #[error("denominator bases differ; cannot combine exactly")]
    BaseMismatch,
    #[error("symbol dimensions differ")]
    DimensionMismatch,
    #[error("not an admissible elliptic pattern: {0}")]
    NotElliptic(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Variable table (x1..xd, xi1..xin).
pub fn symbol_table(d: usize, n: usize) -> Arc<VarTable> {
    VarTable::concat(&[
        VarTable::family("x", VarRole::Space, d),
        VarTable::family("xi", VarRole::Dual, n),
    ])
}

/// Rational symbol num / base^pow with weighted orders: beta weights on x,
/// alpha weights on xi. Valid on the excision region |(x, xi)| >= 1.
#[derive(Clone, Debug)]
pub struct RationalSymbol {
    pub table: Arc<VarTable>,
    pub num: Polynomial,
    /// Denominator base; the denominator is base^pow (pow = 0 means 1).
    pub base: Polynomial,
    pub pow: u32,
    pub x_weights: Vec<u32>,
    pub xi_weights: Vec<u32>,
}

impl RationalSymbol {
    /// Polynomial symbol (denominator 1).
    pub fn polynomial(num: Polynomial, x_weights: Vec<u32>, xi_weights: Vec<u32>) -> Self {
        let table = num.vars().clone();
        let base = Polynomial::one(&table);
        RationalSymbol {
            table,
            num,
            base,
            pow: 0,
            x_weights,
            xi_weights,
        }
    }

    pub fn x_dim(&self) -> usize {
        self.x_weights.len()
    }

    pub fn xi_dim(&self) -> usize {
        self.xi_weights.len()
    }

    fn weight_vector(&self) -> WeightVector {
        WeightVector::for_family("x", &self.x_weights)
            .union(&WeightVector::for_family("xi", &self.xi_weights))
    }

    /// Declared order: top weighted degree of the numerator minus top
    /// weighted degree of the denominator. None for the zero symbol.
    pub fn order(&self) -> Option<i64> {
        let w = self.weight_vector();
        let num_deg = self.num.weighted_degree(&w).expect("weights cover vars")?;
        let den_deg = self
            .base
            .weighted_degree(&w)
            .expect("weights cover vars")
            .unwrap_or(0)
            * self.pow as i64;
        Some(num_deg - den_deg)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn compatible(&self, other: &RationalSymbol) -> Result<(), SymbolError> {
        if self.x_weights != other.x_weights || self.xi_weights != other.xi_weights {
            return Err(SymbolError::DimensionMismatch);
        }
        Ok(())
    }

    /// Exact sum; denominators must share the base (or be trivial).
    pub fn add(&self, other: &RationalSymbol) -> Result<RationalSymbol, SymbolError> {
        self.compatible(other)?;
        let (base, pow_l, pow_r) = if self.pow == 0 {
            (other.base.clone(), 0, other.pow)
        } else if other.pow == 0 {
            (self.base.clone(), self.pow, 0)
        } else if self.base == other.base {
            (self.base.clone(), self.pow, other.pow)
        } else {
            return Err(SymbolError::BaseMismatch);
        };
        let target = pow_l.max(pow_r);
        let lift = |num: &Polynomial, pow: u32| -> Polynomial {
            let mut out = num.clone();
            for _ in pow..target {
                out = out.mul(&base);
            }
            out
        };
        let num = lift(&self.num, pow_l).add(&lift(&other.num, pow_r));
        Ok(RationalSymbol {
            table: self.table.clone(),
            num,
            base,
            pow: target,
            x_weights: self.x_weights.clone(),
            xi_weights: self.xi_weights.clone(),
        })
    }

    pub fn sub(&self, other: &RationalSymbol) -> Result<RationalSymbol, SymbolError> {
        self.add(&other.scale(&-Gaussian::one()))
    }

    pub fn scale(&self, c: &Gaussian) -> RationalSymbol {
        let mut out = self.clone();
        out.num = out.num.scale(c);
        out
    }

    /// Exact product; denominators must share the base (or be trivial).
    pub fn mul(&self, other: &RationalSymbol) -> Result<RationalSymbol, SymbolError> {
        self.compatible(other)?;
        let (base, pow) = if self.pow == 0 {
            (other.base.clone(), other.pow)
        } else if other.pow == 0 {
            (self.base.clone(), self.pow)
        } else if self.base == other.base {
            (self.base.clone(), self.pow + other.pow)
        } else {
            return Err(SymbolError::BaseMismatch);
        };
        Ok(RationalSymbol {
            table: self.table.clone(),
            num: self.num.mul(&other.num),
            base,
            pow,
            x_weights: self.x_weights.clone(),
            xi_weights: self.xi_weights.clone(),
        })
    }

    /// Quotient rule: d(num / base^k) = (dn base - k num db) / base^{k+1}.
    pub fn derivative(&self, var: &str) -> RationalSymbol {
        let dn = self.num.partial_derivative(var).expect("known variable");
        if self.pow == 0 {
            return RationalSymbol {
                num: dn,
                ..self.clone()
            };
        }
        let db = self.base.partial_derivative(var).expect("known variable");
        let num = dn.mul(&self.base).sub(
            &self
                .num
                .mul(&db)
                .scale(&Gaussian::from_int(self.pow as i64)),
        );
        RationalSymbol {
            table: self.table.clone(),
            num,
            base: self.base.clone(),
            pow: self.pow + 1,
            x_weights: self.x_weights.clone(),
            xi_weights: self.xi_weights.clone(),
        }
    }

    /// Numeric evaluation at (x, xi).
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        let assign: Vec<Complex64> = x
            .iter()
            .chain(xi.iter())
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let n = self.num.eval_complex(&assign);
        if self.pow == 0 {
            return n;
        }
        let b = self.base.eval_complex(&assign);
        n / b.powi(self.pow as i32)
    }
}

/// One Kohn-Nirenberg expansion: terms indexed by the derivative
/// multi-index, plus the order bound of the dropped tail.
#[derive(Clone, Debug)]
pub struct KnExpansion {
    pub terms: Vec<(Vec<u32>, RationalSymbol)>,
    pub remainder_order: i64,
}

impl KnExpansion {
    /// Exact combined sum of the computed terms.
    pub fn total(&self) -> Result<RationalSymbol, SymbolError> {
        let mut acc = self.terms[0].1.clone();
        for (_, t) in &self.terms[1..] {
            acc = acc.add(t)?;
        }
        Ok(acc)
    }
}

/// Kohn-Nirenberg composition asymptotics:
/// sum over a with [a]_alpha + [a]_beta < drop_bound of
/// (1/a!) d_xi^a p . (-i d_x)^a q, exact per term.
pub fn kn_compose_asymptotic(
    p: &RationalSymbol,
    q: &RationalSymbol,
    drop_bound: i64,
) -> Result<KnExpansion, SymbolError> {
    p.compatible(q)?;
    let n = p.xi_dim();
    assert_eq!(
        p.x_dim(),
        n,
        "composition pairs each xi with the matching x"
    );
    let op = p.order().unwrap_or(i64::MIN / 2);
    let oq = q.order().unwrap_or(i64::MIN / 2);
    let mut terms = Vec::new();
    // Enumerate multi-indices with weighted drop < drop_bound.
    let drops: Vec<i64> = (0..n)
        .map(|j| p.xi_weights[j] as i64 + p.x_weights[j] as i64)
        .collect();
    let mut stack: Vec<Vec<u32>> = vec![vec![]];
    let mut indices: Vec<Vec<u32>> = Vec::new();
    for j in 0..n {
        let mut next = Vec::new();
        for prefix in &stack {
            let used: i64 = prefix
                .iter()
                .enumerate()
                .map(|(i, &e)| e as i64 * drops[i])
                .sum();
            let mut e = 0u32;
            loop {
                if used + e as i64 * drops[j] >= drop_bound && e > 0 {
                    break;
                }
                let mut p2 = prefix.clone();
                p2.push(e);
                if used + e as i64 * drops[j] < drop_bound {
                    next.push(p2);
                } else {
                    break;
                }
                e += 1;
            }
        }
        stack = next;
    }
    indices.extend(stack);
    for a in indices {
        // d_xi^a p, with early exit once the derivative vanishes.
        let mut dp = p.clone();
        'dp: for (j, &e) in a.iter().enumerate() {
            for _ in 0..e {
                dp = dp.derivative(&format!("xi{}", j + 1));
                if dp.is_zero() {
                    break 'dp;
                }
            }
        }
        if dp.is_zero() {
            continue;
        }
        // (-i d_x)^a q
        let mut dq = q.clone();
        'dq: for (j, &e) in a.iter().enumerate() {
            for _ in 0..e {
                dq = dq.derivative(&format!("x{}", j + 1));
                if dq.is_zero() {
                    break 'dq;
                }
            }
        }
        if dq.is_zero() {
            continue;
        }
        let mut factorial = 1i64;
        for &e in &a {
            for step in 0..e {
                factorial *= (step + 1) as i64;
            }
        }
        let total_a: u32 = a.iter().sum();
        let phase = Gaussian::i_pow(total_a).conj();
        let coeff = Gaussian::from_ratio(1, factorial) * phase;
        let term = dp.mul(&dq)?.scale(&coeff);
        if !term.is_zero() {
            terms.push((a, term));
        }
    }
    Ok(KnExpansion {
        terms,
        remainder_order: op + oq - drop_bound,
    })
}

/// A parametrix expansion q_0 .. q_{N-1} for an admissible elliptic symbol,
/// with the exact combined residual p # (sum q_j) - 1 and its order.
#[derive(Clone, Debug)]
pub struct ParametrixExpansion {
    pub terms: Vec<RationalSymbol>,
    pub residual: RationalSymbol,
    /// Order of the exact residual combined with the dropped kn tails.
    pub residual_order: i64,
    /// Orders of the intermediate residuals after 1, 2, ... terms.
    pub residual_orders: Vec<i64>,
}

/// Admissibility: every monomial has even exponents and a positive real
/// coefficient, and every occurring variable also appears as a pure even
/// power, which makes positivity away from the origin decidable.
fn check_elliptic_pattern(p: &RationalSymbol) -> Result<(), SymbolError> {
    if p.pow != 0 {
        return Err(SymbolError::NotElliptic(
            "expected a polynomial symbol".into(),
        ));
    }
    if p.num.is_zero() {
        return Err(SymbolError::NotElliptic("zero symbol".into()));
    }
    let nvars = p.table.len();
    let mut occurring = vec![false; nvars];
    let mut pure = vec![false; nvars];
    for (mono, c) in p.num.terms() {
        if !c.is_real() || !c.re.is_positive() {
            return Err(SymbolError::NotElliptic(format!(
                "coefficient {c} is not positive"
            )));
        }
        let mut support = Vec::new();
        for (j, &e) in mono.0.iter().enumerate() {
            if e < 0 || e % 2 != 0 {
                if e != 0 {
                    return Err(SymbolError::NotElliptic(format!(
                        "odd exponent {e} on {}",
                        p.table.var(j).name
                    )));
                }
            }
            if e > 0 {
                occurring[j] = true;
                support.push(j);
            }
        }
        if support.len() == 1 {
            pure[support[0]] = true;
        }
    }
    for j in 0..nvars {
        if occurring[j] && !pure[j] {
            return Err(SymbolError::NotElliptic(format!(
                "variable {} has no pure even power",
                p.table.var(j).name
            )));
        }
    }
    Ok(())
}

pub fn parametrix_expansion(
    p: &RationalSymbol,
    n_terms: usize,
) -> Result<ParametrixExpansion, SymbolError> {
    check_elliptic_pattern(p)?;
    assert!(n_terms >= 1);
    let _ = p.order().expect("nonzero symbol has an order");
    let max_drop: i64 = (0..p.xi_dim())
        .map(|j| p.xi_weights[j] as i64 + p.x_weights[j] as i64)
        .max()
        .unwrap_or(1);
    // Generous truncation so dropped tails sit far below the tracked
    // residual.
    let drop_bound = (n_terms as i64 + 2) * max_drop + 1;

    let q0 = RationalSymbol {
        table: p.table.clone(),
        num: Polynomial::one(&p.table),
        base: p.num.clone(),
        pow: 1,
        x_weights: p.x_weights.clone(),
        xi_weights: p.xi_weights.clone(),
    };
    let mut terms = vec![q0.clone()];
    let mut tail_order = i64::MIN;
    let mut residual_orders = Vec::new();

    // residual = p # q0 - 1 (the a = 0 term cancels the 1 exactly).
    let one = RationalSymbol::polynomial(
        Polynomial::one(&p.table),
        p.x_weights.clone(),
        p.xi_weights.clone(),
    );
    let kn = kn_compose_asymptotic(p, &q0, drop_bound)?;
    tail_order = tail_order.max(kn.remainder_order);
    let mut residual = kn.total()?.sub(&one)?;
    residual_orders.push(residual.order().unwrap_or(i64::MIN));

    for _ in 1..n_terms {
        let qk = q0.mul(&residual)?.scale(&-Gaussian::one());
        terms.push(qk.clone());
        let kn = kn_compose_asymptotic(p, &qk, drop_bound)?;
        tail_order = tail_order.max(kn.remainder_order);
        residual = residual.add(&kn.total()?)?;
        residual_orders.push(residual.order().unwrap_or(i64::MIN));
    }
    let residual_order = residual
        .order()
        .unwrap_or(i64::MIN)
        .max(tail_order);
    Ok(ParametrixExpansion {
        terms,
        residual,
        residual_order,
        residual_orders,
    })
}

/// Deterministic ray sampler shared by the numeric checks.
fn rays(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut state = seed.max(1);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let v = next();
                    if v.abs() < 0.05 {
                        0.3
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// Dilates a direction to quasi-norm radius r.
fn dilate_to_radius(
    omega: &[f64],
    x_weights: &[u32],
    xi_weights: &[u32],
    r: f64,
) -> (Vec<f64>, Vec<f64>) {
    let weights: Vec<u32> = x_weights
        .iter()
        .chain(xi_weights.iter())
        .copied()
        .collect();
    let q = weights.iter().fold(1u32, |acc, &w| {
        let gcd = |mut a: u32, mut b: u32| {
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            a
        };
        acc / gcd(acc, w) * w
    });
    let mut norm2q = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        norm2q += omega[j].powi((2 * q / w) as i32);
    }
    let norm = norm2q.powf(1.0 / (2.0 * q as f64));
    let scaled: Vec<f64> = weights
        .iter()
        .zip(omega)
        .map(|(&w, &v)| v / norm.powi(w as i32) * r.powi(w as i32))
        .collect();
    let d = x_weights.len();
    (scaled[..d].to_vec(), scaled[d..].to_vec())
}

/// Homogeneous Japanese bracket (1 + |xi|^{2q} + |x|^{2q})^{1/2q}.
fn bracket_h(x: &[f64], xi: &[f64], x_weights: &[u32], xi_weights: &[u32]) -> f64 {
    let weights: Vec<u32> = x_weights
        .iter()
        .chain(xi_weights.iter())
        .copied()
        .collect();
    let q = weights.iter().fold(1u32, |acc, &w| {
        let gcd = |mut a: u32, mut b: u32| {
            while b != 0 {
                let t = a % b;
                a = b;
                b = t;
            }
            a
        };
        acc / gcd(acc, w) * w
    });
    let mut s = 1.0;
    for (j, &w) in weights.iter().enumerate() {
        let v = if j < x.len() { x[j] } else { xi[j - x.len()] };
        s += v.powi((2 * q / w) as i32);
    }
    s.powf(1.0 / (2.0 * q as f64))
}

/// Result of one derivative check.
#[derive(Clone, Debug)]
pub struct EstimateEntry {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub sup_ratio: f64,
    pub slope: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub entries: Vec<EstimateEntry>,
    pub pass: bool,
    pub radii: Vec<f64>,
    pub ray_count: usize,
}

impl EstimateReport {
    /// Minimal JSON rendering of the fitted constants and slopes.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"entries\":[");
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"a\":{:?},\"b\":{:?},\"sup_ratio\":{:.6e},\"slope\":{:.4},\"pass\":{}}}",
                e.a, e.b, e.sup_ratio, e.slope, e.pass
            ));
        }
        out.push_str(&format!("],\"pass\":{}}}", self.pass));
        out
    }
}

#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub seed: u64,
    pub ray_count: usize,
    /// Dyadic exponent range: radii 2^lo ..= 2^hi.
    pub radius_exp_lo: i32,
    pub radius_exp_hi: i32,
    pub slope_tolerance: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            seed: 11,
            ray_count: 12,
            radius_exp_lo: 0,
            radius_exp_hi: 8,
            slope_tolerance: 0.05,
        }
    }
}

/// Checks |d_xi^a d_x^b s| <= C <(x, xi)>^{m - [a] - [b]} numerically on
/// dyadic radii along random rays: the pass flag requires a non-growing
/// log-log trend of the ratio.
pub fn symbol_estimate_check(
    s: &RationalSymbol,
    m: i64,
    derivatives: &[(Vec<u32>, Vec<u32>)],
    config: &EstimateConfig,
) -> EstimateReport {
    let dim = s.table.len();
    let ray_dirs = rays(config.seed, config.ray_count, dim);
    let radii: Vec<f64> = (config.radius_exp_lo..=config.radius_exp_hi)
        .map(|e| 2f64.powi(e))
        .collect();
    let mut entries = Vec::new();
    for (a, b) in derivatives {
        // d_xi^a d_x^b s, exact.
        let mut ds = s.clone();
        for (j, &e) in a.iter().enumerate() {
            for _ in 0..e {
                ds = ds.derivative(&format!("xi{}", j + 1));
            }
        }
        for (j, &e) in b.iter().enumerate() {
            for _ in 0..e {
                ds = ds.derivative(&format!("x{}", j + 1));
            }
        }
        let wa: i64 = a
            .iter()
            .zip(&s.xi_weights)
            .map(|(&e, &q)| e as i64 * q as i64)
            .sum();
        let wb: i64 = b
            .iter()
            .zip(&s.x_weights)
            .map(|(&e, &q)| e as i64 * q as i64)
            .sum();
        let target = m - wa - wb;
        let mut sup_ratio = 0.0f64;
        let mut per_radius_max: Vec<f64> = Vec::with_capacity(radii.len());
        for &r in &radii {
            let mut worst = 0.0f64;
            for omega in &ray_dirs {
                let (x, xi) = dilate_to_radius(omega, &s.x_weights, &s.xi_weights, r);
                let val = ds.eval(&x, &xi).norm();
                let denom = bracket_h(&x, &xi, &s.x_weights, &s.xi_weights).powi(target as i32);
                let ratio = val / denom;
                worst = worst.max(ratio);
            }
            per_radius_max.push(worst.max(1e-300));
            sup_ratio = sup_ratio.max(worst);
        }
        // Trend fit over the asymptotic tail; small radii only feed the sup.
        let tail = radii.len() / 2;
        let slope = fit_slope(
            &radii[tail..].iter().map(|r| r.ln()).collect::<Vec<_>>(),
            &per_radius_max[tail..]
                .iter()
                .map(|v| v.ln())
                .collect::<Vec<_>>(),
        );
        let pass = slope <= config.slope_tolerance;
        entries.push(EstimateEntry {
            a: a.clone(),
            b: b.clone(),
            sup_ratio,
            slope,
            pass,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    EstimateReport {
        entries,
        pass,
        radii,
        ray_count: config.ray_count,
    }
}

/// Measured log-log decay order of a symbol along random rays, for
/// comparison against its declared order. Radii start at 4 to stay well
/// inside the excision region.
pub fn measured_order(s: &RationalSymbol, seed: u64) -> f64 {
    let dim = s.table.len();
    let ray_dirs = rays(seed, 10, dim);
    let radii: Vec<f64> = (2..=8).map(|e| 2f64.powi(e)).collect();
    let mut per_radius: Vec<f64> = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut worst = 0.0f64;
        for omega in &ray_dirs {
            let (x, xi) = dilate_to_radius(omega, &s.x_weights, &s.xi_weights, r);
            worst = worst.max(s.eval(&x, &xi).norm());
        }
        per_radius.push(worst.max(1e-300));
    }
    fit_slope(
        &radii.iter().map(|r| r.ln()).collect::<Vec<_>>(),
        &per_radius.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    )
}

/// Least-squares slope of y against x.
fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx: f64 = x.iter().sum::<f64>() / n;
    let my: f64 = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// All (a, b) derivative pairs with [a]_alpha + [b]_beta <= bound.
pub fn derivative_pairs(
    xi_weights: &[u32],
    x_weights: &[u32],
    bound: i64,
) -> Vec<(Vec<u32>, Vec<u32>)> {
    fn indices(weights: &[u32], bound: i64) -> Vec<(Vec<u32>, i64)> {
        let mut out: Vec<(Vec<u32>, i64)> = vec![(vec![], 0)];
        for &w in weights {
            let mut next = Vec::new();
            for (prefix, used) in &out {
                let mut e = 0u32;
                while used + (e as i64) * (w as i64) <= bound {
                    let mut p = prefix.clone();
                    p.push(e);
                    next.push((p, used + e as i64 * w as i64));
                    e += 1;
                }
            }
            out = next;
        }
        out
    }
    let mut pairs = Vec::new();
    for (a, wa) in indices(xi_weights, bound) {
        for (b, wb) in indices(x_weights, bound - wa) {
            let _ = wb;
            pairs.push((a.clone(), b));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    /// xi^2 + x^2 with unit weights.
    fn iso_oscillator_symbol() -> RationalSymbol {
        let t = symbol_table(1, 1);
        let x = Polynomial::var(&t, "x1").unwrap();
        let xi = Polynomial::var(&t, "xi1").unwrap();
        RationalSymbol::polynomial(x.pow(2).add(&xi.pow(2)), vec![1], vec![1])
    }

    /// xi^2 + x^4: xi weight 2, x weight 1, order 4.
    fn aniso_symbol() -> RationalSymbol {
        let t = symbol_table(1, 1);
        let x = Polynomial::var(&t, "x1").unwrap();
        let xi = Polynomial::var(&t, "xi1").unwrap();
        RationalSymbol::polynomial(x.pow(4).add(&xi.pow(2)), vec![1], vec![2])
    }

    #[test]
    fn orders_from_weights() {
        assert_eq!(iso_oscillator_symbol().order(), Some(2));
        assert_eq!(aniso_symbol().order(), Some(4));
    }

    #[test]
    fn kn_expansion_of_xi2_x2() {
        // p = xi^2, q = x^2: a = 1 term -2i x xi, a = 2 term -1.
        let t = symbol_table(1, 1);
        let x = Polynomial::var(&t, "x1").unwrap();
        let xi = Polynomial::var(&t, "xi1").unwrap();
        let p = RationalSymbol::polynomial(xi.pow(2), vec![1], vec![1]);
        let q = RationalSymbol::polynomial(x.pow(2), vec![1], vec![1]);
        let kn = kn_compose_asymptotic(&p, &q, 100).unwrap();
        assert_eq!(kn.terms.len(), 3);
        let by_index: std::collections::BTreeMap<Vec<u32>, &RationalSymbol> =
            kn.terms.iter().map(|(a, s)| (a.clone(), s)).collect();
        // a = (0): product x^2 xi^2.
        assert_eq!(by_index[&vec![0u32]].num, x.pow(2).mul(&xi.pow(2)));
        // a = (1): (1/1!) 2 xi . (-i) 2 x = -4i x xi.
        let expected = x
            .mul(&xi)
            .scale(&(Gaussian::i() * Gaussian::from_int(-4)));
        assert_eq!(by_index[&vec![1u32]].num, expected);
        // a = (2): (1/2) 2 . (-i)^2 2 = -2.
        assert_eq!(
            by_index[&vec![2u32]].num,
            Polynomial::constant(&t, Gaussian::from_int(-2))
        );
    }

    #[test]
    fn kn_unit_symbol_is_identity() {
        let t = symbol_table(1, 1);
        let one = RationalSymbol::polynomial(Polynomial::one(&t), vec![1], vec![1]);
        let q = iso_oscillator_symbol();
        let kn = kn_compose_asymptotic(&one, &q, 50).unwrap();
        assert_eq!(kn.terms.len(), 1);
        assert_eq!(kn.terms[0].1.num, q.num);
    }

    #[test]
    fn kn_leading_term_is_product() {
        // kn(p, q) - p q has order <= order(p) + order(q) - min drop.
        let p = iso_oscillator_symbol();
        let q = aniso_symbol_with_iso_weights();
        let kn = kn_compose_asymptotic(&p, &q, 40).unwrap();
        let total = kn.total().unwrap();
        let prod = p.mul(&q).unwrap();
        let diff = total.sub(&prod).unwrap();
        let bound = p.order().unwrap() + q.order().unwrap() - 2;
        assert!(diff.order().unwrap() <= bound);
    }

    fn aniso_symbol_with_iso_weights() -> RationalSymbol {
        let t = symbol_table(1, 1);
        let x = Polynomial::var(&t, "x1").unwrap();
        let xi = Polynomial::var(&t, "xi1").unwrap();
        RationalSymbol::polynomial(
            x.pow(2).mul(&xi.pow(2)).add(&x.pow(2)).add(&xi.pow(2)),
            vec![1],
            vec![1],
        )
    }

    #[test]
    fn parametrix_first_residual_order() {
        // p = xi^2 + x^2: residual of p # q0 - 1 has order -2.
        let p = iso_oscillator_symbol();
        let exp = parametrix_expansion(&p, 1).unwrap();
        assert_eq!(exp.residual_orders[0], -2);
        assert_eq!(exp.terms.len(), 1);
        assert_eq!(exp.terms[0].pow, 1);
    }

    #[test]
    fn parametrix_three_terms_isotropic() {
        let p = iso_oscillator_symbol();
        let exp = parametrix_expansion(&p, 3).unwrap();
        // Residual order drops by at least the minimal weight per term.
        assert!(exp.residual_orders[0] <= 0);
        for w in exp.residual_orders.windows(2) {
            assert!(w[1] <= w[0] - 1, "orders {:?}", exp.residual_orders);
        }
        // Criterion: after 3 terms, residual order <= m - 3 min weight.
        assert!(exp.residual_order <= 2 - 3);
        // Measured decay slope close to declared order.
        let slope = measured_order(&exp.residual, 5);
        assert!(
            (slope - exp.residual.order().unwrap() as f64).abs() < 0.3,
            "slope {slope} vs declared {:?}",
            exp.residual.order()
        );
    }

    #[test]
    fn parametrix_three_terms_anisotropic() {
        let p = aniso_symbol();
        let exp = parametrix_expansion(&p, 3).unwrap();
        assert!(exp.residual_order <= 4 - 3);
        let slope = measured_order(&exp.residual, 9);
        assert!(
            (slope - exp.residual.order().unwrap() as f64).abs() < 0.3,
            "slope {slope} vs declared {:?}",
            exp.residual.order()
        );
    }

    #[test]
    fn parametrix_rejects_odd_patterns() {
        let t = symbol_table(1, 1);
        let x = Polynomial::var(&t, "x1").unwrap();
        let xi = Polynomial::var(&t, "xi1").unwrap();
        let p = RationalSymbol::polynomial(xi.pow(2).add(&x.pow(3)), vec![1], vec![1]);
        assert!(matches!(
            parametrix_expansion(&p, 2),
            Err(SymbolError::NotElliptic(_))
        ));
        let neg = RationalSymbol::polynomial(
            xi.pow(2).sub(&x.pow(2)),
            vec![1],
            vec![1],
        );
        assert!(parametrix_expansion(&neg, 2).is_err());
    }

    #[test]
    fn estimate_check_oscillator() {
        let p = iso_oscillator_symbol();
        let config = EstimateConfig::default();
        // (a,b) = (0,0): bounded by ~1; (1,0): |2 xi| / <.> <= 2.
        let report = symbol_estimate_check(
            &p,
            2,
            &[(vec![0], vec![0]), (vec![1], vec![0])],
            &config,
        );
        assert!(report.pass, "{report:?}");
        assert!(report.entries[0].sup_ratio < 1.5);
        assert!(report.entries[1].sup_ratio < 2.5);
        // Misdeclared order m = 1: slope about +1.
        let bad = symbol_estimate_check(&p, 1, &[(vec![0], vec![0])], &config);
        assert!(!bad.pass);
        assert!(bad.entries[0].slope > 0.5);
    }

    #[test]
    fn estimate_check_all_low_derivatives() {
        let p = iso_oscillator_symbol();
        let pairs = derivative_pairs(&p.xi_weights, &p.x_weights, 4);
        let report = symbol_estimate_check(&p, 2, &pairs, &EstimateConfig::default());
        assert!(report.pass, "{}", report.to_json());
        let _ = ratio(1, 2);
    }
}
