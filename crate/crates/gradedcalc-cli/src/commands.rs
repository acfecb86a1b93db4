//! Resolution of problem documents into toolkit objects and execution of
//! the verification commands with the exit-code taxonomy
//! 0 = pass, 2 = verified failure, 3 = inconclusive, 1 = usage error.

use crate::dsl::Document;
use crate::expr::{parse_expr, ExprContext, ExprValue, ParseError};
use gradedcalc::action::{
    deform, double_dilation, group_bundle, grushin, representation, ActionError,
    DeformedAction, PolynomialAction, PropertyP,
};
use gradedcalc::coeff::Rational;
use gradedcalc::elliptic::{
    numeric_rockland, rockland_certificate, NumericRocklandConfig, RocklandVerdict,
};
use gradedcalc::lie::{
    abelian, abelian_weighted, bch_product, dilation_automorphism_check, engel, heisenberg,
    GradedLieAlgebra,
};
use gradedcalc::opalg::{OperatorCalculus, PolyDiffOp};
use gradedcalc::poly::{ratio, PolyMap, VarRole, VarTable};
use gradedcalc::spectral::{convergence_study, selfadjoint_check, SpectralVerdict, StudyConfig};
use gradedcalc::symbolrn::{
    derivative_pairs, measured_order, parametrix_expansion, symbol_estimate_check,
    symbol_table, EstimateConfig, RationalSymbol,
};
use serde_json::{json, Value as Json};
use std::str::FromStr;

/// Usage-level error (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

impl From<ParseError> for UsageError {
    fn from(e: ParseError) -> Self {
        UsageError(format!("parse error at {e}"))
    }
}

/// Command outcome: exit code, JSON details, optional artifacts
/// (name suffix, contents).
pub struct Outcome {
    pub exit_code: i32,
    pub verdict_line: String,
    pub details: Json,
    pub artifacts: Vec<(String, String)>,
}

/// Options merged from the [command] section and CLI flags.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub truncations: Option<Vec<usize>>,
    pub tolerance: Option<f64>,
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 7,
            truncations: None,
            tolerance: None,
            threads: 1,
        }
    }
}

fn resolve_algebra(doc: &Document) -> Result<GradedLieAlgebra, UsageError> {
    let section = doc
        .section("algebra")
        .ok_or_else(|| UsageError("missing [algebra] section".into()))?;
    if let Some(builtin) = doc.get_str("algebra", "builtin") {
        let n = doc
            .get("algebra", "n")
            .and_then(|e| e.value.as_int())
            .unwrap_or(1) as usize;
        return match builtin {
            "heisenberg" => Ok(heisenberg(n)),
            "engel" => Ok(engel()),
            "abelian" => {
                if let Some(w) = doc
                    .get("algebra", "weights")
                    .and_then(|e| e.value.as_u32_list())
                {
                    Ok(abelian_weighted(w))
                } else {
                    Ok(abelian(n))
                }
            }
            other => Err(UsageError(format!("unknown builtin algebra `{other}`"))),
        };
    }
    // Explicit description: weights + brackets.
    let weights = doc
        .get("algebra", "weights")
        .and_then(|e| e.value.as_u32_list())
        .ok_or_else(|| UsageError("explicit algebra needs `weights = [..]`".into()))?;
    let dim = weights.len();
    let mut brackets = Vec::new();
    if let Some(entry) = section.get("brackets") {
        let specs = entry
            .value
            .as_str_list()
            .ok_or_else(|| UsageError("`brackets` must be a list of strings".into()))?;
        for spec in specs {
            brackets.extend(parse_bracket_spec(&spec, dim)?);
        }
    }
    Ok(GradedLieAlgebra::from_brackets(dim, weights, &brackets))
}

/// Parses "[i,j] = c1*Xk1 + Xk2 - ..." into sparse structure constants.
fn parse_bracket_spec(
    spec: &str,
    dim: usize,
) -> Result<Vec<(usize, usize, usize, Rational)>, UsageError> {
    let bad = |m: String| UsageError(format!("bracket `{spec}`: {m}"));
    let Some(eq) = spec.find('=') else {
        return Err(bad("expected `[i,j] = ...`".into()));
    };
    let lhs = spec[..eq].trim();
    let inner = lhs
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("left side must be `[i,j]`".into()))?;
    let mut parts = inner.split(',');
    let parse_idx = |s: Option<&str>| -> Result<usize, UsageError> {
        let raw = s.ok_or_else(|| bad("two indices required".into()))?.trim();
        let v: usize = raw
            .parse()
            .map_err(|_| bad(format!("bad index `{raw}`")))?;
        if v == 0 || v > dim {
            return Err(bad(format!("index {v} out of range 1..={dim}")));
        }
        Ok(v - 1)
    };
    let i = parse_idx(parts.next())?;
    let j = parse_idx(parts.next())?;
    if parts.next().is_some() {
        return Err(bad("exactly two indices".into()));
    }
    // Right side: signed terms c*Xk.
    let mut out = Vec::new();
    let rhs = spec[eq + 1..].trim();
    if rhs == "0" {
        return Ok(out);
    }
    let mut term = String::new();
    let mut terms: Vec<String> = Vec::new();
    for (pos, c) in rhs.chars().enumerate() {
        if (c == '+' || c == '-') && pos > 0 {
            terms.push(std::mem::take(&mut term));
            if c == '-' {
                term.push('-');
            }
        } else {
            term.push(c);
        }
    }
    if !term.trim().is_empty() {
        terms.push(term);
    }
    for t in terms {
        let t = t.trim().replace(' ', "");
        let (coeff_str, gen) = match t.find('X') {
            Some(pos) => (&t[..pos], &t[pos + 1..]),
            None => return Err(bad(format!("term `{t}` has no basis element Xk"))),
        };
        let k: usize = gen
            .parse()
            .map_err(|_| bad(format!("bad basis index in `{t}`")))?;
        if k == 0 || k > dim {
            return Err(bad(format!("basis index {k} out of range")));
        }
        let coeff_core = coeff_str.trim_end_matches('*');
        let coeff = match coeff_core {
            "" | "+" => ratio(1, 1),
            "-" => ratio(-1, 1),
            s => parse_rational(s).ok_or_else(|| bad(format!("bad coefficient `{s}`")))?,
        };
        out.push((i, j, k - 1, coeff));
    }
    Ok(out)
}

fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((a, b)) = s.split_once('/') {
        let num = i64::from_str(a.trim()).ok()?;
        let den = i64::from_str(b.trim()).ok()?;
        if den == 0 {
            return None;
        }
        Some(Rational::new(num.into(), den.into()))
    } else {
        Some(Rational::from_integer(i64::from_str(s.trim()).ok()?.into()))
    }
}

/// Resolved action: the base action plus the eager deformation result.
pub struct ResolvedAction {
    pub base: PolynomialAction,
    pub deformed: Result<DeformedAction, ActionError>,
}

fn resolve_action(doc: &Document) -> Result<ResolvedAction, UsageError> {
    let section = doc
        .section("action")
        .ok_or_else(|| UsageError("missing [action] section".into()))?;
    if let Some(builtin) = doc.get_str("action", "builtin") {
        match builtin {
            "double_dilation" => {
                let alg = resolve_algebra(doc)?;
                let beta = section
                    .get("beta")
                    .and_then(|e| e.value.as_u32_list())
                    .unwrap_or_else(|| alg.weights.clone());
                let da = double_dilation(&alg, &beta)
                    .map_err(|e| UsageError(format!("double dilation failed: {e}")))?;
                Ok(ResolvedAction {
                    base: da.base.clone(),
                    deformed: Ok(da),
                })
            }
            "representation" => {
                let alg = resolve_algebra(doc)?;
                let da = representation(&alg)
                    .map_err(|e| UsageError(format!("representation groupoid failed: {e}")))?;
                Ok(ResolvedAction {
                    base: da.base.clone(),
                    deformed: Ok(da),
                })
            }
            "group_bundle" => {
                let alg = resolve_algebra(doc)?;
                let fibre = section
                    .get("fibre_weights")
                    .and_then(|e| e.value.as_u32_list())
                    .ok_or_else(|| {
                        UsageError("group_bundle needs `fibre_weights = [..]`".into())
                    })?;
                let base = group_bundle(&fibre, &alg)
                    .map_err(|e| UsageError(format!("group bundle failed: {e}")))?;
                let deformed = deform(&base);
                Ok(ResolvedAction { base, deformed })
            }
            "grushin" => {
                let params = section
                    .get("params")
                    .and_then(|e| e.value.as_u32_list())
                    .ok_or_else(|| {
                        UsageError("grushin needs `params = [k, l, p, q]`".into())
                    })?;
                if params.len() != 4 {
                    return Err(UsageError("grushin takes four parameters".into()));
                }
                let base = grushin(params[0], params[1], params[2], params[3])
                    .map_err(|e| UsageError(format!("grushin action failed: {e}")))?;
                let deformed = deform(&base);
                Ok(ResolvedAction { base, deformed })
            }
            other => Err(UsageError(format!("unknown builtin action `{other}`"))),
        }
    } else {
        // Explicit polynomial formulas.
        let alg = resolve_algebra(doc)?;
        let law = bch_product(&alg)
            .map_err(|e| UsageError(format!("group law construction failed: {e}")))?;
        let theta_entries = section
            .get("theta")
            .ok_or_else(|| UsageError("explicit action needs `theta = [..]`".into()))?;
        let formulas = theta_entries
            .value
            .as_str_list()
            .ok_or_else(|| UsageError("`theta` must be a list of strings".into()))?;
        let d = formulas.len();
        let space_weights = section
            .get("space_weights")
            .and_then(|e| e.value.as_u32_list())
            .unwrap_or_else(|| vec![1; d]);
        if space_weights.len() != d {
            return Err(UsageError(
                "space_weights length must match the number of theta components".into(),
            ));
        }
        let table = gradedcalc::action::action_table(d, alg.dim);
        let ctx = ExprContext::Polynomial { table: &table };
        let mut components = Vec::with_capacity(d);
        for f in &formulas {
            match parse_expr(f, &ctx, theta_entries.line)? {
                ExprValue::Poly(p) => components.push(p),
                ExprValue::Op(_) => {
                    return Err(UsageError("theta components must be polynomials".into()))
                }
            }
        }
        let base = PolynomialAction {
            group: law,
            space_dim: d,
            space_weights,
            theta: PolyMap::new(table, components),
        };
        let report = base.validate();
        if !report.is_empty() {
            return Err(UsageError(format!(
                "explicit action is not an action: {}",
                report.join("; ")
            )));
        }
        let deformed = deform(&base);
        Ok(ResolvedAction { base, deformed })
    }
}

fn resolve_operator(
    doc: &Document,
    action: Option<&PolynomialAction>,
) -> Result<PolyDiffOp, UsageError> {
    let entry = doc
        .get("operator", "expr")
        .ok_or_else(|| UsageError("missing [operator] expr".into()))?;
    let expr = entry
        .value
        .as_str()
        .ok_or_else(|| UsageError("operator expr must be a string".into()))?;
    let (space, fields) = match action {
        Some(a) => {
            let d = a.space_dim;
            let space = VarTable::new(VarTable::family("x", VarRole::Space, d));
            let mut fields = Vec::with_capacity(a.group_dim());
            for j in 0..a.group_dim() {
                let f = a
                    .fundamental_field(j)
                    .map_err(|e| UsageError(format!("fundamental field failed: {e}")))?;
                fields.push(PolyDiffOp::from_vector_field(&f));
            }
            (space, Some(fields))
        }
        None => {
            let dim = doc
                .get("operator", "dim")
                .and_then(|e| e.value.as_int())
                .map(|v| v as usize)
                .or_else(|| infer_dim(expr))
                .ok_or_else(|| {
                    UsageError("cannot infer dimension; add `dim = ..` to [operator]".into())
                })?;
            (
                VarTable::new(VarTable::family("x", VarRole::Space, dim)),
                None,
            )
        }
    };
    let ctx = ExprContext::Operator {
        space: &space,
        xhat: fields.as_deref(),
    };
    match parse_expr(expr, &ctx, entry.line)? {
        ExprValue::Op(op) => Ok(op),
        ExprValue::Poly(_) => Err(UsageError("expected an operator expression".into())),
    }
}

fn infer_dim(expr: &str) -> Option<usize> {
    let mut max_idx = 0usize;
    for marker in ["x(", "d("] {
        let mut rest = expr;
        while let Some(pos) = rest.find(marker) {
            rest = &rest[pos + marker.len()..];
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(v) = digits.parse::<usize>() {
                max_idx = max_idx.max(v);
            }
        }
    }
    if max_idx > 0 {
        Some(max_idx)
    } else {
        None
    }
}

fn resolve_symbol(doc: &Document) -> Result<RationalSymbol, UsageError> {
    let entry = doc
        .get("symbol", "expr")
        .ok_or_else(|| UsageError("missing [symbol] expr".into()))?;
    let expr = entry
        .value
        .as_str()
        .ok_or_else(|| UsageError("symbol expr must be a string".into()))?;
    let x_weights = doc
        .get("symbol", "x_weights")
        .and_then(|e| e.value.as_u32_list());
    let xi_weights = doc
        .get("symbol", "xi_weights")
        .and_then(|e| e.value.as_u32_list());
    let dim = x_weights
        .as_ref()
        .map(|w| w.len())
        .or_else(|| infer_symbol_dim(expr))
        .ok_or_else(|| UsageError("cannot infer symbol dimension; set x_weights".into()))?;
    let x_weights = x_weights.unwrap_or_else(|| vec![1; dim]);
    let xi_weights = xi_weights.unwrap_or_else(|| vec![1; dim]);
    if x_weights.len() != xi_weights.len() {
        return Err(UsageError(
            "x_weights and xi_weights must have equal length".into(),
        ));
    }
    let table = symbol_table(x_weights.len(), xi_weights.len());
    let ctx = ExprContext::Polynomial { table: &table };
    match parse_expr(expr, &ctx, entry.line)? {
        ExprValue::Poly(p) => Ok(RationalSymbol::polynomial(p, x_weights, xi_weights)),
        ExprValue::Op(_) => Err(UsageError("expected a polynomial symbol".into())),
    }
}

fn infer_symbol_dim(expr: &str) -> Option<usize> {
    let mut max_idx = 0usize;
    for marker in ["x(", "xi("] {
        let mut rest = expr;
        while let Some(pos) = rest.find(marker) {
            rest = &rest[pos + marker.len()..];
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(v) = digits.parse::<usize>() {
                max_idx = max_idx.max(v);
            }
        }
    }
    if max_idx > 0 {
        Some(max_idx)
    } else {
        None
    }
}

fn poly_map_json(map: &PolyMap) -> Json {
    Json::Array(
        map.components
            .iter()
            .map(|c| Json::String(c.to_string()))
            .collect(),
    )
}

/// Runs the named command from the document.
pub fn run(doc: &Document, opts: &RunOptions) -> Result<Outcome, UsageError> {
    let name = doc
        .get_str("command", "name")
        .ok_or_else(|| UsageError("missing [command] name".into()))?
        .to_string();
    match name.as_str() {
        "verify-group" => cmd_verify_group(doc),
        "deform" => cmd_deform(doc),
        "check-P" => cmd_check_p(doc),
        "check-R" => cmd_check_r(doc),
        "symbol-group" => cmd_symbol_group(doc),
        "normal-form" => cmd_normal_form(doc),
        "cocosymbol" => cmd_cocosymbol(doc),
        "rockland" => cmd_rockland(doc, opts),
        "spectrum" => cmd_spectrum(doc, opts),
        "parametrix" => cmd_parametrix(doc),
        "symbol-estimates" => cmd_symbol_estimates(doc, opts),
        other => Err(UsageError(format!("unknown command `{other}`"))),
    }
}

fn cmd_verify_group(doc: &Document) -> Result<Outcome, UsageError> {
    let alg = resolve_algebra(doc)?;
    let defects = alg.validate();
    if !defects.is_empty() {
        let list: Vec<String> = defects.iter().map(|d| d.to_string()).collect();
        return Ok(Outcome {
            exit_code: 2,
            verdict_line: format!("FAIL verify-group: {}", list.join("; ")),
            details: json!({ "defects": list }),
            artifacts: vec![],
        });
    }
    let law = bch_product(&alg).map_err(|e| UsageError(e.to_string()))?;
    let automorphism = dilation_automorphism_check(&law);
    let details = json!({
        "dimension": alg.dim,
        "weights": alg.weights,
        "homogeneous_dimension": alg.homogeneous_dimension(),
        "group_law": poly_map_json(&law.product),
        "dilation_automorphism": automorphism,
    });
    if automorphism {
        Ok(Outcome {
            exit_code: 0,
            verdict_line: "PASS verify-group: axioms, BCH law and dilations verified".into(),
            details,
            artifacts: vec![],
        })
    } else {
        Ok(Outcome {
            exit_code: 2,
            verdict_line: "FAIL verify-group: dilations are not automorphisms".into(),
            details,
            artifacts: vec![],
        })
    }
}

fn cmd_deform(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    match act.deformed {
        Ok(da) => {
            let zero = da
                .theta_zero()
                .map_err(|e| UsageError(e.to_string()))?;
            Ok(Outcome {
                exit_code: 0,
                verdict_line: "PASS deform: action extends smoothly to t = 0".into(),
                details: json!({
                    "theta_t": poly_map_json(&da.theta_t),
                    "theta_zero": poly_map_json(&zero.theta),
                }),
                artifacts: vec![],
            })
        }
        Err(ActionError::NotShubin { component, exponent }) => Ok(Outcome {
            exit_code: 2,
            verdict_line: format!(
                "FAIL deform: component {} carries t^{exponent}",
                component + 1
            ),
            details: json!({
                "witness": { "component": component + 1, "t_exponent": exponent },
            }),
            artifacts: vec![],
        }),
        Err(e) => Err(UsageError(e.to_string())),
    }
}

fn cmd_check_p(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    match act.base.check_property_p() {
        PropertyP::Holds { omega } => Ok(Outcome {
            exit_code: 0,
            verdict_line: "PASS check-P: shear map has a verified polynomial inverse".into(),
            details: json!({ "omega": poly_map_json(&omega) }),
            artifacts: vec![],
        }),
        PropertyP::Undetermined { reason } => Ok(Outcome {
            exit_code: 3,
            verdict_line: format!("INCONCLUSIVE check-P: {reason}"),
            details: json!({ "reason": reason }),
            artifacts: vec![],
        }),
    }
}

fn cmd_check_r(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    let da = match act.deformed {
        Ok(da) => da,
        Err(ActionError::NotShubin { component, exponent }) => {
            return Ok(Outcome {
                exit_code: 2,
                verdict_line: format!(
                    "FAIL check-R: not a Shubin action (component {} has t^{exponent})",
                    component + 1
                ),
                details: json!({ "not_shubin": true }),
                artifacts: vec![],
            })
        }
        Err(e) => return Err(UsageError(e.to_string())),
    };
    match da.check_property_r() {
        Ok(()) => Ok(Outcome {
            exit_code: 0,
            verdict_line: "PASS check-R: the t = 0 action is linear".into(),
            details: json!({ "linear": true }),
            artifacts: vec![],
        }),
        Err(witness) => Ok(Outcome {
            exit_code: 2,
            verdict_line: format!("FAIL check-R: {witness}"),
            details: json!({ "witness": witness }),
            artifacts: vec![],
        }),
    }
}

fn symbol_group_json(sg: &gradedcalc::action::SymbolAlgebra) -> Json {
    let mut brackets = Vec::new();
    for i in 0..sg.dim() {
        for j in (i + 1)..sg.dim() {
            let mut terms = Vec::new();
            for k in 0..sg.dim() {
                let c = sg.algebra.structure_constant(i, j, k);
                if *c != ratio(0, 1) {
                    terms.push(format!("{} {}", c, sg.algebra.labels[k]));
                }
            }
            if !terms.is_empty() {
                brackets.push(format!(
                    "[{}, {}] = {}",
                    sg.algebra.labels[i],
                    sg.algebra.labels[j],
                    terms.join(" + ")
                ));
            }
        }
    }
    json!({
        "dimension": sg.dim(),
        "labels": sg.algebra.labels,
        "weights": sg.algebra.weights,
        "brackets": brackets,
    })
}

fn cmd_symbol_group(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    let da = act.deformed.map_err(|e| UsageError(e.to_string()))?;
    match da.symbol_group() {
        Ok(sg) => Ok(Outcome {
            exit_code: 0,
            verdict_line: "PASS symbol-group: graded symbol algebra constructed".into(),
            details: symbol_group_json(&sg),
            artifacts: vec![],
        }),
        Err(ActionError::PropertyRFails(witness)) => Ok(Outcome {
            exit_code: 2,
            verdict_line: format!("FAIL symbol-group: property (R) fails ({witness})"),
            details: json!({ "witness": witness }),
            artifacts: vec![],
        }),
        Err(e) => Err(UsageError(e.to_string())),
    }
}

fn normal_form_json(nf: &gradedcalc::opalg::NormalForm) -> Json {
    let coeffs: Vec<Json> = nf
        .coefficients
        .iter()
        .map(|((a, b), c)| {
            json!({
                "a": a,
                "b": b,
                "coefficient": c.to_string(),
            })
        })
        .collect();
    Json::Array(coeffs)
}

fn cmd_normal_form(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    let da = act.deformed.map_err(|e| UsageError(e.to_string()))?;
    let op = resolve_operator(doc, Some(&act.base))?;
    let calc = match OperatorCalculus::new(&da) {
        Ok(c) => c,
        Err(e) => {
            return Ok(Outcome {
                exit_code: 3,
                verdict_line: format!("INCONCLUSIVE normal-form: {e}"),
                details: json!({ "reason": e.to_string() }),
                artifacts: vec![],
            })
        }
    };
    let nf = calc.normal_form(&op).map_err(|e| UsageError(e.to_string()))?;
    let order = nf.order(&calc.alpha, &calc.beta);
    Ok(Outcome {
        exit_code: 0,
        verdict_line: format!(
            "PASS normal-form: {} terms, order {}",
            nf.coefficients.len(),
            order.map(|o| o.to_string()).unwrap_or_else(|| "-inf".into())
        ),
        details: json!({
            "coefficients": normal_form_json(&nf),
            "order": order,
        }),
        artifacts: vec![],
    })
}

fn cmd_cocosymbol(doc: &Document) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    let da = act.deformed.map_err(|e| UsageError(e.to_string()))?;
    let op = resolve_operator(doc, Some(&act.base))?;
    let calc = match OperatorCalculus::new(&da) {
        Ok(c) => c,
        Err(e) => {
            return Ok(Outcome {
                exit_code: 3,
                verdict_line: format!("INCONCLUSIVE cocosymbol: {e}"),
                details: json!({ "reason": e.to_string() }),
                artifacts: vec![],
            })
        }
    };
    let sg = match da.symbol_group() {
        Ok(sg) => sg,
        Err(e) => {
            return Ok(Outcome {
                exit_code: 2,
                verdict_line: format!("FAIL cocosymbol: {e}"),
                details: json!({ "reason": e.to_string() }),
                artifacts: vec![],
            })
        }
    };
    let nf = calc.normal_form(&op).map_err(|e| UsageError(e.to_string()))?;
    let order = nf
        .order(&calc.alpha, &calc.beta)
        .ok_or_else(|| UsageError("zero operator has no cocosymbol".into()))?;
    let coco = nf
        .cocosymbol(order, &sg)
        .map_err(|e| UsageError(e.to_string()))?;
    Ok(Outcome {
        exit_code: 0,
        verdict_line: format!("PASS cocosymbol: order {order}, element {coco}"),
        details: json!({
            "order": order,
            "cocosymbol": coco.to_string(),
            "symbol_group": symbol_group_json(&sg),
        }),
        artifacts: vec![],
    })
}

fn cmd_rockland(doc: &Document, opts: &RunOptions) -> Result<Outcome, UsageError> {
    let act = resolve_action(doc)?;
    let da = act.deformed.map_err(|e| UsageError(e.to_string()))?;
    let op = resolve_operator(doc, Some(&act.base))?;
    let calc = match OperatorCalculus::new(&da) {
        Ok(c) => c,
        Err(e) => {
            return Ok(Outcome {
                exit_code: 3,
                verdict_line: format!("INCONCLUSIVE rockland: {e}"),
                details: json!({ "reason": e.to_string() }),
                artifacts: vec![],
            })
        }
    };
    let sg = match da.symbol_group() {
        Ok(sg) => sg,
        Err(e) => {
            return Ok(Outcome {
                exit_code: 2,
                verdict_line: format!("FAIL rockland: {e}"),
                details: json!({ "reason": e.to_string() }),
                artifacts: vec![],
            })
        }
    };
    let nf = calc.normal_form(&op).map_err(|e| UsageError(e.to_string()))?;
    let order = nf
        .order(&calc.alpha, &calc.beta)
        .ok_or_else(|| UsageError("zero operator".into()))?;
    let coco = nf
        .cocosymbol(order, &sg)
        .map_err(|e| UsageError(e.to_string()))?;
    let certificate = rockland_certificate(&coco);
    if let RocklandVerdict::CertifiedElliptic {
        subset,
        common_multiple,
        notes,
    } = &certificate
    {
        return Ok(Outcome {
            exit_code: 0,
            verdict_line: format!(
                "PASS rockland: certified elliptic (subset {subset:?}, q = {common_multiple})"
            ),
            details: json!({
                "status": "certified-elliptic",
                "notes": notes,
                "cocosymbol": coco.to_string(),
            }),
            artifacts: vec![],
        });
    }
    // Numeric fallback on the group itself (double-dilation style check).
    let mut config = NumericRocklandConfig {
        seed: opts.seed,
        ..Default::default()
    };
    if let Some(t) = &opts.truncations {
        config.truncations = t.clone();
    }
    let numeric = numeric_rockland(
        &nf,
        &act.base.group.algebra,
        &act.base.space_weights,
        order,
        &config,
    );
    match numeric {
        Ok(RocklandVerdict::NumericEvidence { table, scalar_min, notes }) => {
            let sigma_table: Vec<Json> = table
                .iter()
                .map(|s| {
                    json!({
                        "x0": s.x0,
                        "lambda": s.lambda,
                        "sigma_min": s.sigmas.iter().map(|&(n, v)| json!([n, v])).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok(Outcome {
                exit_code: 0,
                verdict_line: "PASS rockland: numeric evidence (sigma_min stable)".into(),
                details: json!({
                    "status": "numeric-evidence",
                    "notes": notes,
                    "scalar_min": scalar_min,
                    "samples": sigma_table,
                }),
                artifacts: vec![],
            })
        }
        Ok(RocklandVerdict::NumericFailure { witness, notes, .. }) => Ok(Outcome {
            exit_code: 2,
            verdict_line: format!("FAIL rockland: {witness}"),
            details: json!({ "status": "numeric-failure", "witness": witness, "notes": notes }),
            artifacts: vec![],
        }),
        Ok(RocklandVerdict::Inconclusive { notes }) => Ok(Outcome {
            exit_code: 3,
            verdict_line: format!("INCONCLUSIVE rockland: {notes}"),
            details: json!({ "status": "inconclusive", "notes": notes }),
            artifacts: vec![],
        }),
        Ok(RocklandVerdict::CertifiedElliptic { .. }) => unreachable!(),
        Err(e) => Ok(Outcome {
            exit_code: 3,
            verdict_line: format!("INCONCLUSIVE rockland: {e}"),
            details: json!({ "status": "inconclusive", "notes": e.to_string() }),
            artifacts: vec![],
        }),
    }
}

fn cmd_spectrum(doc: &Document, opts: &RunOptions) -> Result<Outcome, UsageError> {
    // The operator may reference an action's fields or stand alone.
    let action = doc.section("action").map(|_| resolve_action(doc)).transpose()?;
    let op = resolve_operator(doc, action.as_ref().map(|a| &a.base))?;
    if op.formal_adjoint() != op {
        return Ok(Outcome {
            exit_code: 2,
            verdict_line: "FAIL spectrum: operator is not formally self-adjoint".into(),
            details: json!({ "self_adjoint": false }),
            artifacts: vec![],
        });
    }
    let truncations = opts
        .truncations
        .clone()
        .or_else(|| {
            doc.get("command", "truncations")
                .and_then(|e| e.value.as_usize_list())
        })
        .unwrap_or_else(|| vec![10, 14, 18]);
    let k = doc
        .get("command", "eigenvalues")
        .and_then(|e| e.value.as_int())
        .unwrap_or(5) as usize;
    let mut config = StudyConfig {
        threads: opts.threads,
        ..Default::default()
    };
    if let Some(t) = opts.tolerance.or_else(|| {
        doc.get("command", "tolerance")
            .and_then(|e| e.value.as_f64())
    }) {
        config.tol_rel = t;
    }
    let report = convergence_study(&op, &truncations, k, &config)
        .map_err(|e| UsageError(e.to_string()))?;
    let csv = report.to_csv();
    let finals = report.final_eigenvalues();
    let selfadj = selfadjoint_check(&op);
    let details = json!({
        "self_adjoint": selfadj,
        "hermitian": report.hermitian,
        "verdict": match report.verdict {
            SpectralVerdict::DiscreteEvidence => "discrete-evidence",
            SpectralVerdict::Unresolved => "unresolved",
        },
        "verdict_reason": report.verdict_reason,
        "truncations": truncations,
        "eigenvalues": finals,
        "tol_abs": report.tol_abs,
        "tol_rel": report.tol_rel,
    });
    match report.verdict {
        SpectralVerdict::DiscreteEvidence => Ok(Outcome {
            exit_code: 0,
            verdict_line: format!(
                "PASS spectrum: discrete-evidence, lowest eigenvalue {:.6}",
                report.final_eigenvalues().first().copied().unwrap_or(f64::NAN)
            ),
            details,
            artifacts: vec![("spectrum".into(), csv)],
        }),
        SpectralVerdict::Unresolved => Ok(Outcome {
            exit_code: 3,
            verdict_line: format!(
                "INCONCLUSIVE spectrum: {}",
                report.verdict_reason
            ),
            details,
            artifacts: vec![("spectrum".into(), csv)],
        }),
    }
}

fn cmd_parametrix(doc: &Document) -> Result<Outcome, UsageError> {
    let symbol = resolve_symbol(doc)?;
    let n_terms = doc
        .get("command", "terms")
        .and_then(|e| e.value.as_int())
        .unwrap_or(3) as usize;
    match parametrix_expansion(&symbol, n_terms) {
        Ok(exp) => {
            let slope = measured_order(&exp.residual, 5);
            let declared = exp.residual.order();
            let term_orders: Vec<Option<i64>> = exp.terms.iter().map(|t| t.order()).collect();
            Ok(Outcome {
                exit_code: 0,
                verdict_line: format!(
                    "PASS parametrix: {n_terms} terms, residual order {} (measured slope {slope:.2})",
                    exp.residual_order
                ),
                details: json!({
                    "term_orders": term_orders,
                    "residual_order": exp.residual_order,
                    "residual_orders": exp.residual_orders,
                    "declared_residual_order": declared,
                    "measured_slope": slope,
                }),
                artifacts: vec![],
            })
        }
        Err(e) => Ok(Outcome {
            exit_code: 2,
            verdict_line: format!("FAIL parametrix: {e}"),
            details: json!({ "reason": e.to_string() }),
            artifacts: vec![],
        }),
    }
}

fn cmd_symbol_estimates(doc: &Document, opts: &RunOptions) -> Result<Outcome, UsageError> {
    let symbol = resolve_symbol(doc)?;
    let m = doc
        .get("command", "order")
        .and_then(|e| e.value.as_int())
        .or_else(|| symbol.order())
        .ok_or_else(|| UsageError("zero symbol has no order".into()))?;
    let bound = doc
        .get("command", "max_derivative_order")
        .and_then(|e| e.value.as_int())
        .unwrap_or(4);
    let pairs = derivative_pairs(&symbol.xi_weights, &symbol.x_weights, bound);
    let config = EstimateConfig {
        seed: opts.seed,
        ..Default::default()
    };
    let report = symbol_estimate_check(&symbol, m, &pairs, &config);
    let artifact = report.to_json();
    let details = json!({
        "order": m,
        "derivative_pairs": pairs.len(),
        "pass": report.pass,
    });
    if report.pass {
        Ok(Outcome {
            exit_code: 0,
            verdict_line: format!(
                "PASS symbol-estimates: {} derivative pairs bounded",
                pairs.len()
            ),
            details,
            artifacts: vec![("estimates".into(), artifact)],
        })
    } else {
        Ok(Outcome {
            exit_code: 2,
            verdict_line: "FAIL symbol-estimates: growth trend detected".into(),
            details,
            artifacts: vec![("estimates".into(), artifact)],
        })
    }
}
