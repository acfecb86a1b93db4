//! Expression parser for operators and symbols: a small arithmetic grammar
//! with `Xhat(j)`, `x(j)`, `d(j)`, `xi(j)`, `^`, `*`, `+`, `-`, `/`,
//! rational literals, `i`, and bare variable names in polynomial contexts.

use gradedcalc::coeff::Gaussian;
use gradedcalc::opalg::PolyDiffOp;
use gradedcalc::poly::{Polynomial, VarTable};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(input: &str, line_offset: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = line_offset;
    let mut col = 1usize;
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '+' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Plus, line: tline, col: tcol });
            }
            '-' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Minus, line: tline, col: tcol });
            }
            '*' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Star, line: tline, col: tcol });
            }
            '/' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Slash, line: tline, col: tcol });
            }
            '^' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Caret, line: tline, col: tcol });
            }
            '(' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
            }
            ')' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
            }
            ',' => {
                chars.next();
                col += 1;
                out.push(Spanned { tok: Tok::Comma, line: tline, col: tcol });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let v: i64 = s.parse().map_err(|_| ParseError {
                    message: format!("integer literal `{s}` out of range"),
                    line: tline,
                    col: tcol,
                })?;
                out.push(Spanned { tok: Tok::Int(v), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Ident(s), line: tline, col: tcol });
            }
            other => {
                return Err(ParseError {
                    message: format!("unexpected character `{other}`"),
                    line: tline,
                    col: tcol,
                });
            }
        }
    }
    Ok(out)
}

/// What the indexed atoms mean in the current context.
pub enum ExprContext<'a> {
    /// Operators on (x1..xd): `x(j)`, `d(j)`, and `Xhat(j)` when fundamental
    /// fields are supplied.
    Operator {
        space: &'a Arc<VarTable>,
        xhat: Option<&'a [PolyDiffOp]>,
    },
    /// Polynomials over a variable table; `x(j)`/`v(j)`/`xi(j)` and bare
    /// names resolve through the table.
    Polynomial { table: &'a Arc<VarTable> },
}

/// Either an operator or a polynomial, depending on the context.
#[derive(Debug)]
pub enum ExprValue {
    Op(PolyDiffOp),
    Poly(Polynomial),
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    ctx: &'a ExprContext<'a>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(s) => ParseError {
                message: message.into(),
                line: s.line,
                col: s.col,
            },
            None => {
                let (line, col) = self
                    .toks
                    .last()
                    .map(|s| (s.line, s.col + 1))
                    .unwrap_or((1, 1));
                ParseError {
                    message: format!("{} (at end of input)", message.into()),
                    line,
                    col,
                }
            }
        }
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        match self.next() {
            Some(s) if s.tok == tok => Ok(()),
            Some(s) => Err(ParseError {
                message: format!("expected {tok:?}, found {:?}", s.tok),
                line: s.line,
                col: s.col,
            }),
            None => Err(self.err_here(format!("expected {tok:?}"))),
        }
    }

    fn parse_sum(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.parse_product()?;
        while let Some(s) = self.peek() {
            match s.tok {
                Tok::Plus => {
                    self.next();
                    let rhs = self.parse_product()?;
                    acc = acc.add(&rhs).map_err(|m| self.err_here(m))?;
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.parse_product()?;
                    acc = acc.sub(&rhs).map_err(|m| self.err_here(m))?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_product(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.parse_unary()?;
        while let Some(s) = self.peek() {
            match s.tok {
                Tok::Star => {
                    self.next();
                    let rhs = self.parse_unary()?;
                    acc = acc.mul(&rhs).map_err(|m| self.err_here(m))?;
                }
                Tok::Slash => {
                    self.next();
                    let rhs = self.parse_unary()?;
                    acc = acc.div(&rhs).map_err(|m| self.err_here(m))?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Value, ParseError> {
        if let Some(s) = self.peek() {
            if s.tok == Tok::Minus {
                self.next();
                let v = self.parse_unary()?;
                return Ok(v.neg());
            }
            if s.tok == Tok::Plus {
                self.next();
                return self.parse_unary();
            }
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Value, ParseError> {
        let base = self.parse_atom()?;
        if let Some(s) = self.peek() {
            if s.tok == Tok::Caret {
                self.next();
                let exp = match self.next() {
                    Some(Spanned { tok: Tok::Int(v), .. }) if v >= 0 => v as u32,
                    Some(s) => {
                        return Err(ParseError {
                            message: "exponent must be a nonnegative integer".into(),
                            line: s.line,
                            col: s.col,
                        })
                    }
                    None => return Err(self.err_here("dangling `^` without an exponent")),
                };
                return Ok(base.pow(exp));
            }
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Value, ParseError> {
        let s = match self.next() {
            Some(s) => s,
            None => return Err(self.err_here("expected an expression")),
        };
        match s.tok {
            Tok::Int(v) => Ok(self.constant(Gaussian::from_int(v))),
            Tok::LParen => {
                let v = self.parse_sum()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Ident(name) => {
                if name == "i" {
                    return Ok(self.constant(Gaussian::i()));
                }
                // Function-style atom name(j)?
                if matches!(self.peek().map(|s| &s.tok), Some(Tok::LParen)) {
                    self.next();
                    let idx = match self.next() {
                        Some(Spanned { tok: Tok::Int(v), .. }) if v >= 1 => v as usize,
                        _ => {
                            return Err(ParseError {
                                message: format!("`{name}(...)` needs a positive index"),
                                line: s.line,
                                col: s.col,
                            })
                        }
                    };
                    self.expect(Tok::RParen)?;
                    return self.indexed_atom(&name, idx, s.line, s.col);
                }
                // Bare identifier: variable lookup in polynomial contexts.
                match self.ctx {
                    ExprContext::Polynomial { table } => {
                        match Polynomial::var(table, &name) {
                            Ok(p) => Ok(Value::Poly(p)),
                            Err(_) => Err(ParseError {
                                message: format!("unknown variable `{name}`"),
                                line: s.line,
                                col: s.col,
                            }),
                        }
                    }
                    ExprContext::Operator { .. } => Err(ParseError {
                        message: format!(
                            "unknown name `{name}`; operator atoms are Xhat(j), x(j), d(j)"
                        ),
                        line: s.line,
                        col: s.col,
                    }),
                }
            }
            other => Err(ParseError {
                message: format!("unexpected token {other:?}"),
                line: s.line,
                col: s.col,
            }),
        }
    }

    fn constant(&self, c: Gaussian) -> Value {
        match self.ctx {
            ExprContext::Operator { space, .. } => {
                Value::Op(PolyDiffOp::multiplication(&Polynomial::constant(space, c)))
            }
            ExprContext::Polynomial { table } => {
                Value::Poly(Polynomial::constant(table, c))
            }
        }
    }

    fn indexed_atom(
        &self,
        name: &str,
        idx: usize,
        line: usize,
        col: usize,
    ) -> Result<Value, ParseError> {
        let make_err = |m: String| ParseError {
            message: m,
            line,
            col,
        };
        match self.ctx {
            ExprContext::Operator { space, xhat } => {
                let d = space.len();
                match name {
                    "x" => {
                        if idx > d {
                            return Err(make_err(format!("x({idx}) exceeds dimension {d}")));
                        }
                        Ok(Value::Op(PolyDiffOp::multiplication(
                            &Polynomial::var_by_index(space, idx - 1),
                        )))
                    }
                    "d" => {
                        if idx > d {
                            return Err(make_err(format!("d({idx}) exceeds dimension {d}")));
                        }
                        Ok(Value::Op(PolyDiffOp::partial(space, idx - 1)))
                    }
                    "Xhat" => match xhat {
                        Some(fields) => {
                            if idx > fields.len() {
                                return Err(make_err(format!(
                                    "Xhat({idx}) exceeds the group dimension {}",
                                    fields.len()
                                )));
                            }
                            Ok(Value::Op(fields[idx - 1].clone()))
                        }
                        None => Err(make_err(
                            "Xhat(j) needs an action in scope".into(),
                        )),
                    },
                    other => Err(make_err(format!(
                        "unknown operator atom `{other}`; expected Xhat, x or d"
                    ))),
                }
            }
            ExprContext::Polynomial { table } => {
                let var_name = format!("{name}{idx}");
                match Polynomial::var(table, &var_name) {
                    Ok(p) => Ok(Value::Poly(p)),
                    Err(_) => Err(make_err(format!("unknown variable `{var_name}`"))),
                }
            }
        }
    }
}

/// Intermediate value with arithmetic; both variants enforce that division
/// only happens by nonzero constants.
enum Value {
    Op(PolyDiffOp),
    Poly(Polynomial),
}

impl Value {
    fn add(&self, other: &Value) -> Result<Value, String> {
        match (self, other) {
            (Value::Op(a), Value::Op(b)) => Ok(Value::Op(a.add(b))),
            (Value::Poly(a), Value::Poly(b)) => Ok(Value::Poly(a.add(b))),
            _ => Err("mixed operator/polynomial arithmetic".into()),
        }
    }

    fn sub(&self, other: &Value) -> Result<Value, String> {
        match (self, other) {
            (Value::Op(a), Value::Op(b)) => Ok(Value::Op(a.sub(b))),
            (Value::Poly(a), Value::Poly(b)) => Ok(Value::Poly(a.sub(b))),
            _ => Err("mixed operator/polynomial arithmetic".into()),
        }
    }

    fn mul(&self, other: &Value) -> Result<Value, String> {
        match (self, other) {
            (Value::Op(a), Value::Op(b)) => Ok(Value::Op(a.compose(b))),
            (Value::Poly(a), Value::Poly(b)) => Ok(Value::Poly(a.mul(b))),
            _ => Err("mixed operator/polynomial arithmetic".into()),
        }
    }

    fn div(&self, other: &Value) -> Result<Value, String> {
        let c = other.as_constant().ok_or("division only by constants")?;
        if c.is_zero() {
            return Err("division by zero".into());
        }
        let inv = c.inv();
        Ok(match self {
            Value::Op(a) => Value::Op(a.scale(&inv)),
            Value::Poly(a) => Value::Poly(a.scale(&inv)),
        })
    }

    fn neg(&self) -> Value {
        match self {
            Value::Op(a) => Value::Op(a.neg()),
            Value::Poly(a) => Value::Poly(a.neg()),
        }
    }

    fn pow(&self, e: u32) -> Value {
        match self {
            Value::Op(a) => Value::Op(a.pow(e)),
            Value::Poly(a) => Value::Poly(a.pow(e)),
        }
    }

    fn as_constant(&self) -> Option<Gaussian> {
        match self {
            Value::Op(a) => {
                let mut terms = a.terms();
                match (terms.next(), terms.next()) {
                    (None, _) => Some(Gaussian::zero()),
                    (Some((idx, p)), None)
                        if idx.iter().all(|&e| e == 0) && p.is_constant() =>
                    {
                        Some(p.constant_term())
                    }
                    _ => None,
                }
            }
            Value::Poly(p) => {
                if p.is_constant() {
                    Some(p.constant_term())
                } else {
                    None
                }
            }
        }
    }
}

/// Parses an expression in the given context. `line_offset` anchors the
/// diagnostics to the position of the expression in the source document.
pub fn parse_expr(
    input: &str,
    ctx: &ExprContext,
    line_offset: usize,
) -> Result<ExprValue, ParseError> {
    let toks = lex(input, line_offset)?;
    if toks.is_empty() {
        return Err(ParseError {
            message: "empty expression".into(),
            line: line_offset,
            col: 1,
        });
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        ctx,
    };
    let v = parser.parse_sum()?;
    if let Some(s) = parser.peek() {
        return Err(ParseError {
            message: format!("trailing input starting at {:?}", s.tok),
            line: s.line,
            col: s.col,
        });
    }
    Ok(match v {
        Value::Op(op) => ExprValue::Op(op),
        Value::Poly(p) => ExprValue::Poly(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gradedcalc::poly::VarRole;

    fn space(d: usize) -> Arc<VarTable> {
        VarTable::new(VarTable::family("x", VarRole::Space, d))
    }

    #[test]
    fn parses_oscillator_with_fields() {
        use gradedcalc::action::representation;
        use gradedcalc::lie::heisenberg;
        use gradedcalc::opalg::fundamental_vf;
        use gradedcalc::poly::ratio;
        let rep = representation(&heisenberg(1)).unwrap();
        let fields: Vec<PolyDiffOp> = (0..3)
            .map(|j| fundamental_vf(&rep, j, &ratio(1, 1)).unwrap())
            .collect();
        let sp = space(3);
        let ctx = ExprContext::Operator {
            space: &sp,
            xhat: Some(&fields),
        };
        let v = parse_expr("-Xhat(1)^2 - Xhat(2)^2 + x(3)^2", &ctx, 1).unwrap();
        let ExprValue::Op(op) = v else { panic!() };
        let expected = fields[0]
            .pow(2)
            .neg()
            .sub(&fields[1].pow(2))
            .add(
                &PolyDiffOp::multiplication(&Polynomial::var(&sp, "x3").unwrap())
                    .pow(2),
            );
        assert_eq!(op, expected);
    }

    #[test]
    fn rational_coefficients_and_i() {
        let sp = space(1);
        let ctx = ExprContext::Operator {
            space: &sp,
            xhat: None,
        };
        let ExprValue::Op(op) = parse_expr("1/2 * i * d(1)", &ctx, 1).unwrap() else {
            panic!()
        };
        let expected = PolyDiffOp::partial(&sp, 0)
            .scale(&(Gaussian::i() * Gaussian::from_ratio(1, 2)));
        assert_eq!(op, expected);
    }

    #[test]
    fn dangling_caret_errors_with_position() {
        let sp = space(1);
        let ctx = ExprContext::Operator {
            space: &sp,
            xhat: None,
        };
        let err = parse_expr("x(1)^", &ctx, 3).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("dangling"), "{err}");
    }

    #[test]
    fn polynomial_context_with_bare_names() {
        use gradedcalc::poly::{Var, VarRole};
        let table = VarTable::concat(&[
            VarTable::family("x", VarRole::Space, 2),
            vec![Var {
                name: "v1".into(),
                role: VarRole::Group,
            }],
        ]);
        let ctx = ExprContext::Polynomial { table: &table };
        let ExprValue::Poly(p) = parse_expr("x1 + v1*x2 - 1/2", &ctx, 1).unwrap() else {
            panic!()
        };
        let x1 = Polynomial::var(&table, "x1").unwrap();
        let x2 = Polynomial::var(&table, "x2").unwrap();
        let v1 = Polynomial::var(&table, "v1").unwrap();
        let expected = x1
            .add(&v1.mul(&x2))
            .sub(&Polynomial::constant(&table, Gaussian::from_ratio(1, 2)));
        assert_eq!(p, expected);
    }

    #[test]
    fn symbol_atoms() {
        use gradedcalc::symbolrn::symbol_table;
        let table = symbol_table(1, 1);
        let ctx = ExprContext::Polynomial { table: &table };
        let ExprValue::Poly(p) = parse_expr("xi(1)^2 + x(1)^2", &ctx, 1).unwrap() else {
            panic!()
        };
        let x = Polynomial::var(&table, "x1").unwrap();
        let xi = Polynomial::var(&table, "xi1").unwrap();
        assert_eq!(p, xi.pow(2).add(&x.pow(2)));
    }
}
