//! Closed-form expression language for potentials and time profiles.
//!
//! Supports polynomials and `sin`/`cos`/`exp`/`sqrt`/`ln` of the time variable
//! `t` and chart coordinates `x1..x9`, with exact symbolic differentiation.
//! Every configurable scalar in the library goes through this module, so
//! analytic gradients and Hessians are available wherever curvature formulas
//! need them instead of falling back to finite differences.

use crate::error::CoreError;

/// Expression tree. Variable index 0 is `t`; index `i >= 1` is coordinate `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Power with a constant (possibly fractional) exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
    Ln(Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(0) => t,
            Expr::Var(i) => x[i - 1],
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Pow(a, p) => {
                let base = a.eval(t, x);
                if *p == p.trunc() && p.abs() < 64.0 {
                    base.powi(*p as i32)
                } else {
                    base.powf(*p)
                }
            }
            Expr::Sin(a) => a.eval(t, x).sin(),
            Expr::Cos(a) => a.eval(t, x).cos(),
            Expr::Exp(a) => a.eval(t, x).exp(),
            Expr::Sqrt(a) => a.eval(t, x).sqrt(),
            Expr::Ln(a) => a.eval(t, x).ln(),
        }
    }

    /// Exact derivative with respect to variable `v` (0 = t, i >= 1 = x_i).
    pub fn diff(&self, v: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == v { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2
                let da = div(a.diff(v), (**b).clone());
                let db = div(
                    mul((**a).clone(), b.diff(v)),
                    pow((**b).clone(), 2.0),
                );
                sub(da, db)
            }
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Pow(a, p) => mul(
                mul(Expr::Num(*p), pow((**a).clone(), p - 1.0)),
                a.diff(v),
            ),
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.diff(v)),
            Expr::Cos(a) => neg(mul(Expr::Sin(a.clone()), a.diff(v))),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.diff(v)),
            Expr::Sqrt(a) => div(
                a.diff(v),
                mul(Expr::Num(2.0), Expr::Sqrt(a.clone())),
            ),
            Expr::Ln(a) => div(a.diff(v), (**a).clone()),
        }
    }

    /// Largest coordinate index referenced (0 if the expression is time-only).
    pub fn max_coord(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => *i,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_coord().max(b.max_coord())
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Sqrt(a)
            | Expr::Ln(a) => a.max_coord(),
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(i) => *i == 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_time() || b.uses_time()
            }
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Exp(a)
            | Expr::Sqrt(a)
            | Expr::Ln(a) => a.uses_time(),
        }
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(c) if *c == v)
}

fn fold2(a: &Expr, b: &Expr) -> Option<(f64, f64)> {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Some((*x, *y)),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if let Some((x, y)) = fold2(&a, &b) {
        return Expr::Num(x + y);
    }
    if is_const(&a, 0.0) {
        return b;
    }
    if is_const(&b, 0.0) {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if let Some((x, y)) = fold2(&a, &b) {
        return Expr::Num(x - y);
    }
    if is_const(&b, 0.0) {
        return a;
    }
    if is_const(&a, 0.0) {
        return neg(b);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if let Some((x, y)) = fold2(&a, &b) {
        return Expr::Num(x * y);
    }
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return Expr::Num(0.0);
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_const(&a, 0.0) {
        return Expr::Num(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    if let Expr::Num(x) = a {
        return Expr::Num(-x);
    }
    Expr::Neg(Box::new(a))
}

fn pow(a: Expr, p: f64) -> Expr {
    if p == 0.0 {
        return Expr::Num(1.0);
    }
    if p == 1.0 {
        return a;
    }
    if let Expr::Num(x) = a {
        return Expr::Num(x.powf(p));
    }
    Expr::Pow(Box::new(a), p)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, CoreError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && {
                            let n = bytes[i + 1] as char;
                            n.is_ascii_digit() || n == '+' || n == '-'
                        }
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| CoreError::Expr(format!("bad number literal '{text}'")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => return Err(CoreError::Expr(format!("unexpected character '{c}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), CoreError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(CoreError::Expr(format!(
                "expected {tok:?}, found {other:?}"
            ))),
        }
    }

    fn parse_expr(&mut self, min_prec: u8) -> Result<Expr, CoreError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let (prec, right_assoc) = match self.peek() {
                Some(Tok::Plus) | Some(Tok::Minus) => (1u8, false),
                Some(Tok::Star) | Some(Tok::Slash) => (2, false),
                Some(Tok::Caret) => (4, true),
                _ => break,
            };
            if prec < min_prec {
                break;
            }
            let op = self.next().unwrap();
            let next_min = if right_assoc { prec } else { prec + 1 };
            let rhs = self.parse_expr(next_min)?;
            lhs = match op {
                Tok::Plus => add(lhs, rhs),
                Tok::Minus => sub(lhs, rhs),
                Tok::Star => mul(lhs, rhs),
                Tok::Slash => div(lhs, rhs),
                Tok::Caret => match rhs {
                    Expr::Num(p) => pow(lhs, p),
                    _ => {
                        return Err(CoreError::Expr(
                            "exponent must be a numeric constant".into(),
                        ))
                    }
                },
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, CoreError> {
        match self.next() {
            // Unary minus binds looser than `^`, so -x1^2 is -(x1^2) and
            // t^-0.5 keeps the sign inside the exponent.
            Some(Tok::Minus) => Ok(neg(self.parse_expr(3)?)),
            Some(Tok::Plus) => self.parse_expr(3),
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.parse_expr(1)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => self.parse_ident(name),
            other => Err(CoreError::Expr(format!(
                "expected a term, found {other:?}"
            ))),
        }
    }

    fn parse_ident(&mut self, name: String) -> Result<Expr, CoreError> {
        match name.as_str() {
            "t" => return Ok(Expr::Var(0)),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(k) = rest.parse::<usize>() {
                if (1..=9).contains(&k) {
                    return Ok(Expr::Var(k));
                }
            }
        }
        let func: fn(Box<Expr>) -> Expr = match name.as_str() {
            "sin" => Expr::Sin,
            "cos" => Expr::Cos,
            "exp" => Expr::Exp,
            "sqrt" => Expr::Sqrt,
            "ln" => Expr::Ln,
            _ => {
                return Err(CoreError::Expr(format!(
                    "unknown identifier '{name}' (expected t, x1..x9, pi, sin, cos, exp, sqrt, ln)"
                )))
            }
        };
        self.expect(Tok::LParen)?;
        let arg = self.parse_expr(1)?;
        self.expect(Tok::RParen)?;
        Ok(func(Box::new(arg)))
    }
}

/// Parse an expression in `t` and `x1..x9`.
pub fn parse(src: &str) -> Result<Expr, CoreError> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(CoreError::Expr("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.parse_expr(1)?;
    if p.pos != p.toks.len() {
        return Err(CoreError::Expr(format!(
            "trailing tokens starting at {:?}",
            p.toks[p.pos]
        )));
    }
    Ok(e)
}
