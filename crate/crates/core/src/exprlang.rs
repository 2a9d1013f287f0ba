//! Scalar-field expression language.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! denotes `-(x1^2)` and `2^3^2` denotes `2^(3^2)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::jets::{Jet, JetEnv, JetError};

/// Deepest nesting accepted before the parser gives up.
pub const MAX_DEPTH: usize = 100;

/// Names reserved for the four coordinates.
pub const COORDINATES: [&str; 4] = ["x0", "x1", "x2", "x3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, x: &Jet) -> Result<Jet, JetError> {
        Ok(match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan()?,
            Func::Exp => x.exp(),
            Func::Ln => x.ln()?,
            Func::Sqrt => x.sqrt()?,
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        })
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parsed expression. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Num(a), ExprKind::Num(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Ident(a), ExprKind::Ident(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr {
            kind: ExprKind::Num(v),
            span: Span::default(),
        }
    }

    pub fn ident(name: &str) -> Expr {
        Expr {
            kind: ExprKind::Ident(name.to_string()),
            span: Span::default(),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        Expr {
            kind: ExprKind::Neg(Box::new(e)),
            span: Span::default(),
        }
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr {
            kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
            span: Span::default(),
        }
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr {
            kind: ExprKind::Call(f, Box::new(arg)),
            span: Span::default(),
        }
    }

    /// True when the literal value zero is the whole expression.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.kind, ExprKind::Num(v) if v == 0.0)
    }

    /// Identifiers in order of first appearance.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.kind {
            ExprKind::Num(_) => {}
            ExprKind::Ident(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            ExprKind::Neg(e) | ExprKind::Call(_, e) => e.collect_identifiers(out),
            ExprKind::Binary(_, l, r) => {
                l.collect_identifiers(out);
                r.collect_identifiers(out);
            }
        }
    }
}

/// Fully parenthesized rendering that reparses to an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Ident(name) => f.write_str(name),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, l, r) => write!(f, "({l}{}{r})", op.symbol()),
            ExprKind::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" or "))]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound identifier `{name}` at bytes {}..{}", .span.start, .span.end)]
    Unbound { name: String, span: Span },
    #[error("{source} in subexpression at bytes {}..{}", .span.start, .span.end)]
    Jet {
        #[source]
        source: JetError,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, Span), SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(c) = self.src[start..].chars().next() else {
            return Ok((Tok::End, Span { start, end: start }));
        };
        if c.is_ascii_digit() {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                if end >= bytes.len() || !bytes[end].is_ascii_digit() {
                    return Err(SyntaxError {
                        offset: end,
                        expected: vec!["digit".into()],
                        found: self.found_at(end),
                    });
                }
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp_end = end + 1;
                if exp_end < bytes.len() && (bytes[exp_end] == b'+' || bytes[exp_end] == b'-') {
                    exp_end += 1;
                }
                if exp_end >= bytes.len() || !bytes[exp_end].is_ascii_digit() {
                    return Err(SyntaxError {
                        offset: exp_end,
                        expected: vec!["exponent digits".into()],
                        found: self.found_at(exp_end),
                    });
                }
                while exp_end < bytes.len() && bytes[exp_end].is_ascii_digit() {
                    exp_end += 1;
                }
                end = exp_end;
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| SyntaxError {
                offset: start,
                expected: vec!["number".into()],
                found: text.to_string(),
            })?;
            if !value.is_finite() {
                return Err(SyntaxError {
                    offset: start,
                    expected: vec!["finite number".into()],
                    found: text.to_string(),
                });
            }
            self.pos = end;
            return Ok((Tok::Num(value), Span { start, end }));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((
                Tok::Ident(self.src[start..end].to_string()),
                Span { start, end },
            ));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((
                Tok::Op(c),
                Span {
                    start,
                    end: start + 1,
                },
            ));
        }
        Err(SyntaxError {
            offset: start,
            expected: vec![
                "number".into(),
                "identifier".into(),
                "`(`".into(),
                "`-`".into(),
            ],
            found: format!("`{c}`"),
        })
    }

    fn found_at(&self, offset: usize) -> String {
        match self.src[offset..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    span: Span,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, SyntaxError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, span) = lexer.next()?;
        Ok(Parser {
            lexer,
            tok,
            span,
            depth: 0,
        })
    }

    fn bump(&mut self) -> Result<(), SyntaxError> {
        let (tok, span) = self.lexer.next()?;
        self.tok = tok;
        self.span = span;
        Ok(())
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            offset: self.span.start,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(&self.tok),
        }
    }

    fn enter(&mut self) -> Result<(), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(SyntaxError {
                offset: self.span.start,
                expected: vec![format!("nesting depth at most {MAX_DEPTH}")],
                found: "deeper nesting".into(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = join(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = join(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.tok == Tok::Op('-') {
            self.enter()?;
            let start = self.span.start;
            self.bump()?;
            let inner = self.unary()?;
            self.depth -= 1;
            let end = inner.span.end;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span: Span { start, end },
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.enter()?;
            self.bump()?;
            let exponent = self.unary()?;
            self.depth -= 1;
            return Ok(join(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let span = self.span;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr {
                    kind: ExprKind::Num(v),
                    span,
                })
            }
            Tok::Ident(name) => {
                self.bump()?;
                if self.tok == Tok::Op('(') {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(SyntaxError {
                            offset: span.start,
                            expected: vec!["built-in function name".into()],
                            found: format!("unknown function `{name}`"),
                        });
                    };
                    self.bump()?;
                    let arg = self.expr()?;
                    let end = self.expect_close()?;
                    return Ok(Expr {
                        kind: ExprKind::Call(func, Box::new(arg)),
                        span: Span {
                            start: span.start,
                            end,
                        },
                    });
                }
                Ok(Expr {
                    kind: ExprKind::Ident(name),
                    span,
                })
            }
            Tok::Op('(') => {
                self.bump()?;
                let mut inner = self.expr()?;
                let end = self.expect_close()?;
                inner.span = Span {
                    start: span.start,
                    end,
                };
                Ok(inner)
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`"])),
        }
    }

    fn expect_close(&mut self) -> Result<usize, SyntaxError> {
        if self.tok != Tok::Op(')') {
            return Err(self.error(&["`)`"]));
        }
        let end = self.span.end;
        self.bump()?;
        Ok(end)
    }
}

fn join(op: BinOp, l: Expr, r: Expr) -> Expr {
    let span = Span {
        start: l.span.start,
        end: r.span.end,
    };
    Expr {
        kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
        span,
    }
}

/// Parses a complete expression.
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        let expected: &[&str] = if p.depth == 0 {
            &["operator", "end of input"]
        } else {
            &["`)`"]
        };
        return Err(p.error(expected));
    }
    Ok(e)
}

fn is_coordinate(name: &str) -> bool {
    COORDINATES.contains(&name)
}

/// Lists every identifier that is neither a coordinate nor a parameter.
pub fn validate_bindings<'a, I>(e: &Expr, params: I) -> Result<(), Vec<String>>
where
    I: IntoIterator<Item = &'a str>,
{
    let params: Vec<&str> = params.into_iter().collect();
    let unbound: Vec<String> = e
        .identifiers()
        .into_iter()
        .filter(|name| !is_coordinate(name) && !params.contains(name))
        .map(str::to_string)
        .collect();
    if unbound.is_empty() {
        Ok(())
    } else {
        Err(unbound)
    }
}

/// Evaluates `e` as a jet at the environment's base point.
pub fn eval_expr(e: &Expr, env: &JetEnv, params: &BTreeMap<String, f64>) -> Result<Jet, EvalError> {
    let wrap = |source: JetError| EvalError::Jet {
        source,
        span: e.span,
    };
    match &e.kind {
        ExprKind::Num(v) => Ok(env.constant(*v)),
        ExprKind::Ident(name) => {
            if let Some(k) = COORDINATES.iter().position(|c| c == name) {
                Ok(env.coords[k])
            } else if let Some(v) = params.get(name) {
                Ok(env.constant(*v))
            } else {
                Err(EvalError::Unbound {
                    name: name.clone(),
                    span: e.span,
                })
            }
        }
        ExprKind::Neg(inner) => Ok(-eval_expr(inner, env, params)?),
        ExprKind::Binary(op, l, r) => {
            let a = eval_expr(l, env, params)?;
            let b = eval_expr(r, env, params)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => a.checked_div(&b).map_err(wrap),
                BinOp::Pow => a.pow(&b).map_err(wrap),
            }
        }
        ExprKind::Call(func, arg) => {
            let x = eval_expr(arg, env, params)?;
            func.apply(&x).map_err(wrap)
        }
    }
}

/// Plain floating-point evaluation, used as a reference for order-0 jets.
pub fn eval_f64(e: &Expr, point: [f64; 4], params: &BTreeMap<String, f64>) -> Option<f64> {
    Some(match &e.kind {
        ExprKind::Num(v) => *v,
        ExprKind::Ident(name) => match COORDINATES.iter().position(|c| c == name) {
            Some(k) => point[k],
            None => *params.get(name)?,
        },
        ExprKind::Neg(inner) => -eval_f64(inner, point, params)?,
        ExprKind::Binary(op, l, r) => {
            let a = eval_f64(l, point, params)?;
            let b = eval_f64(r, point, params)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => {
                    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                        a.powi(b as i32)
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        ExprKind::Call(func, arg) => {
            let x = eval_f64(arg, point, params)?;
            match func {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Tanh => x.tanh(),
            }
        }
    })
}
