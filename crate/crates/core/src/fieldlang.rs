//! Expressions for scalar fields and radial profiles.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x1' | 'x2' | 'x3' | 'r' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | log | sqrt | abs
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-2^2 = -4` and `2^3^2 = 512`.

use std::fmt;

use crate::error::{BgkError, Result};
use crate::point::Point;
use crate::potential::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// One-based coordinate index.
    Var(usize),
    /// `|x|`.
    R,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(src: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) => Tok::Num(v),
                Err(_) => return Err(ParseError { line: l0, col: c0, message: format!("malformed number '{text}'") }),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(ParseError { line: l0, col: c0, message: format!("unexpected character '{c}'") }),
            }
        };
        col += i - start;
        out.push(Token { tok, line: l0, col: c0 });
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> ParseError {
        let t = self.peek();
        ParseError { line: t.line, col: t.col, message }
    }

    fn expect_rparen(&mut self) -> std::result::Result<(), ParseError> {
        if self.peek().tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected ')', found {}", describe(&self.peek().tok))))
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> std::result::Result<Expr, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if self.peek().tok != Tok::LParen {
                        return Err(self.error_here(format!("expected '(' after {name}")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "r" => Ok(Expr::R),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "x1" => Ok(Expr::Var(1)),
                    "x2" => Ok(Expr::Var(2)),
                    "x3" => Ok(Expr::Var(3)),
                    _ => Err(ParseError { line: t.line, col: t.col, message: format!("unknown identifier '{name}'") }),
                }
            }
            other => Err(ParseError {
                line: t.line,
                col: t.col,
                message: format!("expected a value, found {}", describe(&other)),
            }),
        }
    }
}

pub fn parse(src: &str) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return Err(p.error_here(format!("unexpected {}", describe(&p.peek().tok))));
    }
    Ok(e)
}

impl Expr {
    /// Largest coordinate index used, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(k) => *k,
            Expr::Num(_) | Expr::R => 0,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Bin(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Plain evaluation; non-finite results propagate. `x` must cover `max_var`.
    pub fn eval_raw(&self, x: &Point) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => x[*k - 1],
            Expr::R => x.norm(),
            Expr::Neg(a) => -a.eval_raw(x),
            Expr::Call(f, a) => f.apply(a.eval_raw(x)),
            Expr::Bin(op, a, b) => {
                let (u, v) = (a.eval_raw(x), b.eval_raw(x));
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => u / v,
                    BinOp::Pow => u.powf(v),
                }
            }
        }
    }

    /// Evaluation that reports a dimension shortfall or a non-finite value.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        if self.max_var() > x.dim() {
            return Err(BgkError::DimensionMismatch { expected: self.max_var(), found: x.dim() });
        }
        let v = self.eval_raw(x);
        if !v.is_finite() {
            return Err(BgkError::NonFiniteField { value: v, point: x.as_slice().to_vec() });
        }
        Ok(v)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized; parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::R => write!(f, "r"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(g, a) => write!(f, "{}({a})", g.name()),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
        }
    }
}

/// Parses `src` into a field on `dim`-dimensional points.
pub fn field(src: &str, dim: usize) -> std::result::Result<ScalarField, ParseError> {
    let e = parse(src)?;
    if e.max_var() > dim {
        return Err(ParseError { line: 1, col: 1, message: format!("x{} used in dimension {dim}", e.max_var()) });
    }
    Ok(ScalarField::new(src.to_string(), move |x: &Point| e.eval_raw(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        parse(s).unwrap().eval(&Point::from_slice(x)).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(
            parse("x1 + 2*x2").unwrap(),
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Var(1)),
                Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Num(2.0)), Box::new(Expr::Var(2))))
            )
        );
        assert_eq!(ev("3", &[0.0, 0.0]), 3.0);
        assert_eq!(ev("x1*x2", &[2.0, 3.0]), 6.0);
        assert_eq!(ev("2+3*4", &[0.0, 0.0]), 14.0);
        assert_eq!(ev("2^3^2", &[0.0, 0.0]), 512.0);
        assert_eq!(ev("-2^2", &[0.0, 0.0]), -4.0);
        let e = ev("exp(-1/(1-r^2))", &[0.3, 0.4]);
        assert_eq!(e, (-1.0f64 / (1.0 - 0.25)).exp());
    }

    #[test]
    fn error_positions() {
        let e = parse("x1 + ").unwrap_err();
        assert_eq!((e.line, e.col), (1, 6));
        let e = parse("x1 +\n  y").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(e.message.contains("unknown identifier"));
    }

    #[test]
    fn domain_errors_are_flagged() {
        let e = parse("log(x1)").unwrap();
        assert!(e.eval(&Point::from_slice(&[-1.0, 0.0])).is_err());
        assert!(parse("x3").unwrap().eval(&Point::from_slice(&[1.0, 2.0])).is_err());
    }
}
