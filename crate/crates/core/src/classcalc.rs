//! One-line expressions over the order calculus, e.g.
//! `fourier(conv(F[-1/2,0], F[0,-1]))` or `xd(F[-1/2], [2], [1])`.
//!
//! ```text
//! expr  := class | fourier(expr) | conv(expr, expr) | xd(expr, index, index)
//! class := (F | F0 | S) [ rational {, rational} ]
//! index := [ uint {, uint} ]          one entry per coordinate
//! ```
//!
//! Parse errors carry the 1-based character position.

use std::fmt;

use crate::calculus::{convolution_order, fourier_order, monomial_derivative_order, s_convolution_order, ClassTag, ComposabilityVerdict, KernelClass};
use crate::error::{Error, Result};
use crate::graded::{parse_rational, GradedLayout, MultiIndex, OrderVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Class { tag: ClassTag, order: OrderVector, pos: usize },
    Fourier(Box<Expr>, usize),
    Conv(Box<Expr>, Box<Expr>, usize),
    Xd { arg: Box<Expr>, alpha: Vec<u32>, beta: Vec<u32>, pos: usize },
}

impl Expr {
    fn pos(&self) -> usize {
        match self {
            Expr::Class { pos, .. } | Expr::Fourier(_, pos) | Expr::Conv(_, _, pos) | Expr::Xd { pos, .. } => *pos,
        }
    }
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    i: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.chars().enumerate().map(|(k, c)| (k + 1, c)).collect(),
            i: 0,
            src,
        }
    }

    fn pos(&self) -> usize {
        self.chars.get(self.i).map(|c| c.0).unwrap_or(self.chars.len() + 1)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.i).is_some_and(|c| c.1.is_whitespace()) {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.i).map(|c| c.1)
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.i += 1;
                Ok(())
            }
            Some(c) => self.fail(format!("expected `{want}`, found `{c}`")),
            None => self.fail(format!("expected `{want}`, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<(usize, String)> {
        self.skip_ws();
        let start = self.pos();
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.get(self.i) {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.i += 1;
            } else {
                break;
            }
        }
        if s.is_empty() {
            return self.fail(match self.chars.get(self.i) {
                Some(c) => format!("expected a class or operator, found `{}`", c.1),
                None => "expected a class or operator, found end of input".into(),
            });
        }
        Ok((start, s))
    }

    /// Comma-separated raw items between brackets.
    fn bracketed(&mut self) -> Result<Vec<(usize, String)>> {
        self.expect('[')?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos();
            let mut s = String::new();
            while let Some(&(_, c)) = self.chars.get(self.i) {
                if c == ',' || c == ']' {
                    break;
                }
                s.push(c);
                self.i += 1;
            }
            let s = s.trim().to_string();
            if s.is_empty() {
                return Err(Error::Parse { pos: start, msg: "empty entry".into() });
            }
            items.push((start, s));
            match self.peek() {
                Some(',') => self.i += 1,
                Some(']') => {
                    self.i += 1;
                    return Ok(items);
                }
                _ => return self.fail("unterminated `[`"),
            }
        }
    }

    fn index(&mut self) -> Result<Vec<u32>> {
        self.bracketed()?
            .into_iter()
            .map(|(pos, s)| s.parse().map_err(|_| Error::Parse { pos, msg: format!("`{s}` is not a nonnegative integer") }))
            .collect()
    }

    fn expr(&mut self) -> Result<Expr> {
        let (pos, name) = self.ident()?;
        match name.as_str() {
            "F" | "F0" | "S" => {
                let tag = match name.as_str() {
                    "F" => ClassTag::F,
                    "F0" => ClassTag::F0,
                    _ => ClassTag::S,
                };
                let order = self
                    .bracketed()?
                    .into_iter()
                    .map(|(p, s)| parse_rational(&s).map_err(|_| Error::Parse { pos: p, msg: format!("`{s}` is not a rational p/q") }))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Expr::Class { tag, order: OrderVector(order), pos })
            }
            "fourier" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Fourier(Box::new(a), pos))
            }
            "conv" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Conv(Box::new(a), Box::new(b), pos))
            }
            "xd" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let alpha = self.index()?;
                self.expect(',')?;
                let beta = self.index()?;
                self.expect(')')?;
                Ok(Expr::Xd { arg: Box::new(a), alpha, beta, pos })
            }
            _ => Err(Error::Parse {
                pos,
                msg: format!("unknown name `{name}` (expected F, F0, S, fourier, conv or xd)"),
            }),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.fail(format!("unexpected trailing input `{}`", &p.src.chars().skip(p.i).collect::<String>()));
    }
    Ok(e)
}

/// Result of an expression: a class, or the first failed gate on the way.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Class(KernelClass),
    GateFailure { pos: usize, left: KernelClass, right: KernelClass, verdict: ComposabilityVerdict },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Class(c) => write!(f, "{c}"),
            Outcome::GateFailure { pos, left, right, verdict } => {
                let layers: Vec<String> = verdict.failing_layers.iter().map(|k| k.to_string()).collect();
                write!(f, "not composable: {left} * {right} (position {pos}) fails the gate on layer {}", layers.join(","))
            }
        }
    }
}

impl Outcome {
    pub fn is_class(&self) -> bool {
        matches!(self, Outcome::Class(_))
    }
}

fn at(pos: usize, e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        e => Error::Parse { pos, msg: e.to_string() },
    }
}

pub fn eval(e: &Expr, layout: &GradedLayout) -> Result<Outcome> {
    let class = |o: Outcome| -> std::result::Result<KernelClass, Outcome> {
        match o {
            Outcome::Class(c) => Ok(c),
            f => Err(f),
        }
    };
    Ok(match e {
        Expr::Class { tag, order, pos } => Outcome::Class(KernelClass::new(*tag, layout.clone(), order.clone()).map_err(|e| at(*pos, e))?),
        Expr::Fourier(a, pos) => match class(eval(a, layout)?) {
            Ok(c) => Outcome::Class(fourier_order(&c).map_err(|e| at(*pos, e))?),
            Err(f) => f,
        },
        Expr::Xd { arg, alpha, beta, pos } => match class(eval(arg, layout)?) {
            Ok(c) => {
                let al = MultiIndex(alpha.clone());
                let be = MultiIndex(beta.clone());
                Outcome::Class(monomial_derivative_order(&c, &al, &be).map_err(|e| at(*pos, e))?)
            }
            Err(f) => f,
        },
        Expr::Conv(a, b, pos) => {
            let l = match class(eval(a, layout)?) {
                Ok(c) => c,
                Err(f) => return Ok(f),
            };
            let r = match class(eval(b, layout)?) {
                Ok(c) => c,
                Err(f) => return Ok(f),
            };
            if l.tag == ClassTag::S && r.tag == ClassTag::S {
                Outcome::Class(s_convolution_order(&l, &r).map_err(|e| at(*pos, e))?)
            } else {
                let v = convolution_order(&l, &r).map_err(|e| at(b.pos(), e))?;
                match &v.result {
                    Some(c) if v.composable => Outcome::Class(c.clone()),
                    _ => Outcome::GateFailure { pos: *pos, left: l, right: r, verdict: v },
                }
            }
        }
    })
}

pub fn evaluate(src: &str, layout: &GradedLayout) -> Result<Outcome> {
    eval(&parse(src)?, layout)
}
