//! Infix parser. Precedence from tightest: `^` (right associative, integer
//! exponents only), unary minus, `* /`, `+ -`.

use std::sync::Arc;

use super::{Chart, Expr, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| err(start, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => return Err(err(start, format!("unexpected character `{c}`"))),
            };
            out.push((t, start));
            i += c.len_utf8();
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = lhs.add(&self.product()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = lhs.sub(&self.product()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = lhs.mul(&self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = lhs.div(&self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != &Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        // the exponent may carry its own sign and may itself be a power
        let exp = self.unary()?;
        let n = exp
            .as_const()
            .ok_or_else(|| err(pos, "exponent must be a constant integer"))?;
        if n.fract() != 0.0 || n.abs() > i32::MAX as f64 {
            return Err(err(pos, format!("non-integer exponent {n}")));
        }
        Ok(base.powi(n as i32))
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::LParen => {
                let e = self.sum()?;
                self.expect_rparen(pos)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(i) = self.chart.index_of(&name) {
                    return Ok(Expr::var(i));
                }
                match name.as_str() {
                    "sin" | "cos" | "exp" => {
                        let open = self.pos();
                        if self.bump() != Tok::LParen {
                            return Err(err(open, format!("expected `(` after `{name}`")));
                        }
                        let arg = self.sum()?;
                        self.expect_rparen(open)?;
                        Ok(match name.as_str() {
                            "sin" => arg.sin(),
                            "cos" => arg.cos(),
                            _ => arg.exp(),
                        })
                    }
                    "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                    _ => Err(err(pos, format!("unknown identifier `{name}`"))),
                }
            }
            Tok::RParen => Err(err(pos, "unbalanced `)`")),
            Tok::End => Err(err(pos, "unexpected end of input")),
            Tok::Op(c) => Err(err(pos, format!("unexpected operator `{c}`"))),
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<()> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            Tok::End => Err(err(open, "unbalanced `(`")),
            _ => Err(err(self.pos(), "expected `)`")),
        }
    }
}

/// Parses `text` into a scalar field on `chart`.
pub fn parse_expr(text: &str, chart: &Arc<Chart>) -> Result<ScalarField> {
    let mut p = Parser { toks: lex(text)?, at: 0, chart };
    let e = p.sum()?;
    match p.peek() {
        Tok::End => ScalarField::new(chart.clone(), e),
        Tok::RParen => Err(err(p.pos(), "unbalanced `)`")),
        _ => Err(err(p.pos(), "unexpected trailing input")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, p: &[f64]) -> f64 {
        let c = Chart::torus(&["x", "y", "t"]);
        parse_expr(text, &c).unwrap().expr().eval(p).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-2^2", &[0.0; 3]), -4.0);
        assert_eq!(ev("2^-1", &[0.0; 3]), 0.5);
        assert_eq!(ev("2^3^2", &[0.0; 3]), 512.0);
        assert_eq!(ev("1 - 2 - 3", &[0.0; 3]), -4.0);
        assert_eq!(ev("8 / 4 / 2", &[0.0; 3]), 1.0);
        assert_eq!(ev("-x*y", &[2.0, 3.0, 0.0]), -6.0);
        assert_eq!(ev("2*-x", &[2.0, 3.0, 0.0]), -4.0);
        assert_eq!(ev("1.5e1 + .5", &[0.0; 3]), 15.5);
    }

    #[test]
    fn functions() {
        let v = ev("0.3*cos(t) + sin(x)^2 + exp(-y)", &[0.2, 1.0, 0.7]);
        let want = 0.3 * 0.7f64.cos() + 0.2f64.sin().powi(2) + (-1.0f64).exp();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn errors_report_positions() {
        let c = Chart::torus(&["x", "y", "t"]);
        let pos = |s: &str| match parse_expr(s, &c) {
            Err(Error::Parse { pos, .. }) => pos,
            other => panic!("expected parse error for {s}, got {other:?}"),
        };
        assert_eq!(pos("x + z"), 4);
        assert_eq!(pos("sin(x"), 3);
        assert_eq!(pos("x)"), 1);
        assert_eq!(pos("x^1.5"), 2);
        assert_eq!(pos("x^y"), 2);
        assert_eq!(pos("x $ y"), 2);
        assert_eq!(pos(""), 0);
    }
}
