//! Plain-text term lists: `3 * x1^2 x3 - 0.5 * x2 + 4`.
//!
//! Coefficients are written with Rust's shortest round-trip float formatting,
//! so printing and re-parsing reproduces every coefficient bit for bit.

use std::fmt;
use std::str::FromStr;

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// Formats a float with the shortest representation that parses back exactly.
pub fn format_coeff(c: f64) -> String {
    let a = c.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{c:e}")
    } else {
        format!("{c}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let mag = format_coeff(c.abs());
            match (i, c.is_sign_negative()) {
                (0, true) => write!(f, "-{mag}")?,
                (0, false) => write!(f, "{mag}")?,
                (_, true) => write!(f, " - {mag}")?,
                (_, false) => write!(f, " + {mag}")?,
            }
            if !m.is_one() {
                write!(f, " * {m}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    /// Parses a term list, taking the variable count from the largest index.
    fn from_str(s: &str) -> Result<Self> {
        let terms = parse_terms(s)?;
        let nvars = terms
            .iter()
            .flat_map(|(_, vars)| vars.iter().map(|&(i, _)| i + 1))
            .max()
            .unwrap_or(1);
        build(nvars, terms)
    }
}

/// Parses a term list in exactly `nvars` variables.
pub fn parse_polynomial(s: &str, nvars: usize) -> Result<Polynomial> {
    let terms = parse_terms(s)?;
    if let Some(i) = terms
        .iter()
        .flat_map(|(_, vars)| vars.iter().map(|&(i, _)| i))
        .find(|&i| i >= nvars)
    {
        return Err(Error::Parse(format!(
            "variable x{} out of range for {nvars} variables",
            i + 1
        )));
    }
    build(nvars, terms)
}

type RawTerm = (f64, Vec<(usize, u32)>);

fn build(nvars: usize, terms: Vec<RawTerm>) -> Result<Polynomial> {
    let terms = terms.into_iter().map(|(c, vars)| {
        let mut exps = vec![0u32; nvars];
        for (i, e) in vars {
            exps[i] += e;
        }
        (Monomial::new(exps), c)
    });
    Polynomial::try_from_terms(nvars, terms)
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {}", self.pos))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < s.len() && (s[p] == b'+' || s[p] == b'-') {
                p += 1;
            }
            if p < s.len() && s[p].is_ascii_digit() {
                while p < s.len() && s[p].is_ascii_digit() {
                    p += 1;
                }
                self.pos = p;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).map_err(|_| self.err("bad utf8"))?;
        text.parse::<f64>()
            .map_err(|_| self.err(&format!("invalid number '{text}'")))
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected integer"))
    }

    fn variable(&mut self) -> Result<(usize, u32)> {
        self.pos += 1; // 'x'
        let idx = self.integer()?;
        if idx == 0 {
            return Err(self.err("variables are numbered from x1"));
        }
        let exp = if self.peek() == Some(b'^') {
            self.pos += 1;
            self.integer()?
        } else {
            1
        };
        Ok((idx as usize - 1, exp))
    }
}

fn parse_terms(s: &str) -> Result<Vec<RawTerm>> {
    let mut lx = Lexer {
        src: s.as_bytes(),
        pos: 0,
    };
    let mut terms = Vec::new();
    let mut first = true;
    loop {
        let mut sign = 1.0;
        match lx.peek() {
            None if first => return Err(lx.err("empty polynomial")),
            None => break,
            Some(b'+') => lx.pos += 1,
            Some(b'-') => {
                sign = -1.0;
                lx.pos += 1;
            }
            Some(_) if first => {}
            Some(_) => return Err(lx.err("expected '+' or '-'")),
        }
        first = false;
        let mut coeff = sign;
        let mut vars = Vec::new();
        let mut seen_factor = false;
        loop {
            match lx.peek() {
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    coeff *= lx.number()?;
                    seen_factor = true;
                }
                Some(b'x') => {
                    vars.push(lx.variable()?);
                    seen_factor = true;
                }
                Some(b'*') if seen_factor => lx.pos += 1,
                _ => break,
            }
        }
        if !seen_factor {
            return Err(lx.err("expected a coefficient or variable"));
        }
        terms.push((coeff, vars));
    }
    Ok(terms)
}
