//! Entry grammar for series and coefficient functions:
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := coeff ["*" monomial] ["*" xpow]
//!        | monomial ["*" xpow]
//! coeff := real | "(" real ("+" | "-") real "i" ")"
//! monomial := "(t-a)^" real
//! xpow  := "x^" int
//! ```
//!
//! The printer emits a normalized form (terms sorted by exponent then
//! x-power, like terms merged, `+` separators with signed coefficients)
//! that is a fixed point of print -> parse -> print.

use num_complex::Complex64;
use std::fmt;

use crate::error::{FracError, Result};
use crate::lagrangian::{CoefficientFunction, MAX_X_DEGREE};
use crate::series::{FracSeries, EXP_MERGE_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExprTerm {
    pub coeff: Complex64,
    pub exponent: f64,
    pub xpow: u32,
}

/// Normalized sum of terms `coeff * (t-a)^exponent * x^xpow`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionAst {
    terms: Vec<ExprTerm>,
}

#[derive(Debug, Clone)]
pub struct ParseError {
    /// 1-based column of the offending character.
    pub column: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at column {}: expected {}", self.column, self.expected)
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for FracError {
    fn from(e: ParseError) -> Self {
        FracError::Invalid(e.to_string())
    }
}

impl ExpressionAst {
    pub fn new(terms: Vec<ExprTerm>) -> Result<Self> {
        for t in &terms {
            if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() || !t.exponent.is_finite() {
                return Err(FracError::Invalid("non-finite literal in expression".into()));
            }
            if t.exponent <= -1.0 {
                return Err(FracError::CarrierExit {
                    exponent: t.exponent,
                });
            }
            if t.xpow as usize > MAX_X_DEGREE {
                return Err(FracError::Invalid(format!(
                    "x power {} exceeds the supported cap {MAX_X_DEGREE}",
                    t.xpow
                )));
            }
        }
        Ok(ExpressionAst {
            terms: normalize(terms),
        })
    }

    pub fn terms(&self) -> &[ExprTerm] {
        &self.terms
    }

    /// True when no term carries a power of `x`.
    pub fn is_x_free(&self) -> bool {
        self.terms.iter().all(|t| t.xpow == 0)
    }

    /// Convert to a plain series; fails if any term depends on `x`.
    pub fn to_series(&self, base: f64) -> Result<FracSeries> {
        if !self.is_x_free() {
            return Err(FracError::Invalid(
                "expression depends on x where a plain series is required".into(),
            ));
        }
        FracSeries::new(base, self.terms.iter().map(|t| (t.exponent, t.coeff)))
    }

    /// Convert to a polynomial-in-x coefficient function.
    pub fn to_coefficient_function(&self, base: f64) -> Result<CoefficientFunction> {
        let degree = self.terms.iter().map(|t| t.xpow).max().unwrap_or(0) as usize;
        let mut buckets: Vec<Vec<(f64, Complex64)>> = vec![Vec::new(); degree + 1];
        for t in &self.terms {
            buckets[t.xpow as usize].push((t.exponent, t.coeff));
        }
        let coeffs: Result<Vec<FracSeries>> = buckets
            .into_iter()
            .map(|b| FracSeries::new(base, b))
            .collect();
        CoefficientFunction::new(coeffs?)
    }

    /// Canonical printed form; a fixed point of print -> parse -> print.
    pub fn print(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(print_term)
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

fn normalize(mut terms: Vec<ExprTerm>) -> Vec<ExprTerm> {
    terms.sort_by(|a, b| {
        a.exponent
            .partial_cmp(&b.exponent)
            .unwrap()
            .then(a.xpow.cmp(&b.xpow))
    });
    let mut merged: Vec<ExprTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match merged.last_mut() {
            Some(last)
                if (t.exponent - last.exponent).abs() <= EXP_MERGE_TOL
                    && t.xpow == last.xpow =>
            {
                last.coeff += t.coeff;
            }
            _ => merged.push(t),
        }
    }
    merged.retain(|t| t.coeff.norm() >= 1e-300);
    merged
}

fn print_term(t: &ExprTerm) -> String {
    let coeff = if t.coeff.im == 0.0 {
        format!("{}", t.coeff.re)
    } else if t.coeff.im >= 0.0 {
        format!("({}+{}i)", t.coeff.re, t.coeff.im)
    } else {
        format!("({}-{}i)", t.coeff.re, -t.coeff.im)
    };
    let mut out = coeff;
    if t.exponent != 0.0 {
        out.push_str(&format!("*(t-a)^{}", t.exponent));
    }
    if t.xpow > 0 {
        out.push_str(&format!("*x^{}", t.xpow));
    }
    out
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            column: self.pos + 1,
            expected: expected.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        if self.peek() == Some(byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_str(&mut self, s: &str) -> std::result::Result<(), ParseError> {
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            Ok(())
        } else {
            Err(self.error(&format!("'{s}'")))
        }
    }

    fn real(&mut self) -> std::result::Result<f64, ParseError> {
        let start = self.pos;
        self.eat(b'-');
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.error("a number"));
        }
        if self.eat(b'.') {
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark; // not an exponent suffix after all
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| ParseError {
            column: start + 1,
            expected: "a valid number".into(),
        })
    }

    fn integer(&mut self) -> std::result::Result<u32, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|_| ParseError {
                column: start + 1,
                expected: "a small integer".into(),
            })
    }

    /// coeff := real | "(" real ("+"|"-") real "i" ")"
    fn coeff(&mut self) -> std::result::Result<Complex64, ParseError> {
        if self.peek() == Some(b'(') && !self.src[self.pos..].starts_with(b"(t-a)") {
            self.pos += 1;
            self.skip_ws();
            let re = self.real()?;
            self.skip_ws();
            let sign = match self.peek() {
                Some(b'+') => 1.0,
                Some(b'-') => -1.0,
                _ => return Err(self.error("'+' or '-' in a complex literal")),
            };
            self.pos += 1;
            self.skip_ws();
            let im = self.real()?;
            self.expect_str("i")?;
            self.skip_ws();
            self.expect_str(")")?;
            Ok(Complex64::new(re, sign * im))
        } else {
            Ok(Complex64::new(self.real()?, 0.0))
        }
    }

    /// monomial := "(t-a)^" real
    fn monomial(&mut self) -> std::result::Result<f64, ParseError> {
        self.expect_str("(t-a)^")?;
        self.real()
    }

    /// xpow := "x^" int
    fn xpow(&mut self) -> std::result::Result<u32, ParseError> {
        self.expect_str("x^")?;
        self.integer()
    }

    fn term(&mut self) -> std::result::Result<ExprTerm, ParseError> {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut exponent = 0.0;
        let mut xpow = 0u32;

        if self.src[self.pos..].starts_with(b"(t-a)") {
            exponent = self.monomial()?;
        } else {
            coeff = self.coeff()?;
            self.skip_ws();
            let mark = self.pos;
            let explicit_star = self.eat(b'*');
            self.skip_ws();
            if self.src[self.pos..].starts_with(b"(t-a)") {
                exponent = self.monomial()?;
            } else if explicit_star {
                // "*" must be followed by a monomial or an x power
                if self.peek() == Some(b'x') {
                    xpow = self.xpow()?;
                    return Ok(ExprTerm {
                        coeff,
                        exponent,
                        xpow,
                    });
                }
                return Err(self.error("'(t-a)^' or 'x^' after '*'"));
            } else {
                self.pos = mark;
                return Ok(ExprTerm {
                    coeff,
                    exponent,
                    xpow,
                });
            }
        }
        self.skip_ws();
        let mark = self.pos;
        if self.eat(b'*') {
            self.skip_ws();
            if self.peek() == Some(b'x') {
                xpow = self.xpow()?;
            } else {
                self.pos = mark;
            }
        }
        Ok(ExprTerm {
            coeff,
            exponent,
            xpow,
        })
    }
}

/// Parse an expression in the entry grammar into a normalized AST.
pub fn parse_expression(text: &str) -> std::result::Result<ExpressionAst, ParseError> {
    let mut sc = Scanner::new(text);
    let mut terms = Vec::new();
    sc.skip_ws();
    if sc.peek().is_none() {
        return Err(sc.error("an expression"));
    }
    // "0" alone denotes the empty expression
    let mut negate = false;
    loop {
        let mut term = sc.term()?;
        if negate {
            term.coeff = -term.coeff;
        }
        terms.push(term);
        sc.skip_ws();
        match sc.peek() {
            None => break,
            Some(b'+') => {
                sc.pos += 1;
                negate = false;
            }
            Some(b'-') => {
                sc.pos += 1;
                negate = true;
            }
            _ => return Err(sc.error("'+', '-' or end of input")),
        }
        sc.skip_ws();
    }
    ExpressionAst::new(terms).map_err(|e| ParseError {
        column: 1,
        expected: format!("a carrier-admissible expression ({e})"),
    })
}
