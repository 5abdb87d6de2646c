//! The carrier algebra: finite fractional power series in `(t-a)` with
//! complex coefficients, and the formal fractional operators on it.
//!
//! A [`FracSeries`] is a finite sum of terms `c_k (t-a)^{p_k}` with
//! strictly increasing real exponents `p_k > -1`. All operators map the
//! carrier into itself or reject with [`FracError::CarrierExit`]; none of
//! them silently extend the exponent range.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::special;

/// Tolerance on exponent equality when merging terms. Exponents arise as
/// `mu + k alpha`; distinct pairs can collide numerically only for
/// rational alpha, where merging is the correct semantics.
pub const EXP_MERGE_TOL: f64 = 1e-12;

/// Coefficients below this magnitude are pruned on construction.
pub const COEFF_PRUNE: f64 = 1e-300;

/// A closed interval `[a, b]`, the limits of the fractional operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a >= b {
            return Err(FracError::Invalid(format!(
                "interval requires finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Interval { a, b })
    }

    pub fn span(&self) -> f64 {
        self.b - self.a
    }
}

/// One term `coeff * (t-a)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub exponent: f64,
    pub coeff: Complex64,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    p: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    a: f64,
    terms: Vec<TermJson>,
}

/// Finite fractional power series in `(t-a)`; the carrier of all formal
/// operators. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson", into = "SeriesJson")]
pub struct FracSeries {
    base: f64,
    terms: Vec<Term>,
}

impl From<FracSeries> for SeriesJson {
    fn from(s: FracSeries) -> Self {
        SeriesJson {
            a: s.base,
            terms: s
                .terms
                .iter()
                .map(|t| TermJson {
                    p: t.exponent,
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<SeriesJson> for FracSeries {
    type Error = FracError;

    fn try_from(j: SeriesJson) -> Result<Self> {
        FracSeries::new(
            j.a,
            j.terms
                .into_iter()
                .map(|t| (t.p, Complex64::new(t.re, t.im))),
        )
    }
}

impl FracSeries {
    /// Build a series from raw `(exponent, coeff)` pairs: validates the
    /// carrier constraints, sorts, merges exponents within
    /// [`EXP_MERGE_TOL`], and prunes negligible coefficients.
    pub fn new(base: f64, terms: impl IntoIterator<Item = (f64, Complex64)>) -> Result<Self> {
        if !base.is_finite() {
            return Err(FracError::Invalid(format!("non-finite base point {base}")));
        }
        let mut raw: Vec<Term> = Vec::new();
        for (p, c) in terms {
            if !p.is_finite() {
                return Err(FracError::Invalid(format!("non-finite exponent {p}")));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(FracError::Invalid(format!(
                    "non-finite coefficient {c} at exponent {p}"
                )));
            }
            if p <= -1.0 {
                return Err(FracError::CarrierExit { exponent: p });
            }
            raw.push(Term {
                exponent: p,
                coeff: c,
            });
        }
        raw.sort_by(|a, b| a.exponent.partial_cmp(&b.exponent).unwrap());

        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match merged.last_mut() {
                Some(last) if (t.exponent - last.exponent).abs() <= EXP_MERGE_TOL => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff.norm() >= COEFF_PRUNE);
        Ok(FracSeries {
            base,
            terms: merged,
        })
    }

    /// The empty (identically zero) series at `base`.
    pub fn zero(base: f64) -> Self {
        FracSeries {
            base,
            terms: Vec::new(),
        }
    }

    /// Single term `c (t-a)^p`.
    pub fn monomial(base: f64, p: f64, c: Complex64) -> Result<Self> {
        Self::new(base, [(p, c)])
    }

    /// Constant series `c (t-a)^0`.
    pub fn constant(base: f64, c: Complex64) -> Self {
        Self::new(base, [(0.0, c)]).expect("constant is always in the carrier")
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn min_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.exponent)
    }

    pub fn max_exponent(&self) -> Option<f64> {
        self.terms.last().map(|t| t.exponent)
    }

    /// Coefficient of the term whose exponent lies within
    /// [`EXP_MERGE_TOL`] of `p`; zero when absent.
    pub fn coeff_at(&self, p: f64) -> Complex64 {
        self.terms
            .iter()
            .find(|t| (t.exponent - p).abs() <= EXP_MERGE_TOL)
            .map(|t| t.coeff)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `max_k |c_k| span^{p_k}`; the term norm used by the Neumann
    /// divergence guard and the truncation diagnostics.
    pub fn weighted_sup_norm(&self, span: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm() * span.powf(t.exponent))
            .fold(0.0, f64::max)
    }

    fn check_base(&self, other: &FracSeries) -> Result<()> {
        if (self.base - other.base).abs() > EXP_MERGE_TOL {
            return Err(FracError::BaseMismatch(self.base, other.base));
        }
        Ok(())
    }

    /// Term-wise sum; commutative and associative up to round-off.
    pub fn add(&self, other: &FracSeries) -> Result<FracSeries> {
        self.check_base(other)?;
        FracSeries::new(
            self.base,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|t| (t.exponent, t.coeff)),
        )
    }

    pub fn sub(&self, other: &FracSeries) -> Result<FracSeries> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> FracSeries {
        FracSeries::new(
            self.base,
            self.terms.iter().map(|t| (t.exponent, t.coeff * c)),
        )
        .expect("scaling cannot leave the carrier")
    }

    /// Multiply by the monomial `d (t-a)^q`.
    pub fn mul_monomial(&self, q: f64, d: Complex64) -> Result<FracSeries> {
        for t in &self.terms {
            let p = t.exponent + q;
            if p <= -1.0 && (t.coeff * d).norm() >= COEFF_PRUNE {
                return Err(FracError::CarrierExit { exponent: p });
            }
        }
        FracSeries::new(
            self.base,
            self.terms.iter().map(|t| (t.exponent + q, t.coeff * d)),
        )
    }

    fn derivative_map(&self, alpha: f64, kill_constant: bool) -> Result<FracSeries> {
        check_alpha(alpha)?;
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if kill_constant && t.exponent.abs() <= EXP_MERGE_TOL {
                continue;
            }
            let ratio = special::gamma_ratio(t.exponent + 1.0, t.exponent + 1.0 - alpha)?;
            if ratio == 0.0 {
                // pole-kill: finite numerator over a gamma pole
                continue;
            }
            let p = t.exponent - alpha;
            if p <= -1.0 {
                return Err(FracError::CarrierExit { exponent: p });
            }
            out.push((p, t.coeff * ratio));
        }
        FracSeries::new(self.base, out)
    }

    /// Left Riemann-Liouville derivative of order `alpha`, by the power
    /// rule `(t-a)^p -> Gamma(p+1)/Gamma(p+1-alpha) (t-a)^{p-alpha}`.
    /// Terms whose image coefficient lands on a gamma pole vanish.
    pub fn left_rl_derivative(&self, alpha: f64) -> Result<FracSeries> {
        self.derivative_map(alpha, false)
    }

    /// Left Caputo derivative: the RL power rule with constants (exponent
    /// zero) additionally mapped to zero.
    pub fn left_caputo_derivative(&self, alpha: f64) -> Result<FracSeries> {
        self.derivative_map(alpha, true)
    }

    /// The formal right Riemann-Liouville derivative: the analytic
    /// continuation rule `e^{i pi alpha}` times the left RL power rule.
    /// This is deliberately NOT the integral definition of the right
    /// derivative; the latter does not map the carrier into itself.
    pub fn right_rl_derivative_formal(&self, alpha: f64) -> Result<FracSeries> {
        Ok(self
            .left_rl_derivative(alpha)?
            .scale(special::phase_factor(alpha, 1)))
    }

    /// Fractional integral of order `alpha`:
    /// `(t-a)^p -> Gamma(p+1)/Gamma(p+1+alpha) (t-a)^{p+alpha}`.
    /// Never hits a pole and never exits the carrier.
    pub fn fractional_integral(&self, alpha: f64) -> Result<FracSeries> {
        check_alpha(alpha)?;
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let ratio = special::gamma_ratio(t.exponent + 1.0, t.exponent + 1.0 + alpha)?;
            out.push((t.exponent + alpha, t.coeff * ratio));
        }
        FracSeries::new(self.base, out)
    }

    /// Evaluate the series at `t`.
    ///
    /// Requires `t > a` in general; `t = a` is admitted when every
    /// exponent is nonnegative (each positive power contributes zero).
    pub fn evaluate(&self, t: f64) -> Result<Complex64> {
        let dt = t - self.base;
        if dt < 0.0 {
            return Err(FracError::Domain(format!(
                "evaluation point {t} below base point {}",
                self.base
            )));
        }
        if dt == 0.0 {
            if let Some(p) = self.min_exponent() {
                if p < 0.0 {
                    return Err(FracError::Domain(format!(
                        "evaluation at the base point with negative exponent {p}"
                    )));
                }
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for term in &self.terms {
                if term.exponent.abs() <= EXP_MERGE_TOL {
                    acc += term.coeff;
                }
            }
            return Ok(acc);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for term in &self.terms {
            acc += term.coeff * dt.powf(term.exponent);
        }
        Ok(acc)
    }

    /// Real part as a real-coefficient series.
    pub fn real_part(&self) -> FracSeries {
        FracSeries::new(
            self.base,
            self.terms
                .iter()
                .map(|t| (t.exponent, Complex64::new(t.coeff.re, 0.0))),
        )
        .expect("projection stays in the carrier")
    }

    /// Imaginary part as a real-coefficient series.
    pub fn imag_part(&self) -> FracSeries {
        FracSeries::new(
            self.base,
            self.terms
                .iter()
                .map(|t| (t.exponent, Complex64::new(t.coeff.im, 0.0))),
        )
        .expect("projection stays in the carrier")
    }

    /// Largest coefficient imaginary component, for reality checks.
    pub fn max_imag(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.im.abs())
            .fold(0.0, f64::max)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FracError::Domain(format!(
            "derivative order must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}
