//! Independent numerical evaluation of the left-sided fractional
//! operators: Grünwald-Letnikov for the Riemann-Liouville derivative and
//! the L1 product quadrature for the Caputo derivative.
//!
//! These exist to validate the formal algebra, never as primary solvers.
//! Both are restricted to integrands that are bounded near the base
//! point (series exponents strictly positive); the singular head terms
//! of the solutions are validated through the exact pole/inverse
//! identities instead.
//!
//! The step is snapped to `(t-a)/N` with `N = round((t-a)/h)` so the
//! grid ends exactly on the base point; misaligned grids would cost a
//! full order of accuracy for the L1 scheme.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::series::FracSeries;
use crate::special;

/// Default uniform grid spacing for oracle runs.
pub const DEFAULT_H: f64 = 1.0 / 4096.0; // 2^-12

/// Default relative tolerance for oracle checks.
pub const DEFAULT_TOL: f64 = 1e-2;

/// Minimum number of grid points per evaluation.
const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "GL")]
    Gl,
    #[serde(rename = "L1")]
    L1,
}

/// Grid configuration for an oracle run.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub h: f64,
    pub scheme: Scheme,
}

impl OracleConfig {
    pub fn new(h: f64, scheme: Scheme, span: f64) -> Result<Self> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(h > 0.0) || !h.is_finite() {
            return Err(FracError::Invalid(format!("oracle step must be > 0, got {h}")));
        }
        if span / h < MIN_POINTS as f64 {
            return Err(FracError::Invalid(format!(
                "oracle grid needs at least {MIN_POINTS} points: span {span}, step {h}"
            )));
        }
        Ok(OracleConfig { h, scheme })
    }
}

/// Grünwald-Letnikov weights `w_0 = 1`, `w_k = w_{k-1} (1 - (alpha+1)/k)`.
pub fn gl_weights(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for k in 1..=n {
        let prev = w[k - 1];
        w.push(prev * (1.0 - (alpha + 1.0) / k as f64));
    }
    w
}

/// Deterministic chunked sum: chunk results are collected in index order
/// before the final reduction, so the parallel path gives the same bytes
/// on every run regardless of thread scheduling.
#[cfg(feature = "parallel")]
fn chunked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, term: F) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 2048;
    if n <= CHUNK {
        return (0..n).map(term).sum();
    }
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            (lo..hi).map(&term).sum()
        })
        .collect();
    partials.iter().sum()
}

#[cfg(not(feature = "parallel"))]
fn chunked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, term: F) -> f64 {
    sequential_sum(n, term)
}

/// Plain sequential summation; the baseline the benches compare against.
pub fn sequential_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    (0..n).map(term).sum()
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // the negations also reject NaN
fn aligned_grid(from: f64, to: f64, h: f64) -> Result<(usize, f64)> {
    let span = to - from;
    if !(span > 0.0) {
        return Err(FracError::Domain(format!(
            "evaluation point must lie strictly right of the base point (span {span})"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(FracError::Invalid(format!("oracle step must be > 0, got {h}")));
    }
    let n = ((span / h).round() as usize).max(MIN_POINTS);
    Ok((n, span / n as f64))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FracError::Domain(format!(
            "oracle order must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Grünwald-Letnikov approximation of the left RL derivative at `t`:
/// `h^{-alpha} sum_k w_k f(t - k h)`. First order in `h` for smooth `f`.
pub fn gl_left_rl<F: Fn(f64) -> f64 + Sync>(
    f: F,
    a: f64,
    t: f64,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (n, h) = aligned_grid(a, t, h)?;
    let w = gl_weights(alpha, n);
    let s = chunked_sum(n + 1, |k| w[k] * f(t - k as f64 * h));
    Ok(h.powf(-alpha) * s)
}

/// Sequential-only variant of [`gl_left_rl`], for benchmarking the
/// parallel path against its fallback.
pub fn gl_left_rl_seq<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    t: f64,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (n, h) = aligned_grid(a, t, h)?;
    let w = gl_weights(alpha, n);
    let s = sequential_sum(n + 1, |k| w[k] * f(t - k as f64 * h));
    Ok(h.powf(-alpha) * s)
}

/// Mirror-image GL sum approximating the right RL derivative at `t` on
/// `[t, b]`. Used only for the reflection bookkeeping identity; it is not
/// comparable to the formal continuation rule.
pub fn gl_right_rl<F: Fn(f64) -> f64 + Sync>(
    f: F,
    t: f64,
    b: f64,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (n, h) = aligned_grid(t, b, h)?;
    let w = gl_weights(alpha, n);
    let s = chunked_sum(n + 1, |k| w[k] * f(t + k as f64 * h));
    Ok(h.powf(-alpha) * s)
}

/// L1 product quadrature for the left Caputo derivative:
/// `(h^{-alpha}/Gamma(2-alpha)) sum_k b_k (f(t-kh) - f(t-(k+1)h))` with
/// `b_k = (k+1)^{1-alpha} - k^{1-alpha}`. Accuracy O(h^{2-alpha}) for
/// continuously differentiable `f`.
pub fn l1_left_caputo<F: Fn(f64) -> f64 + Sync>(
    f: F,
    a: f64,
    t: f64,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (n, h) = aligned_grid(a, t, h)?;
    let e = 1.0 - alpha;
    let s = chunked_sum(n, |k| {
        let b = ((k + 1) as f64).powf(e) - (k as f64).powf(e);
        b * (f(t - k as f64 * h) - f(t - (k + 1) as f64 * h))
    });
    Ok(h.powf(-alpha) / special::gamma(2.0 - alpha)? * s)
}

/// Sequential-only variant of [`l1_left_caputo`].
pub fn l1_left_caputo_seq<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    t: f64,
    alpha: f64,
    h: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let (n, h) = aligned_grid(a, t, h)?;
    let e = 1.0 - alpha;
    let s = sequential_sum(n, |k| {
        let b = ((k + 1) as f64).powf(e) - (k as f64).powf(e);
        b * (f(t - k as f64 * h) - f(t - (k + 1) as f64 * h))
    });
    Ok(h.powf(-alpha) / special::gamma(2.0 - alpha)? * s)
}

/// Per-point comparison of a formal operator image against the matching
/// numeric oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub scheme: Scheme,
    pub alpha: f64,
    pub points: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub pass: bool,
}

/// Compare the formal derivative of `s` against the numeric oracle at the
/// given points.
///
/// `Scheme::Gl` checks the left RL derivative against Grünwald-Letnikov;
/// `Scheme::L1` checks the left Caputo derivative against the L1
/// quadrature. All exponents of `s` must be strictly positive and the
/// series must be real.
pub fn oracle_check_series(
    s: &FracSeries,
    alpha: f64,
    points: &[f64],
    scheme: Scheme,
    h: f64,
    tol: f64,
) -> Result<CheckReport> {
    if let Some(p) = s.min_exponent() {
        if p <= 0.0 {
            return Err(FracError::UnsupportedSeries { exponent: p });
        }
    }
    let scale = s
        .terms()
        .iter()
        .map(|t| t.coeff.norm())
        .fold(0.0, f64::max);
    if s.max_imag() > 1e-12 * scale.max(1.0) {
        return Err(FracError::Invalid(
            "oracle checks require a real-coefficient series".into(),
        ));
    }
    let formal = match scheme {
        Scheme::Gl => s.left_rl_derivative(alpha)?,
        Scheme::L1 => s.left_caputo_derivative(alpha)?,
    };
    let a = s.base();
    let mut points: Vec<f64> = points.to_vec();
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for &t in &points {
        if t <= a {
            return Err(FracError::Domain(format!(
                "oracle point {t} not strictly right of base {a}"
            )));
        }
    }
    let f = |tau: f64| s.evaluate(tau).map(|v| v.re).unwrap_or(0.0);

    let eval_point = |&t: &f64| -> Result<(f64, f64)> {
        let exact = formal.evaluate(t)?.re;
        let numeric = match scheme {
            Scheme::Gl => gl_left_rl(f, a, t, alpha, h)?,
            Scheme::L1 => l1_left_caputo(f, a, t, alpha, h)?,
        };
        let abs = (exact - numeric).abs();
        let rel = if exact.abs() > 1e-14 { abs / exact.abs() } else { abs };
        Ok((abs, rel))
    };

    #[cfg(feature = "parallel")]
    let errs: Result<Vec<(f64, f64)>> = {
        use rayon::prelude::*;
        points.par_iter().map(eval_point).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let errs: Result<Vec<(f64, f64)>> = points.iter().map(eval_point).collect();

    let errs = errs?;
    let (abs_err, rel_err): (Vec<f64>, Vec<f64>) = errs.into_iter().unzip();
    let pass = rel_err.iter().all(|&e| e <= tol);
    Ok(CheckReport {
        scheme,
        alpha,
        points,
        abs_err,
        rel_err,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[allow(clippy::excessive_precision)]
    const SQRT_PI: f64 = 1.772_453_850_905_516_027_3;

    #[test]
    fn weights_alternating_decay() {
        for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let w = gl_weights(alpha, 200);
            assert_eq!(w[0], 1.0);
            assert!(w[1] < 0.0, "w1 must be negative, alpha {alpha}");
            for k in 1..199 {
                assert!(
                    w[k + 1].abs() < w[k].abs(),
                    "decay failed at k={k}, alpha {alpha}"
                );
            }
        }
    }

    #[test]
    fn gl_matches_power_rule_linear() {
        // f(t) = t, a = 0, alpha = 1/2, t = 1 -> 2/sqrt(pi)
        let v = gl_left_rl(|t| t, 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert_relative_eq!(v, 2.0 / SQRT_PI, max_relative = 1e-2);
    }

    #[test]
    fn gl_matches_constant_rule() {
        let v = gl_left_rl(|_| 1.0, 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert_relative_eq!(v, 1.0 / SQRT_PI, max_relative = 1e-2);
    }

    #[test]
    fn gl_matches_power_rule_quadratic() {
        // Gamma(3)/Gamma(2.5) = 1.5045055561...
        let exact = special::gamma_ratio(3.0, 2.5).unwrap();
        #[allow(clippy::excessive_precision)]
        let reference = 1.504_505_556_127_350;
        assert_relative_eq!(exact, reference, max_relative = 1e-12);
        let v = gl_left_rl(|t| t * t, 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert_relative_eq!(v, exact, max_relative = 1e-2);
    }

    #[test]
    fn gl_seq_equals_parallel_path() {
        let a = gl_left_rl(|t| t * t + t.sin(), 0.0, 1.0, 0.4, DEFAULT_H).unwrap();
        let b = gl_left_rl_seq(|t| t * t + t.sin(), 0.0, 1.0, 0.4, DEFAULT_H).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn l1_constant_is_zero() {
        let v = l1_left_caputo(|_| 3.7, 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn l1_linear() {
        let v = l1_left_caputo(|t| t, 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert_relative_eq!(v, 2.0 / SQRT_PI, max_relative = 1e-3);
    }

    #[test]
    fn l1_fractional_power() {
        // Caputo of t^{1.3} at t=1, alpha 0.5: Gamma(2.3)/Gamma(1.8)
        let exact = special::gamma_ratio(2.3, 1.8).unwrap();
        let v = l1_left_caputo(|t| t.powf(1.3), 0.0, 1.0, 0.5, DEFAULT_H).unwrap();
        assert_relative_eq!(v, exact, max_relative = 1e-3);
    }

    #[test]
    fn l1_beats_gl() {
        let h = 1.0 / 1024.0; // 2^-10
        let exact = special::gamma_ratio(3.0, 2.5).unwrap();
        let gl = (gl_left_rl(|t| t * t, 0.0, 1.0, 0.5, h).unwrap() - exact).abs();
        let l1 = (l1_left_caputo(|t| t * t, 0.0, 1.0, 0.5, h).unwrap() - exact).abs();
        assert!(l1 < gl, "L1 error {l1} should beat GL error {gl}");
    }

    #[test]
    fn reflection_bookkeeping_identity() {
        let (a, b) = (0.0, 1.0);
        let f = |tau: f64| tau * tau + 0.3 * tau;
        for t in [0.2, 0.5, 0.8] {
            let right = gl_right_rl(f, t, b, 0.6, DEFAULT_H).unwrap();
            let reflected =
                gl_left_rl(|tau| f(a + b - tau), a, a + b - t, 0.6, DEFAULT_H).unwrap();
            assert!(
                (right - reflected).abs() <= 1e-12 * right.abs().max(1.0),
                "t = {t}: {right} vs {reflected}"
            );
        }
    }

    #[test]
    fn check_series_power_passes() {
        let s = FracSeries::monomial(0.0, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let r = oracle_check_series(&s, 0.5, &[0.25, 0.5, 1.0], Scheme::L1, DEFAULT_H, 1e-2)
            .unwrap();
        assert!(r.pass, "rel errors: {:?}", r.rel_err);
        let r = oracle_check_series(&s, 0.5, &[0.25, 0.5, 1.0], Scheme::Gl, DEFAULT_H, 1e-2)
            .unwrap();
        assert!(r.pass, "rel errors: {:?}", r.rel_err);
    }

    #[test]
    fn check_series_empty_passes_trivially() {
        let s = FracSeries::zero(0.0);
        let r =
            oracle_check_series(&s, 0.3, &[0.5], Scheme::L1, DEFAULT_H, 1e-2).unwrap();
        assert!(r.pass);
        assert!(r.abs_err[0].abs() <= 1e-12);
    }

    #[test]
    fn check_series_rejects_nonpositive_exponents() {
        let s = FracSeries::monomial(0.0, -0.5, Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            oracle_check_series(&s, 0.5, &[0.5], Scheme::L1, DEFAULT_H, 1e-2),
            Err(FracError::UnsupportedSeries { .. })
        ));
    }

    #[test]
    fn check_report_json_shape() {
        let s = FracSeries::monomial(0.0, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        let r =
            oracle_check_series(&s, 0.5, &[0.5], Scheme::Gl, DEFAULT_H, 1e-2).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["scheme"], "GL");
        assert!(j["pass"].is_boolean());
        assert!(j["points"].is_array() && j["abs_err"].is_array() && j["rel_err"].is_array());
    }
}
