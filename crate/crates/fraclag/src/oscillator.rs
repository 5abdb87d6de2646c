//! Exact series solution of the fractional oscillator
//! `tDb^a (aCDt^a x) = lambda x`.
//!
//! The solution ansatz is `x(t) = sum_n a_n (t-a)^{n a + a - 1}` with the
//! two-step coefficient recurrence
//! `a_{n+2} = lambda e^{-i pi a} Gamma((n+1)a)/Gamma((n+3)a) a_n`.
//! The real and imaginary parts of the complex series give the two real
//! solution families `x1` and `x2`; at `alpha = 1` they reduce to
//! `a0 cos + a1 sin` and zero.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{FracError, Result};
use crate::series::{FracSeries, Interval};
use crate::special::{gamma_ratio, phase_factor};

/// Coefficient magnitude at `t = b` above which the truncated series is
/// flagged as not yet numerically converged.
pub const TRUNCATION_BAR: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct OscillatorProblem {
    pub alpha: f64,
    pub lambda: f64,
    pub interval: Interval,
    pub a0: f64,
    pub a1: f64,
    /// Number of recurrence steps; coefficients run to index `2N+1`.
    pub order: usize,
}

impl OscillatorProblem {
    pub fn new(
        alpha: f64,
        lambda: f64,
        interval: Interval,
        a0: f64,
        a1: f64,
        order: usize,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(FracError::Invalid(format!(
                "oscillator order alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if order < 1 {
            return Err(FracError::Invalid("truncation order must be >= 1".into()));
        }
        if !lambda.is_finite() || !a0.is_finite() || !a1.is_finite() {
            return Err(FracError::Invalid(
                "lambda, a0, a1 must all be finite".into(),
            ));
        }
        Ok(OscillatorProblem {
            alpha,
            lambda,
            interval,
            a0,
            a1,
            order,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OscillatorSolution {
    /// Full complex series with term `a_n` at exponent `n a + a - 1`.
    pub complex_series: FracSeries,
    /// Real parts of the coefficients: the first real solution family.
    pub x1: FracSeries,
    /// Imaginary parts of the coefficients: the second family.
    pub x2: FracSeries,
    /// `a_n` for `n = 0..=2N+1`.
    pub coefficients: Vec<Complex64>,
    /// Set when the last retained term still exceeds [`TRUNCATION_BAR`]
    /// at `t = b`.
    pub truncation_warning: bool,
}

/// One recurrence step:
/// `a_{n+2} = lambda e^{-i pi alpha} Gamma((n+1)alpha)/Gamma((n+3)alpha) a_n`.
pub fn recurrence_step(a_n: Complex64, n: usize, alpha: f64, lambda: f64) -> Complex64 {
    let ratio = gamma_ratio((n as f64 + 1.0) * alpha, (n as f64 + 3.0) * alpha)
        .expect("gamma arguments are strictly positive");
    a_n * lambda * ratio * phase_factor(alpha, -1)
}

/// Resolved closed forms of the recurrence:
/// `even[n] = (lambda e^{-i pi a})^{n+1} Gamma(a)/Gamma((2n+3)a) a0`,
/// `odd[n]  = (lambda e^{-i pi a})^{n+1} Gamma(2a)/Gamma((2n+4)a) a1`,
/// for `n = 0..N-1`, i.e. the coefficients `a_{2(n+1)}` and `a_{2(n+1)+1}`.
pub fn closed_form_coefficients(problem: &OscillatorProblem) -> (Vec<Complex64>, Vec<Complex64>) {
    let alpha = problem.alpha;
    let lambda = problem.lambda;
    let mut even = Vec::with_capacity(problem.order);
    let mut odd = Vec::with_capacity(problem.order);
    for n in 0..problem.order {
        let k = (n + 1) as i32;
        // (lambda e^{-i pi a})^{n+1}, assembled in polar form to avoid
        // accumulating phase error over repeated multiplication
        let factor = Complex64::new(lambda.powi(k), 0.0)
            * Complex64::from_polar(1.0, -(k as f64) * PI * alpha);
        let ge = gamma_ratio(alpha, (2 * n + 3) as f64 * alpha)
            .expect("positive gamma arguments");
        let go = gamma_ratio(2.0 * alpha, (2 * n + 4) as f64 * alpha)
            .expect("positive gamma arguments");
        even.push(factor * ge * problem.a0);
        odd.push(factor * go * problem.a1);
    }
    (even, odd)
}

/// Assemble the truncated series solution.
pub fn solve(problem: &OscillatorProblem) -> Result<OscillatorSolution> {
    let n_coeffs = 2 * problem.order + 2;
    let mut coeffs = Vec::with_capacity(n_coeffs);
    coeffs.push(Complex64::new(problem.a0, 0.0));
    coeffs.push(Complex64::new(problem.a1, 0.0));
    for n in 0..(n_coeffs - 2) {
        let next = recurrence_step(coeffs[n], n, problem.alpha, problem.lambda);
        coeffs.push(next);
    }

    let a = problem.interval.a;
    let alpha = problem.alpha;
    let terms: Vec<(f64, Complex64)> = coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| (n as f64 * alpha + alpha - 1.0, c))
        .collect();
    let complex_series = FracSeries::new(a, terms)?;
    let x1 = complex_series.real_part();
    let x2 = complex_series.imag_part();

    let span = problem.interval.span();
    let truncation_warning = coeffs
        .iter()
        .enumerate()
        .rev()
        .find(|(_, c)| c.norm() > 0.0)
        .map(|(n, c)| c.norm() * span.powf(n as f64 * alpha + alpha - 1.0) > TRUNCATION_BAR)
        .unwrap_or(false);

    Ok(OscillatorSolution {
        complex_series,
        x1,
        x2,
        coefficients: coeffs,
        truncation_warning,
    })
}

/// Formal residual `tDb^a (aCDt^a x) - lambda x` of the truncated series.
///
/// By construction of the recurrence every term cancels except the two
/// highest exponents, which the truncation leaves unmatched.
pub fn residual_check(
    solution: &OscillatorSolution,
    problem: &OscillatorProblem,
) -> Result<FracSeries> {
    let inner = solution
        .complex_series
        .left_caputo_derivative(problem.alpha)?;
    let outer = inner.right_rl_derivative_formal(problem.alpha)?;
    outer.sub(
        &solution
            .complex_series
            .scale(Complex64::new(problem.lambda, 0.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval01() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn recurrence_classical_cos_coefficient() {
        let a2 = recurrence_step(Complex64::new(1.0, 0.0), 0, 1.0, 1.0);
        assert_relative_eq!(a2.re, -0.5, max_relative = 1e-13);
        assert!(a2.im.abs() < 1e-15);
    }

    #[test]
    fn recurrence_classical_sin_coefficient() {
        let a3 = recurrence_step(Complex64::new(1.0, 0.0), 1, 1.0, 1.0);
        assert_relative_eq!(a3.re, -1.0 / 6.0, max_relative = 1e-13);
        assert!(a3.im.abs() < 1e-15);
    }

    #[test]
    fn recurrence_half_order_is_minus_two_i() {
        // alpha = 1/2: a2 = e^{-i pi/2} Gamma(1/2)/Gamma(3/2) = -2i
        let a2 = recurrence_step(Complex64::new(1.0, 0.0), 0, 0.5, 1.0);
        assert!(a2.re.abs() < 1e-13);
        assert_relative_eq!(a2.im, -2.0, max_relative = 1e-13);
    }

    #[test]
    fn closed_form_classical_taylor() {
        let p = OscillatorProblem::new(1.0, 1.0, interval01(), 1.0, 1.0, 8).unwrap();
        let (even, odd) = closed_form_coefficients(&p);
        for n in 0..8 {
            let fact_e: f64 = (1..=(2 * n + 2)).map(|k| k as f64).product();
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            assert_relative_eq!(even[n].re, sign / fact_e, max_relative = 1e-12);
            assert!(even[n].im.abs() < 1e-13);
            let fact_o: f64 = (1..=(2 * n + 3)).map(|k| k as f64).product();
            assert_relative_eq!(odd[n].re, sign / fact_o, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_scaled_lambda() {
        // alpha = 0.5, lambda = 2, a0 = 1: even[0] = 2 e^{-i pi/2} * 2 = -4i
        let p = OscillatorProblem::new(0.5, 2.0, interval01(), 1.0, 0.0, 1).unwrap();
        let (even, _) = closed_form_coefficients(&p);
        assert!(even[0].re.abs() < 1e-12);
        assert_relative_eq!(even[0].im, -4.0, max_relative = 1e-12);
    }

    #[test]
    fn recurrence_matches_closed_form_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let alpha: f64 = rng.gen_range(0.02..0.999);
            let lambda: f64 = rng.gen_range(-2.0..2.0);
            let p = OscillatorProblem::new(alpha, lambda, interval01(), 1.3, -0.8, 15).unwrap();
            let sol = solve(&p).unwrap();
            let (even, odd) = closed_form_coefficients(&p);
            for n in 0..15 {
                let it_e = sol.coefficients[2 * (n + 1)];
                let it_o = sol.coefficients[2 * (n + 1) + 1];
                let d_e = (it_e - even[n]).norm();
                let d_o = (it_o - odd[n]).norm();
                assert!(
                    d_e <= 1e-12 * even[n].norm().max(1e-280),
                    "even[{n}] alpha={alpha} lambda={lambda}: {d_e:e}"
                );
                assert!(
                    d_o <= 1e-12 * odd[n].norm().max(1e-280),
                    "odd[{n}] alpha={alpha} lambda={lambda}: {d_o:e}"
                );
            }
        }
    }

    #[test]
    fn classical_limit_cosine() {
        let p = OscillatorProblem::new(1.0, 1.0, interval01(), 1.0, 0.0, 20).unwrap();
        let sol = solve(&p).unwrap();
        let v = sol.x1.evaluate(0.5).unwrap().re;
        assert!((v - 0.5f64.cos()).abs() <= 1e-10, "{v}");
        assert!(sol.x2.evaluate(0.5).unwrap().re.abs() <= 1e-12);
        assert!(!sol.truncation_warning);
    }

    #[test]
    fn classical_limit_sine() {
        let p = OscillatorProblem::new(1.0, 1.0, interval01(), 0.0, 1.0, 20).unwrap();
        let sol = solve(&p).unwrap();
        let v = sol.x1.evaluate(0.5).unwrap().re;
        assert!((v - 0.5f64.sin()).abs() <= 1e-10, "{v}");
    }

    #[test]
    fn classical_limit_coefficientwise() {
        let p = OscillatorProblem::new(1.0, 1.0, interval01(), 1.0, 1.0, 12).unwrap();
        let sol = solve(&p).unwrap();
        let mut fact = 1.0f64;
        for (n, c) in sol.coefficients.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let taylor = sign / fact;
            assert!(
                (c.re - taylor).abs() <= 1e-13 * taylor.abs().max(1.0),
                "n={n}: {} vs {taylor}",
                c.re
            );
            assert!(c.im.abs() < 1e-13, "n={n}: im {}", c.im);
        }
    }

    #[test]
    fn lambda_zero_truncates_exactly() {
        let p = OscillatorProblem::new(0.65, 0.0, interval01(), 2.0, -3.0, 10).unwrap();
        let sol = solve(&p).unwrap();
        assert_eq!(sol.complex_series.len(), 2);
        assert_relative_eq!(sol.complex_series.terms()[0].exponent, -0.35, epsilon = 1e-12);
        assert_relative_eq!(sol.complex_series.terms()[1].exponent, 0.3, epsilon = 1e-12);
        let res = residual_check(&sol, &p).unwrap();
        assert!(res.is_empty());
    }

    #[test]
    fn residual_supported_on_top_two_exponents() {
        for &alpha in &[0.5, 0.75, 0.9] {
            for &lambda in &[-1.0, 0.5, 1.0] {
                for &order in &[5usize, 10] {
                    let p =
                        OscillatorProblem::new(alpha, lambda, interval01(), 1.0, 1.0, order)
                            .unwrap();
                    let sol = solve(&p).unwrap();
                    let res = residual_check(&sol, &p).unwrap();
                    let n_top = 2 * order;
                    let top0 = n_top as f64 * alpha + alpha - 1.0;
                    let top1 = (n_top + 1) as f64 * alpha + alpha - 1.0;
                    let scale = sol
                        .coefficients
                        .iter()
                        .map(|c| c.norm() * lambda.abs())
                        .fold(0.0, f64::max);
                    for t in res.terms() {
                        let is_top = (t.exponent - top0).abs() <= 1e-9
                            || (t.exponent - top1).abs() <= 1e-9;
                        assert!(
                            is_top || t.coeff.norm() <= 1e-12 * scale.max(1.0),
                            "alpha={alpha} lambda={lambda} N={order}: stray exponent {} coeff {}",
                            t.exponent,
                            t.coeff.norm()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn classical_residual_is_negligible() {
        let p = OscillatorProblem::new(1.0, 1.0, interval01(), 1.0, 0.0, 20).unwrap();
        let sol = solve(&p).unwrap();
        let res = residual_check(&sol, &p).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert!(res.evaluate(t).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn term_decay_past_convergence_index() {
        // |a_n| (t-a)^{n alpha} decreases monotonically for large n
        let p = OscillatorProblem::new(0.6, 1.5, interval01(), 1.0, 1.0, 25).unwrap();
        let sol = solve(&p).unwrap();
        let magnitudes: Vec<f64> = sol
            .coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| c.norm() * 1.0f64.powf(n as f64 * 0.6))
            .collect();
        for n in 10..magnitudes.len() - 1 {
            assert!(
                magnitudes[n + 1] < magnitudes[n] || magnitudes[n] == 0.0,
                "no decay at n={n}"
            );
        }
    }

    #[test]
    fn truncation_warning_fires_for_small_order() {
        let p = OscillatorProblem::new(0.5, 2.0, Interval::new(0.0, 2.0).unwrap(), 1.0, 1.0, 2)
            .unwrap();
        let sol = solve(&p).unwrap();
        assert!(sol.truncation_warning);
    }
}
