//! Operator inversion for the damped generalization
//! `tDb^a (aCDt^a x) + g(t) aCDt^a x = f(t)`.
//!
//! Writing `z = aCDt^a x` turns the equation into `L z = f/g` with
//! `L = g^{-1} tDb^a + 1`, inverted by the Neumann series
//! `L^{-1} = sum_i (-1)^i [g^{-1} tDb^a]^i`. The solution is completed by
//! `x = aIt^a z + c1 (t-a)^{a-1} + c2`; the homogeneous terms are exactly
//! those annihilated by the left Caputo stage.
//!
//! `g` is restricted to a nonzero monomial `d (t-a)^q` so the division is
//! exact in the carrier; there are no numeric grids in this module.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FracError, Result};
use crate::series::{FracSeries, Interval, EXP_MERGE_TOL};
use crate::special;

/// Relative term-norm below which the Neumann tail is considered
/// numerically converged.
pub const TAIL_TOL: f64 = 1e-16;

/// Default growth guard on iterate term norms.
pub const DEFAULT_GUARD: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct GeneralProblem {
    pub alpha: f64,
    pub interval: Interval,
    /// Damping, a single monomial `d (t-a)^q` with `d != 0`.
    pub g: FracSeries,
    pub f: FracSeries,
    pub c1: Complex64,
    pub c2: Complex64,
    pub max_iters: usize,
    pub growth_guard: f64,
}

impl GeneralProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha: f64,
        interval: Interval,
        g: FracSeries,
        f: FracSeries,
        c1: Complex64,
        c2: Complex64,
        max_iters: usize,
        growth_guard: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(FracError::Invalid(format!(
                "order alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if g.len() != 1 {
            return Err(FracError::Invalid(format!(
                "damping g must be a single nonzero monomial, got {} terms",
                g.len()
            )));
        }
        if max_iters < 1 {
            return Err(FracError::Invalid("max_iters must be >= 1".into()));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
        if !(growth_guard > 0.0) {
            return Err(FracError::Invalid("growth guard must be positive".into()));
        }
        Ok(GeneralProblem {
            alpha,
            interval,
            g,
            f,
            c1,
            c2,
            max_iters,
            growth_guard,
        })
    }

    fn g_monomial(&self) -> (f64, Complex64) {
        let t = self.g.terms()[0];
        (t.exponent, t.coeff)
    }
}

/// Why the Neumann iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    /// An iterate was pole-killed to zero: the series terminates exactly.
    EmptyIterate,
    /// Iterate term norm fell below `TAIL_TOL` times the input norm.
    BelowTolerance,
    /// Iteration budget exhausted; the sum is a truncation.
    MaxIters,
    /// The next iterate would leave the carrier; partial sum returned.
    CarrierExit,
}

#[derive(Debug, Clone)]
pub struct LInverseDiagnostics {
    pub iterations: usize,
    /// `max |c| (b-a)^p` of each iterate, starting with the input.
    pub term_norms: Vec<f64>,
    pub halt: Halt,
    /// The last nonempty iterate included in the sum.
    pub final_iterate: FracSeries,
}

#[derive(Debug, Clone)]
pub struct NeumannResult {
    pub z: FracSeries,
    pub x: FracSeries,
    pub iterations_used: usize,
    pub term_norms: Vec<f64>,
    pub converged: bool,
    pub halt: Halt,
    pub final_iterate: FracSeries,
}

/// One application of `T = g^{-1} tDb^a` in the monomial algebra.
fn apply_t(s: &FracSeries, alpha: f64, q: f64, d: Complex64) -> Result<FracSeries> {
    s.right_rl_derivative_formal(alpha)?
        .mul_monomial(-q, Complex64::new(1.0, 0.0) / d)
}

/// Truncated Neumann sum `sum_{i=0}^{M} (-1)^i T^i(rhs)`.
///
/// Stops early on an empty iterate (exact termination) or once the
/// iterate norm drops below `TAIL_TOL` times the input norm. An iterate
/// that would leave the carrier halts the sum with `Halt::CarrierExit`
/// and the partial result; a norm above `guard` is a hard
/// [`FracError::Divergence`].
pub fn apply_l_inverse(
    rhs: &FracSeries,
    g: &FracSeries,
    alpha: f64,
    max_iters: usize,
    guard: f64,
    span: f64,
) -> Result<(FracSeries, LInverseDiagnostics)> {
    if g.len() != 1 {
        return Err(FracError::Invalid(
            "damping g must be a single nonzero monomial".into(),
        ));
    }
    let (q, d) = {
        let t = g.terms()[0];
        (t.exponent, t.coeff)
    };
    let rhs_norm = rhs.weighted_sup_norm(span);
    let mut sum = rhs.clone();
    let mut current = rhs.clone();
    let mut term_norms = vec![rhs_norm];
    let mut halt = Halt::MaxIters;
    let mut iterations = 0usize;
    let mut final_iterate = rhs.clone();

    for i in 1..=max_iters {
        let next = match apply_t(&current, alpha, q, d) {
            Ok(s) => s,
            Err(FracError::CarrierExit { .. }) => {
                halt = Halt::CarrierExit;
                break;
            }
            Err(e) => return Err(e),
        };
        iterations = i;
        let norm = next.weighted_sup_norm(span);
        term_norms.push(norm);
        if next.is_empty() {
            halt = Halt::EmptyIterate;
            break;
        }
        if norm > guard {
            return Err(FracError::Divergence {
                norm,
                guard,
                iteration: i,
            });
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum = sum.add(&next.scale(Complex64::new(sign, 0.0)))?;
        final_iterate = next.clone();
        current = next;
        if norm < TAIL_TOL * rhs_norm.max(f64::MIN_POSITIVE) {
            halt = Halt::BelowTolerance;
            break;
        }
    }

    Ok((
        sum,
        LInverseDiagnostics {
            iterations,
            term_norms,
            halt,
            final_iterate,
        },
    ))
}

/// Solve the damped equation: `z = L^{-1}(f/g)`, then
/// `x = aIt^a z + c1 (t-a)^{a-1} + c2`.
pub fn solve_general(problem: &GeneralProblem) -> Result<NeumannResult> {
    let (q, d) = problem.g_monomial();
    let base = problem.interval.a;
    let span = problem.interval.span();

    if problem.f.is_empty() {
        // homogeneous solution only
        let x = homogeneous_terms(problem)?;
        return Ok(NeumannResult {
            z: FracSeries::zero(base),
            x,
            iterations_used: 0,
            term_norms: vec![0.0],
            converged: true,
            halt: Halt::EmptyIterate,
            final_iterate: FracSeries::zero(base),
        });
    }

    let rhs = problem.f.mul_monomial(-q, Complex64::new(1.0, 0.0) / d)?;
    let (z, diag) = apply_l_inverse(
        &rhs,
        &problem.g,
        problem.alpha,
        problem.max_iters,
        problem.growth_guard,
        span,
    )?;

    let x = z
        .fractional_integral(problem.alpha)?
        .add(&homogeneous_terms(problem)?)?;

    let converged = matches!(diag.halt, Halt::EmptyIterate | Halt::BelowTolerance);
    Ok(NeumannResult {
        z,
        x,
        iterations_used: diag.iterations,
        term_norms: diag.term_norms,
        converged,
        halt: diag.halt,
        final_iterate: diag.final_iterate,
    })
}

fn homogeneous_terms(problem: &GeneralProblem) -> Result<FracSeries> {
    FracSeries::new(
        problem.interval.a,
        [
            (problem.alpha - 1.0, problem.c1),
            (0.0, problem.c2),
        ],
    )
}

/// Formal residual of the recovered solution:
/// `tDb^a(aCDt^a x) + g aCDt^a x - f`.
///
/// Empty for exactly terminated runs; for truncated runs the support lies
/// in the exponent set of the final iterate's derivative image.
pub fn verify_general(result: &NeumannResult, problem: &GeneralProblem) -> Result<FracSeries> {
    let (q, d) = problem.g_monomial();
    let mut caputo_x = result.x.left_caputo_derivative(problem.alpha)?;
    // Degenerate gauge overlap: a z-term at exponent -alpha integrates
    // to exponent 0, where it is indistinguishable from the constant
    // c2 and would be annihilated. By construction its derivative is
    // the z-term itself, so restore it.
    let collided = result.z.coeff_at(-problem.alpha);
    if collided.norm() > 0.0 {
        caputo_x =
            caputo_x.add(&FracSeries::monomial(result.z.base(), -problem.alpha, collided)?)?;
    }
    let outer = caputo_x.right_rl_derivative_formal(problem.alpha)?;
    let damped = caputo_x.mul_monomial(q, d)?;
    let raw = outer.add(&damped)?.sub(&problem.f)?;
    // drop cancellation dust: a residual term is real only if it is not
    // negligible against the contributions that meet at its exponent
    let kept = raw.terms().iter().filter_map(|t| {
        let local = outer
            .coeff_at(t.exponent)
            .norm()
            .max(damped.coeff_at(t.exponent).norm())
            .max(problem.f.coeff_at(t.exponent).norm());
        (t.coeff.norm() > 1e-12 * local).then_some((t.exponent, t.coeff))
    });
    FracSeries::new(raw.base(), kept.collect::<Vec<_>>())
}

/// Outcome of walking the exponent ladder of a monomial right-hand side
/// symbolically, without arithmetic on coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderPrediction {
    /// Pole-kill after this many applications of `T`.
    Terminates(usize),
    /// The ladder leaves the carrier at this application.
    CarrierExit(usize),
    /// Neither happens within the iteration budget.
    Runs,
}

/// Predict the exact-termination behaviour of [`apply_l_inverse`] for a
/// monomial right-hand side with exponent `p0`.
pub fn predict_ladder(p0: f64, q: f64, alpha: f64, max_iters: usize) -> LadderPrediction {
    let mut p = p0;
    for i in 1..=max_iters {
        // derivative step: pole-kill when p + 1 - alpha is a
        // non-positive integer (only 0 is reachable in the carrier)
        if ((p + 1.0 - alpha) - (p + 1.0 - alpha).round()).abs() <= special::POLE_TOL
            && (p + 1.0 - alpha).round() <= 0.0
        {
            return LadderPrediction::Terminates(i);
        }
        let after_derivative = p - alpha;
        if after_derivative <= -1.0 + EXP_MERGE_TOL {
            return LadderPrediction::CarrierExit(i);
        }
        let after_division = after_derivative - q;
        if after_division <= -1.0 + EXP_MERGE_TOL {
            return LadderPrediction::CarrierExit(i);
        }
        p = after_division;
    }
    LadderPrediction::Runs
}
