//! Lagrangian synthesis for the Euler-Lagrange target
//! `tDb^a (aCDt^a x) + b(t,x) (aCDt^a x) + f(t,x) = 0`.
//!
//! The ansatz `L = 1/2 (aCDt^a x)^2 + h(t,x) aCDt^a x + G(t,x)` reduces
//! the problem to two algebraic conditions: `dh/dx = b` and
//! `tDb^a h + dG/dx = f`. Coefficient functions are polynomials in `x`
//! with fractional-series coefficients in `t`; the right derivative acts
//! on the explicit `t`-dependence only, with `x` held as a formal
//! parameter. Both `x`-antiderivatives fix their integration constant to
//! zero (a gauge choice: any `x`-free function of `t` is equally valid).

use num_complex::Complex64;

use crate::error::{FracError, Result};
use crate::series::{FracSeries, EXP_MERGE_TOL};

/// Highest supported power of `x` in equation coefficient functions.
pub const MAX_X_DEGREE: usize = 4;

/// Polynomial in `x` with fractional-series coefficients:
/// `sum_j phi_j(t) x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFunction {
    coeffs: Vec<FracSeries>,
}

impl CoefficientFunction {
    /// Build from `phi_0 .. phi_D`; `D` capped at [`MAX_X_DEGREE`].
    pub fn new(coeffs: Vec<FracSeries>) -> Result<Self> {
        if coeffs.len() > MAX_X_DEGREE + 1 {
            return Err(FracError::Invalid(format!(
                "x-degree {} exceeds the supported cap {MAX_X_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Self::from_coeffs(coeffs)
    }

    /// Internal constructor without the degree cap: synthesized `h` and
    /// `G` legitimately carry one extra power of `x`.
    fn from_coeffs(coeffs: Vec<FracSeries>) -> Result<Self> {
        if let Some(first) = coeffs.first() {
            let base = first.base();
            for c in &coeffs {
                if (c.base() - base).abs() > EXP_MERGE_TOL {
                    return Err(FracError::BaseMismatch(base, c.base()));
                }
            }
        }
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|s| s.is_empty()) && coeffs.len() > 1 {
            coeffs.pop();
        }
        Ok(CoefficientFunction { coeffs })
    }

    pub fn zero(base: f64) -> Self {
        CoefficientFunction {
            coeffs: vec![FracSeries::zero(base)],
        }
    }

    pub fn coeffs(&self) -> &[FracSeries] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, j: usize) -> FracSeries {
        self.coeffs
            .get(j)
            .cloned()
            .unwrap_or_else(|| FracSeries::zero(self.base()))
    }

    pub fn base(&self) -> f64 {
        self.coeffs.first().map(|s| s.base()).unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|s| s.is_empty())
    }

    /// Antiderivative in `x` with zero integration constant:
    /// `phi_j x^j -> phi_j x^{j+1}/(j+1)`.
    fn x_antiderivative(&self) -> Result<CoefficientFunction> {
        let mut out = vec![FracSeries::zero(self.base())];
        for (j, phi) in self.coeffs.iter().enumerate() {
            out.push(phi.scale(Complex64::new(1.0 / (j as f64 + 1.0), 0.0)));
        }
        Self::from_coeffs(out)
    }

    /// Derivative in `x`: `phi_j x^j -> j phi_j x^{j-1}`.
    fn x_derivative(&self) -> Result<CoefficientFunction> {
        if self.coeffs.len() <= 1 {
            return Ok(Self::zero(self.base()));
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, phi)| phi.scale(Complex64::new(j as f64, 0.0)))
            .collect();
        Self::from_coeffs(out)
    }

    /// Formal right RL derivative applied coefficient-wise to the
    /// explicit `t`-dependence, `x` held fixed.
    fn right_rl_formal(&self, alpha: f64) -> Result<CoefficientFunction> {
        let out: Result<Vec<FracSeries>> = self
            .coeffs
            .iter()
            .map(|phi| phi.right_rl_derivative_formal(alpha))
            .collect();
        Self::from_coeffs(out?)
    }

    fn sub(&self, other: &CoefficientFunction) -> Result<CoefficientFunction> {
        let base = self.base();
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for j in 0..len {
            let a = self
                .coeffs
                .get(j)
                .cloned()
                .unwrap_or_else(|| FracSeries::zero(base));
            let b = other
                .coeffs
                .get(j)
                .cloned()
                .unwrap_or_else(|| FracSeries::zero(base));
            out.push(a.sub(&b)?);
        }
        Self::from_coeffs(out)
    }

    pub fn add(&self, other: &CoefficientFunction) -> Result<CoefficientFunction> {
        self.sub(&other.negate())
    }

    fn negate(&self) -> CoefficientFunction {
        CoefficientFunction {
            coeffs: self
                .coeffs
                .iter()
                .map(|s| s.scale(Complex64::new(-1.0, 0.0)))
                .collect(),
        }
    }

    /// True when any series coefficient has a nonnegligible imaginary
    /// part (the formal phase factor can make synthesized potentials
    /// complex-valued).
    pub fn has_complex_coeffs(&self) -> bool {
        self.coeffs.iter().any(|s| {
            let scale = s
                .terms()
                .iter()
                .map(|t| t.coeff.norm())
                .fold(0.0, f64::max);
            s.max_imag() > 1e-14 * scale.max(1e-30)
        })
    }

    /// Coefficient-wise comparison within a mixed tolerance: `tol`
    /// scaled by the largest coefficient magnitude of either side,
    /// floored at one, so cancellation dust from order-one
    /// intermediates is judged against the problem scale.
    pub fn approx_eq(&self, other: &CoefficientFunction, tol: f64) -> bool {
        let scale = self
            .coeffs
            .iter()
            .chain(other.coeffs.iter())
            .flat_map(|s| s.terms())
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let len = self.coeffs.len().max(other.coeffs.len());
        for j in 0..len {
            let diff = match self.coeff(j).sub(&other.coeff(j)) {
                Ok(d) => d,
                Err(_) => return false,
            };
            if diff.terms().iter().any(|t| t.coeff.norm() > tol * scale) {
                return false;
            }
        }
        true
    }
}

/// The synthesized Lagrangian `L = 1/2 (CD x)^2 + h CD x + G`; the
/// kinetic coefficient is the fixed scalar 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    pub coupling: CoefficientFunction,
    pub potential: CoefficientFunction,
}

/// Construct the Lagrangian for the equation with coefficients `b` and
/// `f`: `h` is the `x`-antiderivative of `b`, and `G` the
/// `x`-antiderivative of `f - tDb^a h`.
///
/// Round-trip guarantee: [`euler_lagrange`] of the result reproduces
/// `(b, f)` exactly at the coefficient-arithmetic level.
pub fn synthesize(
    b: &CoefficientFunction,
    f: &CoefficientFunction,
    alpha: f64,
) -> Result<LagrangianSpec> {
    let h = b.x_antiderivative()?;
    let dh = h.right_rl_formal(alpha)?;
    let potential = f.sub(&dh)?.x_antiderivative()?;
    Ok(LagrangianSpec {
        coupling: h,
        potential,
    })
}

/// The Euler-Lagrange coefficients generated by a Lagrangian:
/// `b = dh/dx` and `f = tDb^a h + dG/dx`. Inverse of [`synthesize`] on
/// its image.
pub fn euler_lagrange(
    l: &LagrangianSpec,
    alpha: f64,
) -> Result<(CoefficientFunction, CoefficientFunction)> {
    let b = l.coupling.x_derivative()?;
    let f = l
        .coupling
        .right_rl_formal(alpha)?
        .add(&l.potential.x_derivative()?)?;
    Ok((b, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::special;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn poly(coeffs: Vec<FracSeries>) -> CoefficientFunction {
        CoefficientFunction::new(coeffs).unwrap()
    }

    /// b = 0, f = -lambda x: the oscillator equation
    fn oscillator_f(lambda: f64) -> CoefficientFunction {
        poly(vec![
            FracSeries::zero(0.0),
            FracSeries::constant(0.0, re(-lambda)),
        ])
    }

    #[test]
    fn oscillator_synthesis() {
        let lambda = 1.7;
        let b = CoefficientFunction::zero(0.0);
        let f = oscillator_f(lambda);
        let l = synthesize(&b, &f, 0.5).unwrap();
        assert!(l.coupling.is_zero());
        // G = -lambda x^2 / 2
        assert_eq!(l.potential.degree(), 2);
        assert!(l.potential.coeff(0).is_empty());
        assert!(l.potential.coeff(1).is_empty());
        assert_relative_eq!(l.potential.coeff(2).coeff_at(0.0).re, -lambda / 2.0);
        assert!(!l.potential.has_complex_coeffs());

        // Euler-Lagrange reproduces the oscillator equation bit for bit
        let (b2, f2) = euler_lagrange(&l, 0.5).unwrap();
        assert!(b2.is_zero());
        assert_eq!(f2, f);
    }

    #[test]
    fn constant_coupling_synthesis() {
        // b = b0 constant: h = b0 x,
        // tD^a h = b0 e^{i pi a} (t-a)^{-a}/Gamma(1-a) x,
        // G = -b0 e^{i pi a} (t-a)^{-a} x^2 / (2 Gamma(1-a))
        let alpha = 0.4;
        let b0 = 2.5;
        let b = poly(vec![FracSeries::constant(0.0, re(b0))]);
        let f = CoefficientFunction::zero(0.0);
        let l = synthesize(&b, &f, alpha).unwrap();

        assert_relative_eq!(l.coupling.coeff(1).coeff_at(0.0).re, b0);
        let g2 = l.potential.coeff(2);
        assert_eq!(g2.len(), 1);
        assert_relative_eq!(g2.terms()[0].exponent, -alpha, epsilon = 1e-12);
        let expected = special::phase_factor(alpha, 1)
            * (-b0 / (2.0 * special::gamma(1.0 - alpha).unwrap()));
        assert!((g2.terms()[0].coeff - expected).norm() <= 1e-13);
        assert!(l.potential.has_complex_coeffs());

        let (b2, f2) = euler_lagrange(&l, alpha).unwrap();
        assert!(b2.approx_eq(&b, 1e-14));
        assert!(f2.approx_eq(&f, 1e-14));
    }

    #[test]
    fn x_free_forcing_synthesis() {
        // b = 0, f = f0(t): h = 0, G = f0(t) x
        let f0 = FracSeries::new(0.0, [(0.5, re(2.0)), (1.5, re(-1.0))]).unwrap();
        let b = CoefficientFunction::zero(0.0);
        let f = poly(vec![f0.clone()]);
        let l = synthesize(&b, &f, 0.7).unwrap();
        assert!(l.coupling.is_zero());
        assert_eq!(l.potential.degree(), 1);
        assert_eq!(l.potential.coeff(1), f0);
    }

    #[test]
    fn free_lagrangian_gives_trivial_equation() {
        let l = LagrangianSpec {
            coupling: CoefficientFunction::zero(0.0),
            potential: CoefficientFunction::zero(0.0),
        };
        let (b, f) = euler_lagrange(&l, 0.5).unwrap();
        assert!(b.is_zero());
        assert!(f.is_zero());
    }

    fn random_coefficient_function(
        rng: &mut ChaCha8Rng,
        max_degree: usize,
    ) -> CoefficientFunction {
        let degree = rng.gen_range(0..=max_degree);
        let coeffs = (0..=degree)
            .map(|_| {
                let n_terms = rng.gen_range(0..3);
                FracSeries::new(
                    0.0,
                    (0..n_terms).map(|_| {
                        (
                            rng.gen_range(0.1..3.0),
                            Complex64::new(rng.gen_range(-2.0..2.0), 0.0),
                        )
                    }),
                )
                .unwrap()
            })
            .collect();
        CoefficientFunction::new(coeffs).unwrap()
    }

    #[test]
    fn round_trip_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 0..20 {
            let alpha = rng.gen_range(0.15..0.95);
            let b = random_coefficient_function(&mut rng, 3);
            let f = random_coefficient_function(&mut rng, 4);
            let l = synthesize(&b, &f, alpha).unwrap();
            let (b2, f2) = euler_lagrange(&l, alpha).unwrap();
            assert!(b2.approx_eq(&b, 1e-12), "case {k}: b mismatch");
            assert!(
                f2.approx_eq(&f, 1e-12),
                "case {k}: f mismatch\nalpha={alpha}\nf ={f:?}\nf2={f2:?}"
            );
        }
    }

    #[test]
    fn gauge_freedom_in_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = 0.6;
        let b = random_coefficient_function(&mut rng, 2);
        let f = random_coefficient_function(&mut rng, 3);
        let l = synthesize(&b, &f, alpha).unwrap();
        let (b_ref, f_ref) = euler_lagrange(&l, alpha).unwrap();
        for _ in 0..5 {
            let psi = FracSeries::new(
                0.0,
                [(rng.gen_range(0.1..2.0), re(rng.gen_range(-4.0..4.0)))],
            )
            .unwrap();
            let mut coeffs: Vec<FracSeries> = l.potential.coeffs().to_vec();
            coeffs[0] = coeffs[0].add(&psi).unwrap();
            let shifted = LagrangianSpec {
                coupling: l.coupling.clone(),
                potential: CoefficientFunction::from_coeffs(coeffs).unwrap(),
            };
            let (b2, f2) = euler_lagrange(&shifted, alpha).unwrap();
            assert!(b2.approx_eq(&b_ref, 1e-14));
            assert!(f2.approx_eq(&f_ref, 1e-14));
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let coeffs = (0..=5)
            .map(|_| FracSeries::constant(0.0, re(1.0)))
            .collect();
        assert!(CoefficientFunction::new(coeffs).is_err());
    }
}
