//! Fractional variational calculus toolkit.
//!
//! The library is organized around a single carrier algebra: finite
//! fractional power series in `(t-a)` with complex coefficients
//! ([`series::FracSeries`]). On that carrier it implements
//!
//! * the left Riemann-Liouville and Caputo derivatives, the formal
//!   (phase-factor) right Riemann-Liouville derivative, and the
//!   fractional integral of order `0 < alpha <= 1`;
//! * an exact series solver for the fractional oscillator
//!   `tDb^a (aCDt^a x) = lambda x` ([`oscillator`]);
//! * a Neumann-series operator inversion for the damped generalization
//!   `tDb^a (aCDt^a x) + g(t) aCDt^a x = f(t)` ([`neumann`]);
//! * synthesis of a Lagrangian `L = 1/2 (CD x)^2 + h CD x + G` for a
//!   given fractional Euler-Lagrange equation ([`lagrangian`]);
//! * independent Grünwald-Letnikov and L1 quadrature oracles used to
//!   cross-validate the formal rules ([`oracle`]).
//!
//! With the default `parallel` feature the oracle convolution sums and
//! per-point checks fan out over rayon; disabling it selects sequential
//! fallbacks with identical results up to summation order.

pub mod error;
pub mod expr;
pub mod lagrangian;
pub mod neumann;
pub mod oracle;
pub mod oscillator;
pub mod report;
pub mod series;
pub mod special;

pub use error::{FracError, Result};
pub use num_complex::Complex64;
pub use series::{FracSeries, Interval};
