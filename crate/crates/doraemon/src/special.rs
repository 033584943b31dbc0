//! Thin layer over the special functions the distribution math needs.
//!
//! Log-gamma, digamma and the error function come from `statrs`; trigamma is
//! not exported there, so it is implemented here via the standard recurrence
//! plus Bernoulli asymptotic series.

use std::f64::consts::{PI, SQRT_2};

pub use statrs::function::gamma::{digamma, ln_gamma};

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b)
///
/// B(a, 1) = 1/a is taken exactly rather than through log-gamma, so the
/// uniform case B(1, 1) = 1 comes out as exactly zero.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    if b == 1.0 {
        return -a.ln();
    }
    if a == 1.0 {
        return -b.ln();
    }
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Trigamma ψ′(x) for x > 0.
///
/// Uses ψ′(x) = ψ′(x+1) + 1/x² to shift the argument above 10, then the
/// asymptotic expansion in inverse odd powers. Absolute error is below
/// 1e−14 over the shape ranges used by the solver (x ≥ 0.05).
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma requires x > 0, got {x}");
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_2k / x^(2k+1)
    let series = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                + inv2
                    * (-1.0 / 30.0
                        + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * (5.0 / 66.0)))));
    acc + series
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, computed through erfc so far-tail values keep
/// relative precision (needed for nearly-degenerate truncation windows).
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / SQRT_2)
}
