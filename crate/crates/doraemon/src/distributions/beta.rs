//! Per-dimension Beta(a, b) math on the unit interval. Rescaling to a
//! physical interval only shifts log densities and entropies by ln(width),
//! which the callers in `mod.rs` apply.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::special::{digamma, ln_beta, trigamma};

/// Smallest admissible shape parameter. Keeps densities integrable and the
/// digamma/trigamma terms in gradients well conditioned.
pub const MIN_SHAPE: f64 = 0.05;

pub(crate) fn validate_shape(dim: usize, a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a < MIN_SHAPE || b < MIN_SHAPE {
        return Err(Error::InvalidParams {
            dim,
            reason: format!("beta shapes ({a}, {b}) must be finite and >= {MIN_SHAPE}"),
        });
    }
    Ok(())
}

/// ln p(u) for u in [0, 1]. Endpoint inputs produce the honest density
/// limit: finite for a shape of exactly 1 (the term drops out rather than
/// evaluating 0 times ln 0), infinite for shapes below 1, -inf above.
pub(crate) fn log_pdf_unit(a: f64, b: f64, u: f64) -> f64 {
    let mut lp = 0.0;
    if a != 1.0 {
        lp += (a - 1.0) * u.ln();
    }
    if b != 1.0 {
        lp += (b - 1.0) * (-u).ln_1p();
    }
    lp - ln_beta(a, b)
}

pub(crate) fn entropy_unit(a: f64, b: f64) -> f64 {
    ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
        + (a + b - 2.0) * digamma(a + b)
}

/// KL( Beta(a1,b1) || Beta(a2,b2) ), both on the same interval.
pub(crate) fn kl_unit(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    ln_beta(a2, b2) - ln_beta(a1, b1)
        + (a1 - a2) * digamma(a1)
        + (b1 - b2) * digamma(b1)
        + (a2 - a1 + b2 - b1) * digamma(a1 + b1)
}

/// (dH/da, dH/db).
pub(crate) fn entropy_grad(a: f64, b: f64) -> (f64, f64) {
    let t_ab = trigamma(a + b);
    let common = (a + b - 2.0) * t_ab;
    (
        common - (a - 1.0) * trigamma(a),
        common - (b - 1.0) * trigamma(b),
    )
}

/// Gradient of KL( Beta(a,b) || Beta(a0,b0) ) with respect to (a, b).
pub(crate) fn kl_grad(a: f64, b: f64, a0: f64, b0: f64) -> (f64, f64) {
    let cross = (a0 - a + b0 - b) * trigamma(a + b);
    (
        (a - a0) * trigamma(a) + cross,
        (b - b0) * trigamma(b) + cross,
    )
}

/// Gradient of ln p(u) with respect to (a, b), given precomputed ln u and
/// ln(1-u) for the fixed sample u.
pub(crate) fn log_pdf_grad(a: f64, b: f64, ln_u: f64, ln_1mu: f64) -> (f64, f64) {
    let d_ab = digamma(a + b);
    (ln_u - digamma(a) + d_ab, ln_1mu - digamma(b) + d_ab)
}

/// Draw from Beta(a, b) rescaled to [lo, hi], retrying until the rescaled
/// value is strictly inside the interval. The strictness check happens
/// after rescaling: with small shapes the unit draw can be so close to an
/// endpoint that `lo + u * width` rounds onto the boundary.
pub(crate) fn sample_interval<R: Rng + ?Sized>(
    dim: usize,
    a: f64,
    b: f64,
    lo: f64,
    hi: f64,
    cap: usize,
    rng: &mut R,
) -> Result<f64> {
    let dist = rand_distr::Beta::new(a, b).map_err(|e| Error::InvalidParams {
        dim,
        reason: e.to_string(),
    })?;
    let width = hi - lo;
    for _ in 0..cap {
        let x = lo + dist.sample(rng) * width;
        if x > lo && x < hi {
            return Ok(x);
        }
    }
    Err(Error::RejectionCapExceeded { dim, cap })
}
