//! Per-dimension Gaussian truncated to [lo, hi].
//!
//! Everything is expressed through the standardized truncation points
//! alpha = (lo - mu)/sigma and beta = (hi - mu)/sigma and three recurring
//! quantities of the parent normal:
//!
//!   Z = Phi(beta) - Phi(alpha)            retained mass
//!   D = phi(alpha) - phi(beta)            so the mean is mu + sigma D/Z
//!   N = alpha phi(alpha) - beta phi(beta) so E[(x-mu)^2] = sigma^2 (1 + N/Z)
//!
//! Gradients with respect to (mu, sigma) follow from
//! d(alpha)/d(mu) = -1/sigma, d(alpha)/d(sigma) = -alpha/sigma (same shape
//! for beta) and phi'(t) = -t phi(t).

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn validate_params(dim: usize, mean: f64, std: f64) -> Result<()> {
    if !(mean.is_finite() && std.is_finite()) || std <= 0.0 {
        return Err(Error::InvalidParams {
            dim,
            reason: format!("truncated gaussian (mean {mean}, std {std}) needs finite mean and std > 0"),
        });
    }
    Ok(())
}

/// One truncated dimension with its derived quantities precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TruncDim {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
    alpha: f64,
    beta: f64,
    z: f64,
    ln_z: f64,
    phi_a: f64,
    phi_b: f64,
    d: f64,
    n: f64,
}

impl TruncDim {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Self {
        let alpha = (lo - mu) / sigma;
        let beta = (hi - mu) / sigma;
        let z = (norm_cdf(beta) - norm_cdf(alpha)).max(f64::MIN_POSITIVE);
        let phi_a = norm_pdf(alpha);
        let phi_b = norm_pdf(beta);
        TruncDim {
            mu,
            sigma,
            lo,
            hi,
            alpha,
            beta,
            z,
            ln_z: z.ln(),
            phi_a,
            phi_b,
            d: phi_a - phi_b,
            n: alpha * phi_a - beta * phi_b,
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - HALF_LN_TWO_PI - self.ln_z
    }

    pub fn entropy(&self) -> f64 {
        0.5 + HALF_LN_TWO_PI + self.sigma.ln() + self.ln_z + self.n / (2.0 * self.z)
    }

    #[cfg(test)]
    pub fn mean(&self) -> f64 {
        self.mu + self.sigma * self.d / self.z
    }

    /// E[(x - c)^2] for an arbitrary fixed point c.
    pub fn second_moment_about(&self, c: f64) -> f64 {
        let dev = c - self.mu;
        self.sigma * self.sigma * (1.0 + self.n / self.z) - 2.0 * dev * self.sigma * self.d / self.z
            + dev * dev
    }

    #[cfg(test)]
    pub fn var(&self) -> f64 {
        let r = self.d / self.z;
        self.sigma * self.sigma * (1.0 + self.n / self.z - r * r)
    }

    /// KL( self || q ) for q truncated to the same interval:
    /// -H(p) + E_p[(x - mu_q)^2] / (2 sigma_q^2) + ln( sigma_q sqrt(2 pi) Z_q ).
    pub fn kl_to(&self, q: &TruncDim) -> f64 {
        -self.entropy()
            + self.second_moment_about(q.mu) / (2.0 * q.sigma * q.sigma)
            + q.sigma.ln()
            + HALF_LN_TWO_PI
            + q.ln_z
    }

    /// Partials of (Z, D, N) with respect to (mu, sigma).
    fn core_partials(&self) -> CorePartials {
        let s = self.sigma;
        let (a, b) = (self.alpha, self.beta);
        let (pa, pb) = (self.phi_a, self.phi_b);
        CorePartials {
            dz_dmu: (pa - pb) / s,
            dz_dsigma: (a * pa - b * pb) / s,
            dd_dmu: (a * pa - b * pb) / s,
            dd_dsigma: (a * a * pa - b * b * pb) / s,
            dn_dmu: (pb * (1.0 - b * b) - pa * (1.0 - a * a)) / s,
            dn_dsigma: (b * pb * (1.0 - b * b) - a * pa * (1.0 - a * a)) / s,
        }
    }

    /// (dH/dmu, dH/dsigma).
    pub fn entropy_grad(&self) -> (f64, f64) {
        let p = self.core_partials();
        let z = self.z;
        let n = self.n;
        let quot = |dn: f64, dz: f64| (dn * z - n * dz) / (2.0 * z * z);
        (
            p.dz_dmu / z + quot(p.dn_dmu, p.dz_dmu),
            1.0 / self.sigma + p.dz_dsigma / z + quot(p.dn_dsigma, p.dz_dsigma),
        )
    }

    /// Gradient of KL( self || q ) with respect to self's (mu, sigma),
    /// holding q fixed.
    pub fn kl_grad(&self, q: &TruncDim) -> (f64, f64) {
        let p = self.core_partials();
        let (z, d, n, s) = (self.z, self.d, self.n, self.sigma);
        let dr_dmu = (p.dd_dmu * z - d * p.dz_dmu) / (z * z);
        let dr_dsigma = (p.dd_dsigma * z - d * p.dz_dsigma) / (z * z);
        let dnz_dmu = (p.dn_dmu * z - n * p.dz_dmu) / (z * z);
        let dnz_dsigma = (p.dn_dsigma * z - n * p.dz_dsigma) / (z * z);
        // S(c) = sigma^2 (1 + N/Z) - 2 (c - mu) sigma D/Z + (c - mu)^2, c = q.mu
        let dev = q.mu - self.mu;
        let r = d / z;
        let ds_dmu = s * s * dnz_dmu + 2.0 * s * r - 2.0 * dev * s * dr_dmu - 2.0 * dev;
        let ds_dsigma =
            2.0 * s * (1.0 + n / z) + s * s * dnz_dsigma - 2.0 * dev * (r + s * dr_dsigma);
        let (dh_dmu, dh_dsigma) = self.entropy_grad();
        let denom = 2.0 * q.sigma * q.sigma;
        (-dh_dmu + ds_dmu / denom, -dh_dsigma + ds_dsigma / denom)
    }

    /// Gradient of ln p(x) with respect to (mu, sigma) at a fixed sample x.
    pub fn log_pdf_grad(&self, x: f64) -> (f64, f64) {
        let zscore = (x - self.mu) / self.sigma;
        let p = self.core_partials();
        (
            zscore / self.sigma - p.dz_dmu / self.z,
            (zscore * zscore - 1.0) / self.sigma - p.dz_dsigma / self.z,
        )
    }

    /// Rejection-sample the parent normal until a draw lands strictly
    /// inside (lo, hi).
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, cap: usize, rng: &mut R) -> Result<f64> {
        let dist =
            rand_distr::Normal::new(self.mu, self.sigma).map_err(|e| Error::InvalidParams {
                dim,
                reason: e.to_string(),
            })?;
        for _ in 0..cap {
            let x = dist.sample(rng);
            if x > self.lo && x < self.hi {
                return Ok(x);
            }
        }
        Err(Error::RejectionCapExceeded { dim, cap })
    }
}

struct CorePartials {
    dz_dmu: f64,
    dz_dsigma: f64,
    dd_dmu: f64,
    dd_dsigma: f64,
    dn_dmu: f64,
    dn_dsigma: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn wide_truncation_matches_untruncated_normal() {
        // With bounds at +-40 sigma the truncation is numerically invisible.
        let t = TruncDim::new(0.3, 0.2, -8.0, 8.0);
        let h_normal = 0.5 + HALF_LN_TWO_PI + 0.2_f64.ln();
        assert!((t.entropy() - h_normal).abs() < 1e-12);
        assert!((t.mean() - 0.3).abs() < 1e-12);
        assert!((t.var() - 0.04).abs() < 1e-12);
        assert!((t.log_pdf(0.3) - (-(0.2_f64.ln()) - HALF_LN_TWO_PI)).abs() < 1e-12);
    }

    #[test]
    fn heavy_truncation_moments_are_sane() {
        // Mean far outside the interval: mass piles near the closer edge.
        let t = TruncDim::new(5.0, 1.0, 0.0, 1.0);
        let m = t.mean();
        assert!(m > 0.5 && m < 1.0, "mean {m}");
        assert!(t.var() > 0.0 && t.var() < 1.0 / 12.0);
        // Entropy can't beat the uniform on the same interval.
        assert!(t.entropy() < 0.0);
    }

    #[test]
    fn kl_zero_at_equality_and_positive_otherwise() {
        let p = TruncDim::new(0.4, 0.7, -1.0, 2.0);
        assert!(p.kl_to(&p).abs() < 1e-12);
        let q = TruncDim::new(0.1, 0.4, -1.0, 2.0);
        assert!(p.kl_to(&q) > 1e-3);
        assert!(q.kl_to(&p) > 1e-3);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let cases = [
            (0.5, 0.5, 0.0, 1.0),
            (0.0, 2.0, 0.0, 1.0),
            (1.2, 0.15, -1.0, 1.5),
            (-0.4, 0.9, -1.0, 1.5),
        ];
        let h = 1e-6;
        for (mu, sigma, lo, hi) in cases {
            let t = TruncDim::new(mu, sigma, lo, hi);
            let (dh_dmu, dh_dsigma) = t.entropy_grad();
            let f_mu = fd(|m| TruncDim::new(m, sigma, lo, hi).entropy(), mu, h);
            let f_sigma = fd(|s| TruncDim::new(mu, s, lo, hi).entropy(), sigma, h);
            assert!((dh_dmu - f_mu).abs() < 1e-6, "dH/dmu {dh_dmu} vs {f_mu}");
            assert!((dh_dsigma - f_sigma).abs() < 1e-6);

            let q = TruncDim::new(0.2, 0.8, lo, hi);
            let (dk_dmu, dk_dsigma) = t.kl_grad(&q);
            let f_mu = fd(|m| TruncDim::new(m, sigma, lo, hi).kl_to(&q), mu, h);
            let f_sigma = fd(|s| TruncDim::new(mu, s, lo, hi).kl_to(&q), sigma, h);
            assert!((dk_dmu - f_mu).abs() < 1e-5, "dKL/dmu {dk_dmu} vs {f_mu}");
            assert!((dk_dsigma - f_sigma).abs() < 1e-5);

            let x = lo + 0.37 * (hi - lo);
            let (dl_dmu, dl_dsigma) = t.log_pdf_grad(x);
            let f_mu = fd(|m| TruncDim::new(m, sigma, lo, hi).log_pdf(x), mu, h);
            let f_sigma = fd(|s| TruncDim::new(mu, s, lo, hi).log_pdf(x), sigma, h);
            assert!((dl_dmu - f_mu).abs() < 1e-5);
            assert!((dl_dsigma - f_sigma).abs() < 1e-5);
        }
    }

    #[test]
    fn sampling_respects_bounds() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t = TruncDim::new(0.9, 0.8, 0.0, 1.0);
        let mut acc = 0.0;
        let n = 4000;
        for _ in 0..n {
            let x = t.sample(0, 1000, &mut rng).unwrap();
            assert!(x > 0.0 && x < 1.0);
            acc += x;
        }
        assert!((acc / n as f64 - t.mean()).abs() < 0.02);
    }
}
