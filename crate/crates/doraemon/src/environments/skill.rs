//! Synthetic skill-region environment.
//!
//! There is no policy and no dynamics. An episode run at dynamics `xi`
//! succeeds exactly when every coordinate lies inside a box whose size
//! grows with the cumulative training-episode count, emulating an agent
//! whose competence region widens over training. Success probabilities
//! under any sampling distribution are analytic, which makes scheduler
//! behavior checkable to the digit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::distributions::{BoundedSupport, DistributionSpec, Params};
use crate::error::{Error, Result};
use crate::estimator::TrajectorySummary;
use crate::special::norm_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRegionConfig {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    /// Box-size multiplier at episode zero, in (0, 1].
    #[serde(default = "full_multiplier")]
    pub initial_multiplier: f64,
    /// Cumulative episode count at which the multiplier saturates at 1.
    #[serde(default)]
    pub episodes_to_full: usize,
}

fn full_multiplier() -> f64 {
    1.0
}

impl SkillRegionConfig {
    /// A box fixed at full size from the start.
    pub fn fixed(center: Vec<f64>, half_width: Vec<f64>) -> Self {
        Self {
            center,
            half_width,
            initial_multiplier: 1.0,
            episodes_to_full: 0,
        }
    }

    pub fn validate(&self, support: &BoundedSupport) -> Result<()> {
        if self.center.len() != self.half_width.len() || self.center.len() != support.dims() {
            return Err(Error::DimensionMismatch {
                expected: support.dims(),
                got: self.center.len(),
            });
        }
        if !(self.initial_multiplier > 0.0 && self.initial_multiplier <= 1.0) {
            return Err(Error::InvalidConfig(
                "initial_multiplier must be in (0, 1]".into(),
            ));
        }
        for d in 0..self.center.len() {
            if !(self.half_width[d] > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "half_width[{d}] must be positive"
                )));
            }
            if self.center[d] - self.half_width[d] < support.lo()[d]
                || self.center[d] + self.half_width[d] > support.hi()[d]
            {
                return Err(Error::InvalidConfig(format!(
                    "skill box exceeds the support in dimension {d}"
                )));
            }
        }
        Ok(())
    }

    /// Box-size multiplier after `episodes` cumulative training episodes:
    /// linear growth from the initial value, capped at 1.
    pub fn multiplier(&self, episodes: usize) -> f64 {
        if self.episodes_to_full == 0 {
            return 1.0;
        }
        let m0 = self.initial_multiplier;
        (m0 + (1.0 - m0) * episodes as f64 / self.episodes_to_full as f64).min(1.0)
    }
}

/// Deterministic, policy-free episode: success iff `xi` lies inside the
/// current box (boundaries included).
pub fn skill_rollout(
    cfg: &SkillRegionConfig,
    xi: &[f64],
    training_episode_index: usize,
) -> Result<TrajectorySummary> {
    if xi.len() != cfg.center.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.center.len(),
            got: xi.len(),
        });
    }
    let m = cfg.multiplier(training_episode_index);
    let inside = xi
        .iter()
        .zip(&cfg.center)
        .zip(&cfg.half_width)
        .all(|((x, c), h)| (x - c).abs() <= m * h);
    let mut metrics = BTreeMap::new();
    metrics.insert("in_region".to_string(), if inside { 1.0 } else { 0.0 });
    Ok(TrajectorySummary {
        total_return: if inside { 1.0 } else { 0.0 },
        steps: 1,
        metrics,
    })
}

/// Exact success probability when `xi` is drawn from `spec`: the product
/// of the per-dimension masses the marginals put on the box.
pub fn skill_success_probability(
    cfg: &SkillRegionConfig,
    spec: &DistributionSpec,
    training_episode_index: usize,
) -> Result<f64> {
    if spec.dims() != cfg.center.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.center.len(),
            got: spec.dims(),
        });
    }
    let m = cfg.multiplier(training_episode_index);
    let sup = spec.support();
    let mut p = 1.0;
    for d in 0..spec.dims() {
        let lo = (cfg.center[d] - m * cfg.half_width[d]).max(sup.lo()[d]);
        let hi = (cfg.center[d] + m * cfg.half_width[d]).min(sup.hi()[d]);
        if hi <= lo {
            return Ok(0.0);
        }
        p *= match spec.params() {
            Params::Beta { a, b } => {
                let u_lo = ((lo - sup.lo()[d]) / sup.width(d)).clamp(0.0, 1.0);
                let u_hi = ((hi - sup.lo()[d]) / sup.width(d)).clamp(0.0, 1.0);
                beta_reg(a[d], b[d], u_hi) - beta_reg(a[d], b[d], u_lo)
            }
            Params::TruncatedGaussian { mean, std } => {
                let cdf = |x: f64| norm_cdf((x - mean[d]) / std[d]);
                (cdf(hi) - cdf(lo)) / (cdf(sup.hi()[d]) - cdf(sup.lo()[d]))
            }
        };
    }
    Ok(p)
}
