//! Uniform-bounds baseline that grows or backtracks one bound at a time
//! from returns measured with that bound pinned.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::{BoundedSupport, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::estimator::EpisodeRecord;

/// Relative half width of the starting box around the benchmark midpoint.
/// Shrink decisions also stop at this width so the box never collapses to
/// a point (log width stays finite).
pub const AUTODR_INIT_HALF_WIDTH_FRAC: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Low,
    High,
}

/// Marks an episode whose dynamics vector had one coordinate pinned to a
/// current bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryTag {
    pub dim: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoDrConfig {
    /// Mean boundary return at or above this widens the bound.
    pub t_high: f64,
    /// Mean boundary return below this backtracks the bound.
    pub t_low: f64,
    /// Bound increment per decision, as a fraction of the benchmark range.
    #[serde(default = "default_delta_frac")]
    pub delta_frac: f64,
    /// Probability that an episode is pinned to some bound.
    #[serde(default = "default_boundary_prob")]
    pub boundary_prob: f64,
    /// Returns collected at one boundary before a decision.
    #[serde(default = "default_buffer_size")]
    pub buffer_size: usize,
}

fn default_delta_frac() -> f64 {
    0.02
}
fn default_boundary_prob() -> f64 {
    0.5
}
fn default_buffer_size() -> usize {
    10
}

impl AutoDrConfig {
    /// Thresholds from a single return bar: widen at the bar, backtrack
    /// below half of it.
    pub fn from_return_threshold(j_lb: f64) -> Self {
        Self::new(j_lb, 0.5 * j_lb)
    }

    pub fn new(t_high: f64, t_low: f64) -> Self {
        Self {
            t_high,
            t_low,
            delta_frac: default_delta_frac(),
            boundary_prob: default_boundary_prob(),
            buffer_size: default_buffer_size(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_low <= self.t_high) {
            return Err(Error::InvalidConfig(format!(
                "t_low {} must not exceed t_high {}",
                self.t_low, self.t_high
            )));
        }
        if !(self.delta_frac > 0.0) {
            return Err(Error::InvalidConfig(
                "delta_frac must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.boundary_prob) {
            return Err(Error::InvalidConfig(format!(
                "boundary_prob {} outside [0, 1]",
                self.boundary_prob
            )));
        }
        if self.buffer_size == 0 {
            return Err(Error::InvalidConfig(
                "buffer_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoDrDecision {
    Widened,
    Shrunk,
    Held,
}

/// Current uniform box and the per-boundary return buffers.
///
/// Buffer `2 d` belongs to the low bound of dimension `d` and buffer
/// `2 d + 1` to the high bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoDrState {
    benchmark: BoundedSupport,
    cfg: AutoDrConfig,
    lo_cur: Vec<f64>,
    hi_cur: Vec<f64>,
    delta: Vec<f64>,
    buffers: Vec<Vec<f64>>,
}

impl AutoDrState {
    /// Starts as a near-point box at the benchmark midpoint.
    pub fn new(benchmark: BoundedSupport, cfg: AutoDrConfig) -> Result<Self> {
        cfg.validate()?;
        let dims = benchmark.dims();
        let mid = benchmark.midpoint();
        let mut lo_cur = Vec::with_capacity(dims);
        let mut hi_cur = Vec::with_capacity(dims);
        let mut delta = Vec::with_capacity(dims);
        for d in 0..dims {
            let w = benchmark.width(d);
            lo_cur.push(mid[d] - AUTODR_INIT_HALF_WIDTH_FRAC * w);
            hi_cur.push(mid[d] + AUTODR_INIT_HALF_WIDTH_FRAC * w);
            delta.push(cfg.delta_frac * w);
        }
        Ok(Self {
            benchmark,
            cfg,
            lo_cur,
            hi_cur,
            delta,
            buffers: vec![Vec::new(); 2 * dims],
        })
    }

    pub fn dims(&self) -> usize {
        self.benchmark.dims()
    }

    pub fn benchmark(&self) -> &BoundedSupport {
        &self.benchmark
    }

    pub fn config(&self) -> &AutoDrConfig {
        &self.cfg
    }

    pub fn lo_cur(&self) -> &[f64] {
        &self.lo_cur
    }

    pub fn hi_cur(&self) -> &[f64] {
        &self.hi_cur
    }

    /// Entropy of the current uniform box, Σ ln(hi − lo).
    pub fn entropy(&self) -> f64 {
        (0..self.dims())
            .map(|d| (self.hi_cur[d] - self.lo_cur[d]).ln())
            .sum()
    }

    /// The current box as a sampling distribution (uniform marginals).
    pub fn uniform_spec(&self) -> Result<DistributionSpec> {
        let support = BoundedSupport::new(self.lo_cur.clone(), self.hi_cur.clone())?;
        Ok(DistributionSpec::max_entropy(support, Family::IndependentBeta))
    }

    fn min_width(&self, dim: usize) -> f64 {
        2.0 * AUTODR_INIT_HALF_WIDTH_FRAC * self.benchmark.width(dim)
    }

    fn bound_value(&self, tag: &BoundaryTag) -> f64 {
        match tag.side {
            Side::Low => self.lo_cur[tag.dim],
            Side::High => self.hi_cur[tag.dim],
        }
    }
}

/// Draw one dynamics vector. With probability `boundary_prob` one uniformly
/// chosen dimension is pinned to one of its current bounds (uniformly low
/// or high) and the draw is tagged; all remaining coordinates are uniform
/// within the current box.
pub fn autodr_sample(
    state: &AutoDrState,
    rng: &mut dyn RngCore,
) -> (Vec<f64>, Option<BoundaryTag>) {
    let dims = state.dims();
    let pinned = rng.gen::<f64>() < state.cfg.boundary_prob;
    let tag = if pinned {
        let dim = rng.gen_range(0..dims);
        let side = if rng.gen_range(0..2u8) == 0 {
            Side::Low
        } else {
            Side::High
        };
        Some(BoundaryTag { dim, side })
    } else {
        None
    };
    let mut xi = Vec::with_capacity(dims);
    for d in 0..dims {
        match tag {
            Some(t) if t.dim == d => xi.push(state.bound_value(&t)),
            _ => {
                let u: f64 = rng.gen();
                xi.push(state.lo_cur[d] + u * (state.hi_cur[d] - state.lo_cur[d]));
            }
        }
    }
    (xi, tag)
}

/// Feed one boundary-pinned episode into its buffer; once the buffer is
/// full, decide from the mean return whether that bound widens outward
/// (clamped to the benchmark box), backtracks inward (stopping at the
/// minimum width), or holds, and clear the buffer either way.
pub fn autodr_update(
    state: &mut AutoDrState,
    record: &EpisodeRecord,
    tag: Option<&BoundaryTag>,
) -> Result<Option<AutoDrDecision>> {
    let tag = tag.ok_or(Error::UntaggedRecord)?;
    if tag.dim >= state.dims() {
        return Err(Error::DimensionMismatch {
            expected: state.dims(),
            got: tag.dim + 1,
        });
    }
    let slot = 2 * tag.dim + matches!(tag.side, Side::High) as usize;
    state.buffers[slot].push(record.return_value);
    if state.buffers[slot].len() < state.cfg.buffer_size {
        return Ok(None);
    }
    let mean = state.buffers[slot].iter().sum::<f64>() / state.buffers[slot].len() as f64;
    state.buffers[slot].clear();

    let d = tag.dim;
    let delta = state.delta[d];
    let decision = if mean >= state.cfg.t_high {
        match tag.side {
            Side::Low => {
                state.lo_cur[d] = (state.lo_cur[d] - delta).max(state.benchmark.lo()[d]);
            }
            Side::High => {
                state.hi_cur[d] = (state.hi_cur[d] + delta).min(state.benchmark.hi()[d]);
            }
        }
        AutoDrDecision::Widened
    } else if mean < state.cfg.t_low {
        // inward only, and stopping at the width floor
        let floor = state.min_width(d);
        match tag.side {
            Side::Low => {
                let lo = state.lo_cur[d];
                state.lo_cur[d] = (lo + delta).min(state.hi_cur[d] - floor).max(lo);
            }
            Side::High => {
                let hi = state.hi_cur[d];
                state.hi_cur[d] = (hi - delta).max(state.lo_cur[d] + floor).min(hi);
            }
        }
        AutoDrDecision::Shrunk
    } else {
        AutoDrDecision::Held
    };
    Ok(Some(decision))
}
