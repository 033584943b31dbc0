//! Frictionless inclined plane balanced by a bounded counter force.
//!
//! The single latent parameter is the inclination angle. Gravity pulls the
//! cart downhill with force `f_g * sin(omega)` (unit mass) and the policy
//! applies a clamped counter force, so whether balance is possible at all
//! is decided by `a_max / f_g` alone. That makes the feasible set analytic
//! and the environment a sharp testbed for curriculum schedulers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::TrajectorySummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InclinedPlaneConfig {
    /// Gravity force magnitude (unit mass).
    pub f_g: f64,
    /// Counter-force bound; actions are clamped to `[-a_max, a_max]`.
    pub a_max: f64,
    /// Integration step, seconds.
    pub dt: f64,
    /// Episode length in steps.
    pub horizon: usize,
    /// Half-width of the balanced band around the plane center.
    pub band: f64,
    /// Cumulative in-band steps required for success.
    pub hold_steps: usize,
    /// Plane half-length; the episode ends early when the cart leaves.
    pub half_length: f64,
    /// Initial position is uniform on `[-start_spread, start_spread]`.
    pub start_spread: f64,
}

impl Default for InclinedPlaneConfig {
    fn default() -> Self {
        Self {
            f_g: 9.81,
            a_max: 9.81 / std::f64::consts::SQRT_2,
            dt: 0.05,
            horizon: 200,
            band: 0.1,
            hold_steps: 25,
            half_length: 1.0,
            start_spread: 0.05,
        }
    }
}

impl InclinedPlaneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_max > 0.0 && self.a_max <= self.f_g) {
            return Err(Error::InfeasibleActionBound {
                a_max: self.a_max,
                f_g: self.f_g,
            });
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.hold_steps > self.horizon {
            return Err(Error::InvalidConfig(
                "hold_steps must not exceed horizon".into(),
            ));
        }
        if !(self.band > 0.0 && self.band <= self.half_length) {
            return Err(Error::InvalidConfig(
                "band must be in (0, half_length]".into(),
            ));
        }
        if !(self.start_spread >= 0.0 && self.start_spread <= self.half_length) {
            return Err(Error::InvalidConfig(
                "start_spread must be in [0, half_length]".into(),
            ));
        }
        Ok(())
    }
}

/// Cart state along the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneState {
    pub x: f64,
    pub v: f64,
    /// Steps taken so far.
    pub t: usize,
}

/// Start of an episode: near the center, at rest.
pub fn initial_state<R: Rng + ?Sized>(cfg: &InclinedPlaneConfig, rng: &mut R) -> PlaneState {
    let x = if cfg.start_spread > 0.0 {
        rng.gen_range(-cfg.start_spread..=cfg.start_spread)
    } else {
        0.0
    };
    PlaneState { x, v: 0.0, t: 0 }
}

/// One semi-implicit Euler step. The action is clamped to the bound, so
/// this never fails.
pub fn plane_step(
    cfg: &InclinedPlaneConfig,
    state: &PlaneState,
    action: f64,
    omega: f64,
) -> PlaneState {
    let a = action.clamp(-cfg.a_max, cfg.a_max);
    let v = state.v + cfg.dt * (a - cfg.f_g * omega.sin());
    PlaneState {
        x: state.x + cfg.dt * v,
        v,
        t: state.t + 1,
    }
}

/// Largest inclination at which gravity can still be cancelled:
/// `asin(a_max / f_g)`.
pub fn feasible_half_width(cfg: &InclinedPlaneConfig) -> Result<f64> {
    if !(cfg.a_max > 0.0 && cfg.a_max <= cfg.f_g) {
        return Err(Error::InfeasibleActionBound {
            a_max: cfg.a_max,
            f_g: cfg.f_g,
        });
    }
    Ok((cfg.a_max / cfg.f_g).asin())
}

/// Slack around the feasibility boundary inside which the discretized
/// dynamics may go either way; grid checks only constrain outcomes beyond
/// it.
pub fn feasibility_margin(cfg: &InclinedPlaneConfig) -> f64 {
    2.0 * cfg.f_g * cfg.dt * cfg.dt
}

/// Everything an episode produces. `summary` carries the metrics the
/// success predicate reads; the flat fields are for direct callers.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRollout {
    pub summary: TrajectorySummary,
    pub in_band_steps: usize,
    pub success: bool,
}

/// Roll one episode. Per-step reward is 1 inside the band and
/// `-|x| / half_length` outside; in-band steps accumulate and do not need
/// to be consecutive.
pub fn plane_rollout<P, R>(
    cfg: &InclinedPlaneConfig,
    mut policy: P,
    omega: f64,
    rng: &mut R,
) -> PlaneRollout
where
    P: FnMut(&PlaneState) -> f64,
    R: Rng + ?Sized,
{
    let mut state = initial_state(cfg, rng);
    let mut total_return = 0.0;
    let mut in_band = 0usize;
    for _ in 0..cfg.horizon {
        let action = policy(&state);
        state = plane_step(cfg, &state, action, omega);
        if state.x.abs() <= cfg.band {
            in_band += 1;
            total_return += 1.0;
        } else {
            total_return -= state.x.abs() / cfg.half_length;
        }
        if state.x.abs() > cfg.half_length {
            break;
        }
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("hold_steps".to_string(), in_band as f64);
    metrics.insert("hold_required".to_string(), cfg.hold_steps as f64);
    PlaneRollout {
        summary: TrajectorySummary {
            total_return,
            steps: state.t,
            metrics,
        },
        in_band_steps: in_band,
        success: in_band >= cfg.hold_steps,
    }
}

const PD_KP: f64 = 4.0;
const PD_KD: f64 = 4.0;

/// Reference controller for oracle checks: gravity feedforward plus a
/// proportional-derivative pull toward the center, clamped like any other
/// action. It knows the true inclination, which no learned policy does.
pub fn scripted_pd_policy(
    cfg: &InclinedPlaneConfig,
    omega: f64,
) -> impl FnMut(&PlaneState) -> f64 {
    let feedforward = cfg.f_g * omega.sin();
    let bound = cfg.a_max;
    move |s: &PlaneState| (feedforward - PD_KP * s.x - PD_KD * s.v).clamp(-bound, bound)
}
