//! Success-probability estimation from recycled training episodes.
//!
//! The importance-sampling estimate reweights each recorded episode by the
//! density ratio of a candidate distribution to the one the episode was
//! actually drawn from. It is deliberately left unnormalized, so values
//! above one are possible and meaningful to the optimizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};

/// One completed training episode: where in dynamics space it ran and how
/// it went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub xi: Vec<f64>,
    pub return_value: f64,
    pub success: bool,
    pub steps: usize,
}

/// How a trajectory is declared successful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessIndicator {
    /// Success iff the episode return reaches the bound (inclusive).
    ReturnLowerBound(f64),
    /// Delegate to a named environment predicate evaluated on the
    /// trajectory summary's metrics.
    EnvironmentPredicate(String),
}

/// What an environment reports about a finished trajectory. `metrics`
/// carries environment-specific success fields by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub total_return: f64,
    pub steps: usize,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

impl TrajectorySummary {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

/// Apply a success indicator to a trajectory summary.
pub fn evaluate_sigma(indicator: &SuccessIndicator, summary: &TrajectorySummary) -> Result<bool> {
    match indicator {
        SuccessIndicator::ReturnLowerBound(j_lb) => Ok(summary.total_return >= *j_lb),
        SuccessIndicator::EnvironmentPredicate(id) => match id.as_str() {
            // held the cart inside the band long enough
            "plane_balance" => {
                let held = required_metric(summary, "hold_steps")?;
                let needed = required_metric(summary, "hold_required")?;
                Ok(held >= needed)
            }
            // membership flag computed by the synthetic skill-region env
            "skill_region" => Ok(required_metric(summary, "in_region")? > 0.5),
            _ => Err(Error::UnknownPredicate { id: id.clone() }),
        },
    }
}

fn required_metric(summary: &TrajectorySummary, key: &str) -> Result<f64> {
    summary
        .metric(key)
        .ok_or_else(|| Error::UnknownPredicate { id: key.to_string() })
}

/// Importance-sampling estimate of the success rate the policy would have
/// under `phi_new`, from episodes drawn under `phi_old`:
/// (1/K) Σ_k w_k 1{success_k}, w_k = p_new(ξ_k)/p_old(ξ_k).
///
/// Unnormalized, so the result may exceed 1. `clip` optionally caps each
/// weight for variance control.
pub fn is_success_rate(
    records: &[EpisodeRecord],
    phi_old: &DistributionSpec,
    phi_new: &DistributionSpec,
    clip: Option<f64>,
) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if phi_old.family() != phi_new.family() {
        return Err(Error::FamilyMismatch);
    }
    if phi_old.support() != phi_new.support() {
        return Err(Error::SupportMismatch);
    }
    let mut acc = 0.0;
    for rec in records {
        if rec.success {
            let mut w = (phi_new.log_pdf(&rec.xi)? - phi_old.log_pdf(&rec.xi)?).exp();
            if let Some(c) = clip {
                w = w.min(c);
            }
            acc += w;
        } else {
            // failures contribute zero regardless of weight, but a record
            // outside the support is still a caller bug worth surfacing
            phi_old.log_pdf(&rec.xi)?;
        }
    }
    Ok(acc / records.len() as f64)
}

/// Plain Monte-Carlo success rate: the fraction of successful records.
pub fn mc_success_rate(records: &[EpisodeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    Ok(records.iter().filter(|r| r.success).count() as f64 / records.len() as f64)
}
