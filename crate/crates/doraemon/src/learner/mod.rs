//! Policies and trainers. Schedulers only ever see the [`Trainer`] trait,
//! so the learning algorithm can be swapped (or replayed from a recording)
//! without touching distribution updates.

mod cem;
mod policy;

use std::collections::VecDeque;

use rand::RngCore;

pub use cem::{CemConfig, CemTrainer};
pub use policy::{plane_controller, HistoryPolicy};

use crate::distributions::DistributionSpec;
use crate::environments::{skill_rollout, SkillRegionConfig};
use crate::error::{Error, Result};
use crate::estimator::EpisodeRecord;

/// One training epoch: sample `k` dynamics vectors, run one episode at
/// each, learn from the results. Returned records carry the exact sampled
/// dynamics in draw order.
pub trait Trainer {
    /// Epoch with the dynamics drawn by an arbitrary sampler, called once
    /// per episode in episode order. Schedulers whose sampling rule is not
    /// a plain density (boundary-pinned draws) come through here.
    fn collect_and_train_sampled(
        &mut self,
        sample_xi: &mut dyn FnMut(&mut dyn RngCore) -> Result<Vec<f64>>,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)>;

    /// Epoch with the dynamics drawn from `phi`.
    fn collect_and_train(
        &mut self,
        phi: &DistributionSpec,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
        self.collect_and_train_sampled(&mut |r| phi.sample_one(r), k, rng)
    }
}

/// Free-function form of [`Trainer::collect_and_train`].
pub fn train_epoch(
    trainer: &mut dyn Trainer,
    phi: &DistributionSpec,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
    trainer.collect_and_train(phi, k, rng)
}

/// Policy-free trainer for the synthetic skill environment: an episode is
/// a box-membership test and "training" is the box growth schedule ticking
/// forward with the cumulative episode count.
pub struct SkillTrainer {
    cfg: SkillRegionConfig,
    episodes_seen: usize,
    placeholder: HistoryPolicy,
}

impl SkillTrainer {
    pub fn new(cfg: SkillRegionConfig) -> Self {
        Self {
            cfg,
            episodes_seen: 0,
            placeholder: HistoryPolicy::zeros(0, 1, Vec::new(), 1.0),
        }
    }

    pub fn episodes_seen(&self) -> usize {
        self.episodes_seen
    }
}

impl Trainer for SkillTrainer {
    fn collect_and_train_sampled(
        &mut self,
        sample_xi: &mut dyn FnMut(&mut dyn RngCore) -> Result<Vec<f64>>,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
        let mut records = Vec::with_capacity(k);
        for _ in 0..k {
            let xi = sample_xi(rng)?;
            let summary = skill_rollout(&self.cfg, &xi, self.episodes_seen)?;
            self.episodes_seen += 1;
            records.push(EpisodeRecord {
                xi,
                success: summary.total_return > 0.5,
                return_value: summary.total_return,
                steps: summary.steps,
            });
        }
        Ok((records, self.placeholder.clone()))
    }

    fn collect_and_train(
        &mut self,
        phi: &DistributionSpec,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
        self.cfg.validate(phi.support())?;
        self.collect_and_train_sampled(&mut |r| phi.sample_one(r), k, rng)
    }
}

/// Feeds back a recorded episode stream instead of running any learning,
/// for scheduler isolation checks: a scheduler replayed on the recording
/// must reproduce the exact distribution trajectory of the original run.
pub struct ReplayTrainer {
    stream: VecDeque<EpisodeRecord>,
    placeholder: HistoryPolicy,
}

impl ReplayTrainer {
    pub fn new(records: Vec<EpisodeRecord>) -> Self {
        Self {
            stream: records.into(),
            placeholder: HistoryPolicy::zeros(0, 1, Vec::new(), 1.0),
        }
    }

    pub fn remaining(&self) -> usize {
        self.stream.len()
    }
}

impl Trainer for ReplayTrainer {
    fn collect_and_train_sampled(
        &mut self,
        _sample_xi: &mut dyn FnMut(&mut dyn RngCore) -> Result<Vec<f64>>,
        k: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
        if self.stream.len() < k {
            return Err(Error::InvalidConfig(format!(
                "replay stream exhausted: {} episodes left, {k} requested",
                self.stream.len()
            )));
        }
        let records: Vec<EpisodeRecord> = self.stream.drain(..k).collect();
        Ok((records, self.placeholder.clone()))
    }
}
