//! Cross-entropy-method search over policy weights.
//!
//! One call is one generation: the population is drawn around the current
//! mean, the epoch's episodes are dealt round-robin to members, and the
//! mean moves to the elites. Fitness is the mean return over a member's
//! own episodes, so it is noisy on purpose; the elite average smooths it
//! out over generations.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{plane_rollout, InclinedPlaneConfig};
use crate::error::{Error, Result};
use crate::estimator::EpisodeRecord;
use crate::learner::{plane_controller, HistoryPolicy, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CemConfig {
    pub population: usize,
    pub elite_frac: f64,
    /// Initial per-parameter sampling std.
    pub init_std: f64,
    /// Extra exploration noise added onto the elite std, annealed each
    /// epoch down to the floor.
    pub noise_init: f64,
    pub noise_decay: f64,
    pub noise_floor: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            population: 32,
            elite_frac: 0.25,
            init_std: 1.0,
            noise_init: 0.5,
            noise_decay: 0.97,
            noise_floor: 0.02,
        }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::InvalidConfig("population must be positive".into()));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(Error::InvalidConfig("elite_frac must be in (0, 1]".into()));
        }
        if !(self.init_std > 0.0) {
            return Err(Error::InvalidConfig("init_std must be positive".into()));
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(Error::InvalidConfig("noise_decay must be in (0, 1]".into()));
        }
        if self.noise_init < 0.0 || self.noise_floor < 0.0 {
            return Err(Error::InvalidConfig("noise levels must be nonnegative".into()));
        }
        Ok(())
    }

    fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_frac).round() as usize).max(1)
    }
}

/// Episodic policy-search trainer for the inclined plane.
pub struct CemTrainer {
    env: InclinedPlaneConfig,
    cem: CemConfig,
    policy: HistoryPolicy,
    std: Vec<f64>,
    epoch: usize,
}

impl CemTrainer {
    pub fn new(env: InclinedPlaneConfig, cem: CemConfig, policy: HistoryPolicy) -> Result<Self> {
        env.validate()?;
        cem.validate()?;
        policy.validate()?;
        let std = vec![cem.init_std; policy.weights().len()];
        Ok(Self { env, cem, policy, std, epoch: 0 })
    }

    /// Current mean-weight policy.
    pub fn policy(&self) -> &HistoryPolicy {
        &self.policy
    }

    pub fn env(&self) -> &InclinedPlaneConfig {
        &self.env
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }
}

impl Trainer for CemTrainer {
    fn collect_and_train_sampled(
        &mut self,
        sample_xi: &mut dyn FnMut(&mut dyn RngCore) -> Result<Vec<f64>>,
        k: usize,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<EpisodeRecord>, HistoryPolicy)> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let pop = self.cem.population;
        let n_params = self.policy.weights().len();

        // All randomness is drawn up front in a fixed order so episodes
        // can run in parallel without perturbing the caller's stream.
        let mut xis: Vec<Vec<f64>> = Vec::with_capacity(k);
        for _ in 0..k {
            let xi = sample_xi(rng)?;
            if xi.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: xi.len() });
            }
            xis.push(xi);
        }
        let episode_seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
        let members: Vec<HistoryPolicy> = (0..pop)
            .map(|_| {
                let weights: Vec<f64> = (0..n_params)
                    .map(|p| {
                        let z: f64 = rng.sample(StandardNormal);
                        self.policy.weights()[p] + self.std[p] * z
                    })
                    .collect();
                let mut m = self.policy.clone();
                m.set_weights(weights).expect("same parameter count");
                m
            })
            .collect();

        let episodes: Vec<(EpisodeRecord, usize)> = (0..k)
            .into_par_iter()
            .map(|i| {
                let member = i % pop;
                let omega = xis[i][0];
                let mut ep_rng = ChaCha8Rng::seed_from_u64(episode_seeds[i]);
                let out = plane_rollout(
                    &self.env,
                    plane_controller(&members[member], &self.env),
                    omega,
                    &mut ep_rng,
                );
                let record = EpisodeRecord {
                    xi: xis[i].clone(),
                    return_value: out.summary.total_return,
                    success: out.success,
                    steps: out.summary.steps,
                };
                (record, member)
            })
            .collect();

        let mut sums = vec![0.0; pop];
        let mut counts = vec![0usize; pop];
        for (record, member) in &episodes {
            sums[*member] += record.return_value;
            counts[*member] += 1;
        }
        let fitness: Vec<f64> = (0..pop)
            .map(|m| {
                if counts[m] > 0 {
                    sums[m] / counts[m] as f64
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();

        // ranked by fitness, ties and the ordering itself broken by index
        let mut order: Vec<usize> = (0..pop).collect();
        order.sort_by(|&a, &b| {
            fitness[b].partial_cmp(&fitness[a]).unwrap().then(a.cmp(&b))
        });
        let evaluated = counts.iter().filter(|&&c| c > 0).count();
        let n_elite = self.cem.elite_count().min(evaluated.max(1));
        let elites: Vec<usize> = order[..n_elite].to_vec();

        let mut mean = vec![0.0; n_params];
        for &e in &elites {
            for (p, slot) in mean.iter_mut().enumerate() {
                *slot += members[e].weights()[p];
            }
        }
        for slot in mean.iter_mut() {
            *slot /= n_elite as f64;
        }
        let extra = (self.cem.noise_init * self.cem.noise_decay.powi(self.epoch as i32))
            .max(self.cem.noise_floor);
        for p in 0..n_params {
            let var = elites
                .iter()
                .map(|&e| {
                    let d = members[e].weights()[p] - mean[p];
                    d * d
                })
                .sum::<f64>()
                / n_elite as f64;
            self.std[p] = var.sqrt() + extra;
        }
        self.policy.set_weights(mean)?;
        self.epoch += 1;

        let records = episodes.into_iter().map(|(r, _)| r).collect();
        Ok((records, self.policy.clone()))
    }
}
