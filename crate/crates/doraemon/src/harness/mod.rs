//! Experiment driver: schedulers, trainers, and evaluation wired together
//! behind one config, with seeded reproducible logging and one-axis
//! sweeps.
//!
//! Seeds (and sweep points) run as independent parallel jobs. Each job is
//! sequential inside: draw dynamics through the scheduler, train, relabel
//! successes per the configured indicator, update the scheduler, log.
//! Training consumes exactly `k * m` episodes; benchmark evaluations are
//! tallied separately and never feed training.

pub mod config;
pub mod eval;
pub mod logs;

pub use config::{
    initial_spec, EnvironmentConfig, EvalConfig, ExperimentConfig, LearnerConfig,
    SchedulerConfig, SchedulerKindConfig, ENV_OUTPUT_DIR, ENV_SEEDS,
};
pub use eval::{
    evaluate_grid, global_success_rate, EpisodeFn, GlobalEval, GridEval, GridQuantity,
    GridSpec,
};
pub use logs::{
    InitialRow, RunLog, RunLogWriter, RunSummary, SnapshotFile, EPISODES_FILE,
    ITERATIONS_FILE, SNAPSHOT_FILE, SUMMARY_FILE,
};

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curriculum::{BestSnapshot, BoundaryTag, IterationRow, Scheduler};
use crate::distributions::Family;
use crate::environments::{plane_rollout, skill_rollout};
use crate::error::{Error, Result};
use crate::estimator::{evaluate_sigma, EpisodeRecord, SuccessIndicator};
use crate::learner::{plane_controller, HistoryPolicy, Trainer};

/// One seed's outcome, with its logs already on disk under `dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub dir: PathBuf,
    pub rows: Vec<IterationRow>,
    pub summary: RunSummary,
}

/// One episode at the given dynamics under the given policy, returning
/// the total return and the configured success verdict.
pub fn episode_runner<'a>(
    environment: &'a EnvironmentConfig,
    indicator: &'a SuccessIndicator,
    policy: &'a HistoryPolicy,
    training_episodes: usize,
) -> Box<EpisodeFn<'a>> {
    match environment {
        EnvironmentConfig::InclinedPlane { env, .. } => Box::new(move |xi, rng| {
            if xi.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: xi.len() });
            }
            let out = plane_rollout(env, plane_controller(policy, env), xi[0], rng);
            let ok = evaluate_sigma(indicator, &out.summary)?;
            Ok((out.summary.total_return, ok))
        }),
        EnvironmentConfig::SkillRegion { region, .. } => Box::new(move |xi, _rng| {
            let summary = skill_rollout(region, xi, training_episodes)?;
            let ok = evaluate_sigma(indicator, &summary)?;
            Ok((summary.total_return, ok))
        }),
    }
}

/// Episode runner for a saved snapshot, frozen at its training state.
pub fn snapshot_runner(snapshot: &SnapshotFile) -> Box<EpisodeFn<'_>> {
    episode_runner(
        &snapshot.environment,
        &snapshot.indicator,
        &snapshot.policy,
        snapshot.training_episodes,
    )
}

/// Rewrite success flags to the configured indicator. Return bounds are
/// recomputable from any record; the environment's own predicate is what
/// the trainer already wrote, and any other predicate has no data here.
pub fn relabel_success(
    records: &mut [EpisodeRecord],
    indicator: &SuccessIndicator,
    native_predicate: &str,
) -> Result<()> {
    match indicator {
        SuccessIndicator::ReturnLowerBound(j_lb) => {
            for record in records {
                record.success = record.return_value >= *j_lb;
            }
            Ok(())
        }
        SuccessIndicator::EnvironmentPredicate(id) if id == native_predicate => Ok(()),
        SuccessIndicator::EnvironmentPredicate(id) => {
            Err(Error::UnknownPredicate { id: id.clone() })
        }
    }
}

/// Run every seed of `cfg` as parallel jobs, writing one log directory
/// per seed under `cfg.run_dir()`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    std::fs::create_dir_all(cfg.run_dir())?;
    cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed)).collect()
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    let mut scheduler = cfg.build_scheduler()?;
    let (mut trainer, initial_policy) = cfg.build_trainer()?;
    let dir = cfg.run_dir().join(format!("seed_{seed}"));
    run_seed_loop(cfg, seed, &mut scheduler, trainer.as_mut(), &initial_policy, &dir)
}

/// The seed loop with caller-provided scheduler and trainer. On error the
/// partial log stays on disk and the summary carries the failure marker.
pub fn run_seed_loop(
    cfg: &ExperimentConfig,
    seed: u64,
    scheduler: &mut Scheduler,
    trainer: &mut dyn Trainer,
    initial_policy: &HistoryPolicy,
    dir: &Path,
) -> Result<RunResult> {
    let mut writer = RunLogWriter::create(dir)?;
    let mut eval_episodes = 0usize;
    match drive_loop(
        cfg,
        seed,
        scheduler,
        trainer,
        initial_policy,
        &mut writer,
        &mut eval_episodes,
    ) {
        Ok(summary) => Ok(RunResult {
            seed,
            dir: dir.to_path_buf(),
            rows: scheduler.state().history.clone(),
            summary,
        }),
        Err(err) => {
            let best = scheduler.state().best_snapshot.as_ref();
            let summary = RunSummary {
                seed,
                scheduler: scheduler.label().to_string(),
                iterations_run: scheduler.state().iteration,
                training_episodes: cfg.scheduler.k * scheduler.state().iteration,
                eval_episodes,
                final_entropy: scheduler.entropy(),
                best_global_success: best.map_or(0.0, |b| b.global_success),
                best_iteration: best.map_or(0, |b| b.iteration),
                entropy_at_best: best.map_or_else(|| scheduler.entropy(), |b| b.phi.entropy()),
                final_phi: scheduler.phi().clone(),
                failure: Some(err.to_string()),
            };
            let _ = writer.write_summary(&summary);
            Err(err)
        }
    }
}

fn drive_loop(
    cfg: &ExperimentConfig,
    seed: u64,
    scheduler: &mut Scheduler,
    trainer: &mut dyn Trainer,
    initial_policy: &HistoryPolicy,
    writer: &mut RunLogWriter,
    eval_episodes: &mut usize,
) -> Result<RunSummary> {
    let support = cfg.environment.support()?;
    let indicator = cfg.resolved_indicator();
    let native = cfg.environment.native_predicate();
    let (k, m) = (cfg.scheduler.k, cfg.scheduler.m);
    let mut train_rng = ChaCha8Rng::seed_from_u64(seed);
    // evaluation draws live on their own stream so measuring never
    // perturbs training
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seed);
    eval_rng.set_stream(1);

    let mut policy = initial_policy.clone();
    let mut trained_episodes = 0usize;

    let g0 = {
        let mut episode = episode_runner(&cfg.environment, &indicator, &policy, 0);
        global_success_rate(episode.as_mut(), &support, cfg.eval.n_eval, &mut eval_rng)?
    };
    *eval_episodes += g0.episodes;
    scheduler.consider_snapshot(BestSnapshot {
        iteration: 0,
        phi: scheduler.phi().clone(),
        policy: policy.clone(),
        global_success: g0.rate,
    });
    writer.write_initial(&InitialRow {
        iter: 0,
        scheduler: scheduler.label().to_string(),
        entropy: scheduler.entropy(),
        global_success: Some(g0.rate),
    })?;

    for i in 1..=m {
        let mut tags: Vec<Option<BoundaryTag>> = Vec::with_capacity(k);
        let (mut records, new_policy) = trainer.collect_and_train_sampled(
            &mut |rng| {
                let (xi, tag) = scheduler.draw_episode(rng)?;
                tags.push(tag);
                Ok(xi)
            },
            k,
            &mut train_rng,
        )?;
        policy = new_policy;
        relabel_success(&mut records, &indicator, native)?;
        writer.write_episodes(&records)?;
        scheduler.update(&records, &tags)?;
        trained_episodes += k;

        if i % cfg.eval.eval_every == 0 || i == m {
            let g = {
                let mut episode =
                    episode_runner(&cfg.environment, &indicator, &policy, trained_episodes);
                global_success_rate(episode.as_mut(), &support, cfg.eval.n_eval, &mut eval_rng)?
            };
            *eval_episodes += g.episodes;
            scheduler.annotate_global_success(g.rate);
            scheduler.consider_snapshot(BestSnapshot {
                iteration: i,
                phi: scheduler.phi().clone(),
                policy: policy.clone(),
                global_success: g.rate,
            });
        }
        writer.write_row(scheduler.state().history.last().expect("row just pushed"))?;
    }

    let best = scheduler
        .state()
        .best_snapshot
        .clone()
        .expect("measured at least once");
    let summary = RunSummary {
        seed,
        scheduler: scheduler.label().to_string(),
        iterations_run: scheduler.state().iteration,
        training_episodes: trained_episodes,
        eval_episodes: *eval_episodes,
        final_entropy: scheduler.entropy(),
        best_global_success: best.global_success,
        best_iteration: best.iteration,
        entropy_at_best: best.phi.entropy(),
        final_phi: scheduler.phi().clone(),
        failure: None,
    };
    writer.write_summary(&summary)?;
    writer.write_snapshot(&SnapshotFile {
        environment: cfg.environment.clone(),
        indicator,
        scheduler: scheduler.label().to_string(),
        seed,
        iteration: best.iteration,
        training_episodes: k * best.iteration,
        global_success: best.global_success,
        phi: best.phi,
        policy: best.policy,
    })?;
    Ok(summary)
}

/// One swept quantity and its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Alpha(Vec<f64>),
    Epsilon(Vec<f64>),
    JLb(Vec<f64>),
    Family(Vec<Family>),
}

pub fn family_label(family: Family) -> &'static str {
    match family {
        Family::IndependentBeta => "independent_beta",
        Family::IndependentTruncatedGaussian => "independent_truncated_gaussian",
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Alpha(_) => "alpha",
            Self::Epsilon(_) => "epsilon",
            Self::JLb(_) => "j_lb",
            Self::Family(_) => "family",
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Self::Alpha(v) | Self::Epsilon(v) | Self::JLb(v) => v.is_empty(),
            Self::Family(v) => v.is_empty(),
        }
    }

    /// Derived configs, one per value, homed under `root`.
    fn points(&self, base: &ExperimentConfig, root: &Path) -> Result<Vec<ExperimentConfig>> {
        let mut points = Vec::new();
        match self {
            Self::Alpha(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    match &mut cfg.scheduler.kind {
                        SchedulerKindConfig::Doraemon { alpha, .. } => *alpha = v,
                        _ => {
                            return Err(Error::InvalidConfig(
                                "an alpha sweep needs the doraemon scheduler".into(),
                            ))
                        }
                    }
                    points.push(home(cfg, root, format!("alpha={v}")));
                }
            }
            Self::Epsilon(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    match &mut cfg.scheduler.kind {
                        SchedulerKindConfig::Doraemon { epsilon, .. } => *epsilon = v,
                        _ => {
                            return Err(Error::InvalidConfig(
                                "an epsilon sweep needs the doraemon scheduler".into(),
                            ))
                        }
                    }
                    points.push(home(cfg, root, format!("epsilon={v}")));
                }
            }
            Self::JLb(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    cfg.indicator = Some(SuccessIndicator::ReturnLowerBound(v));
                    // the boundary thresholds measure the same returns, so
                    // they track the bar
                    if let SchedulerKindConfig::Autodr { auto } = &mut cfg.scheduler.kind {
                        let mut retuned = crate::curriculum::AutoDrConfig::from_return_threshold(v);
                        retuned.delta_frac = auto.delta_frac;
                        retuned.boundary_prob = auto.boundary_prob;
                        retuned.buffer_size = auto.buffer_size;
                        *auto = retuned;
                    }
                    points.push(home(cfg, root, format!("j_lb={v}")));
                }
            }
            Self::Family(values) => {
                for &v in values {
                    let mut cfg = base.clone();
                    match &mut cfg.scheduler.kind {
                        SchedulerKindConfig::Doraemon { family, .. }
                        | SchedulerKindConfig::Fixed { family } => *family = v,
                        _ => {
                            return Err(Error::InvalidConfig(
                                "a family sweep needs a distribution-backed scheduler".into(),
                            ))
                        }
                    }
                    points.push(home(cfg, root, format!("family={}", family_label(v))));
                }
            }
        }
        Ok(points)
    }
}

fn home(mut cfg: ExperimentConfig, root: &Path, label: String) -> ExperimentConfig {
    cfg.output_dir = root.to_path_buf();
    cfg.name = Some(label);
    cfg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Median and quartiles by linear interpolation over order statistics.
pub fn aggregate(values: &[f64]) -> Aggregate {
    assert!(!values.is_empty(), "nothing to aggregate");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    Aggregate { median: q(0.5), q1: q(0.25), q3: q(0.75) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPointResult {
    pub label: String,
    pub runs: Vec<RunResult>,
    pub final_entropy: Aggregate,
    pub best_global_success: Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: String,
    pub root: PathBuf,
    pub points: Vec<SweepPointResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeedSummary {
    pub seed: u64,
    pub final_entropy: f64,
    pub best_global_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointSummary {
    pub label: String,
    pub final_entropy: Aggregate,
    pub best_global_success: Aggregate,
    pub seeds: Vec<SweepSeedSummary>,
}

/// Contents of `sweep_summary.json` at the sweep root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryFile {
    pub axis: String,
    pub points: Vec<SweepPointSummary>,
}

impl SweepSummaryFile {
    pub fn load(root: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(
            root.join(SWEEP_SUMMARY_FILE),
        )?)?)
    }
}

pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.json";

/// Run `base` once per axis value, in parallel; per-seed logs land under
/// `<output>/<name>_sweep_<axis>/<axis>=<value>/`, aggregates in
/// `sweep_summary.json` at the root.
pub fn run_sweep(base: &ExperimentConfig, axis: &SweepAxis) -> Result<SweepResult> {
    base.validate()?;
    if axis.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one value".into()));
    }
    let root = base
        .output_dir
        .join(format!("{}_sweep_{}", base.name(), axis.name()));
    let point_cfgs = axis.points(base, &root)?;
    for cfg in &point_cfgs {
        cfg.validate()?;
    }
    let points: Result<Vec<SweepPointResult>> = point_cfgs
        .par_iter()
        .map(|cfg| {
            let runs = run_experiment(cfg)?;
            let final_entropy: Vec<f64> =
                runs.iter().map(|r| r.summary.final_entropy).collect();
            let best: Vec<f64> =
                runs.iter().map(|r| r.summary.best_global_success).collect();
            Ok(SweepPointResult {
                label: cfg.name(),
                final_entropy: aggregate(&final_entropy),
                best_global_success: aggregate(&best),
                runs,
            })
        })
        .collect();
    let points = points?;
    let summary = SweepSummaryFile {
        axis: axis.name().to_string(),
        points: points
            .iter()
            .map(|p| SweepPointSummary {
                label: p.label.clone(),
                final_entropy: p.final_entropy,
                best_global_success: p.best_global_success,
                seeds: p
                    .runs
                    .iter()
                    .map(|r| SweepSeedSummary {
                        seed: r.seed,
                        final_entropy: r.summary.final_entropy,
                        best_global_success: r.summary.best_global_success,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    std::fs::write(root.join(SWEEP_SUMMARY_FILE), text)?;
    Ok(SweepResult { axis: axis.name().to_string(), root, points })
}
