//! Experiment configuration: one JSON document selecting an environment,
//! a scheduler, a learner, a success definition, and the evaluation and
//! seeding setup. Everything is resolved and validated before any episode
//! runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::{AutoDrConfig, DoraemonConfig, Scheduler};
use crate::distributions::{BoundedSupport, DistributionSpec, Family};
use crate::environments::{InclinedPlaneConfig, SkillRegionConfig};
use crate::error::{Error, Result};
use crate::estimator::SuccessIndicator;
use crate::learner::{CemConfig, CemTrainer, HistoryPolicy, SkillTrainer, Trainer};
use crate::optimizer::StepConfig;

/// Output-directory override, a path.
pub const ENV_OUTPUT_DIR: &str = "DORAEMON_OUTPUT_DIR";
/// Seed-list override, comma-separated unsigned integers.
pub const ENV_SEEDS: &str = "DORAEMON_SEEDS";

fn default_plane_lo() -> Vec<f64> {
    vec![-std::f64::consts::FRAC_PI_2]
}

fn default_plane_hi() -> Vec<f64> {
    vec![std::f64::consts::FRAC_PI_2]
}

/// Environment selection plus the benchmark box that the uniform
/// reference measure lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    InclinedPlane {
        #[serde(default)]
        env: InclinedPlaneConfig,
        /// Benchmark inclination bounds; the default covers every angle a
        /// bounded counter force could ever be asked about.
        #[serde(default = "default_plane_lo")]
        lo: Vec<f64>,
        #[serde(default = "default_plane_hi")]
        hi: Vec<f64>,
    },
    SkillRegion {
        region: SkillRegionConfig,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl EnvironmentConfig {
    pub fn support(&self) -> Result<BoundedSupport> {
        let (lo, hi) = match self {
            Self::InclinedPlane { lo, hi, .. } => (lo, hi),
            Self::SkillRegion { lo, hi, .. } => (lo, hi),
        };
        BoundedSupport::new(lo.clone(), hi.clone())
    }

    /// The success definition the environment computes natively.
    pub fn native_predicate(&self) -> &'static str {
        match self {
            Self::InclinedPlane { .. } => "plane_balance",
            Self::SkillRegion { .. } => "skill_region",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let support = self.support()?;
        match self {
            Self::InclinedPlane { env, .. } => {
                env.validate()?;
                if support.dims() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: support.dims(),
                    });
                }
            }
            Self::SkillRegion { region, .. } => region.validate(&support)?,
        }
        Ok(())
    }
}

fn default_family() -> Family {
    Family::IndependentBeta
}

fn default_true() -> bool {
    true
}

fn default_init_concentration() -> f64 {
    30.0
}

/// Scheduler selection. `doraemon` runs the constrained entropy
/// curriculum; the rest are the comparison baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum SchedulerKindConfig {
    Doraemon {
        /// Success-rate constraint level, in [0, 1].
        alpha: f64,
        /// KL trust-region radius, > 0.
        epsilon: f64,
        #[serde(default = "default_true")]
        backup_enabled: bool,
        #[serde(default = "default_family")]
        family: Family,
        /// Optional importance-weight cap.
        #[serde(default)]
        clip: Option<f64>,
        /// Shape of the default narrow starting distribution; larger is
        /// narrower. Ignored when `init` is given.
        #[serde(default = "default_init_concentration")]
        init_concentration: f64,
        /// Full starting-distribution override. Must live on the benchmark
        /// box and match `family`.
        #[serde(default)]
        init: Option<DistributionSpec>,
    },
    Fixed {
        #[serde(default = "default_family")]
        family: Family,
    },
    Nodr {
        /// Training dynamics; the benchmark midpoint when omitted.
        #[serde(default)]
        nominal: Option<Vec<f64>>,
    },
    Autodr {
        #[serde(flatten)]
        auto: AutoDrConfig,
    },
}

impl SchedulerKindConfig {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Doraemon { .. } => "doraemon",
            Self::Fixed { .. } => "fixed",
            Self::Nodr { .. } => "nodr",
            Self::Autodr { .. } => "autodr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    #[serde(flatten)]
    pub kind: SchedulerKindConfig,
    /// Episodes per distribution update.
    pub k: usize,
    /// Distribution updates per run.
    pub m: usize,
}

fn default_window() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum LearnerConfig {
    /// Episodic policy search over a history-conditioned controller.
    Cem {
        #[serde(default)]
        cem: CemConfig,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default)]
        hidden: Vec<usize>,
    },
    /// The synthetic skill environment's built-in competence growth; no
    /// parameters.
    Skill,
}

fn default_n_eval() -> usize {
    500
}

fn default_eval_every() -> usize {
    5
}

fn default_grid_episodes() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Episodes per benchmark-measure evaluation.
    pub n_eval: usize,
    /// Evaluate after every this many updates (plus always after the
    /// last).
    pub eval_every: usize,
    /// Episodes per cell in grid slices.
    pub grid_episodes: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_eval: default_n_eval(),
            eval_every: default_eval_every(),
            grid_episodes: default_grid_episodes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Run directory name under `output_dir`; the scheduler id when
    /// omitted.
    #[serde(default)]
    pub name: Option<String>,
    pub environment: EnvironmentConfig,
    pub scheduler: SchedulerConfig,
    /// Defaults per environment: CEM on the plane, ambient growth on the
    /// skill region.
    #[serde(default)]
    pub learner: Option<LearnerConfig>,
    /// Success definition; the environment's own predicate when omitted.
    #[serde(default)]
    pub indicator: Option<SuccessIndicator>,
    #[serde(default)]
    pub eval: EvalConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Read a config file, apply environment-variable overrides, and
    /// validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        cfg.apply_env_overrides()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env_overrides(&mut self) -> Result<()> {
        let out = std::env::var(ENV_OUTPUT_DIR).ok();
        let seeds = std::env::var(ENV_SEEDS).ok();
        self.apply_overrides(out.as_deref(), seeds.as_deref())
    }

    pub fn apply_overrides(
        &mut self,
        output_dir: Option<&str>,
        seeds: Option<&str>,
    ) -> Result<()> {
        if let Some(dir) = output_dir {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(list) = seeds {
            self.seeds = parse_seed_list(list)?;
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.scheduler.kind.id().to_string())
    }

    /// Directory all of this experiment's seed runs live under.
    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.name())
    }

    pub fn resolved_learner(&self) -> LearnerConfig {
        self.learner.clone().unwrap_or(match self.environment {
            EnvironmentConfig::InclinedPlane { .. } => LearnerConfig::Cem {
                cem: CemConfig::default(),
                window: default_window(),
                hidden: Vec::new(),
            },
            EnvironmentConfig::SkillRegion { .. } => LearnerConfig::Skill,
        })
    }

    pub fn resolved_indicator(&self) -> SuccessIndicator {
        self.indicator.clone().unwrap_or_else(|| {
            SuccessIndicator::EnvironmentPredicate(
                self.environment.native_predicate().to_string(),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        let support = self.environment.support()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        if self.scheduler.k == 0 {
            return Err(Error::InvalidConfig(
                "episodes per update must be at least 1".into(),
            ));
        }
        if self.eval.n_eval == 0 || self.eval.eval_every == 0 || self.eval.grid_episodes == 0 {
            return Err(Error::InvalidConfig(
                "evaluation sizes must be at least 1".into(),
            ));
        }
        match &self.scheduler.kind {
            SchedulerKindConfig::Doraemon {
                alpha,
                epsilon,
                family,
                init_concentration,
                init,
                ..
            } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::InvalidConfig(format!(
                        "alpha {alpha} outside [0, 1]"
                    )));
                }
                if !(*epsilon > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon {epsilon} must be positive"
                    )));
                }
                if !(*init_concentration > 0.0) {
                    return Err(Error::InvalidConfig(
                        "init_concentration must be positive".into(),
                    ));
                }
                if let Some(spec) = init {
                    if spec.support() != &support {
                        return Err(Error::SupportMismatch);
                    }
                    if spec.family() != *family {
                        return Err(Error::FamilyMismatch);
                    }
                }
            }
            SchedulerKindConfig::Fixed { .. } => {}
            SchedulerKindConfig::Nodr { nominal } => {
                if let Some(nominal) = nominal {
                    crate::curriculum::no_dr_spec(&support, Some(nominal.clone()))?;
                }
            }
            SchedulerKindConfig::Autodr { auto } => auto.validate()?,
        }
        match (&self.environment, &self.resolved_learner()) {
            (EnvironmentConfig::InclinedPlane { .. }, LearnerConfig::Cem { cem, .. }) => {
                cem.validate()?;
            }
            (EnvironmentConfig::SkillRegion { .. }, LearnerConfig::Skill) => {}
            (env, learner) => {
                return Err(Error::InvalidConfig(format!(
                    "learner {learner:?} cannot drive environment {}",
                    env.native_predicate()
                )));
            }
        }
        if let Some(SuccessIndicator::EnvironmentPredicate(id)) = &self.indicator {
            if id != self.environment.native_predicate() {
                return Err(Error::UnknownPredicate { id: id.clone() });
            }
        }
        Ok(())
    }

    pub fn build_scheduler(&self) -> Result<Scheduler> {
        let support = self.environment.support()?;
        let (k, m) = (self.scheduler.k, self.scheduler.m);
        match &self.scheduler.kind {
            SchedulerKindConfig::Doraemon {
                alpha,
                epsilon,
                backup_enabled,
                family,
                clip,
                init_concentration,
                init,
            } => {
                let phi0 = match init {
                    Some(spec) => spec.clone(),
                    None => initial_spec(support, *family, *init_concentration)?,
                };
                let mut step = StepConfig::new(*alpha, *epsilon);
                step.clip = *clip;
                let mut cfg = DoraemonConfig::new(step);
                cfg.backup_enabled = *backup_enabled;
                Scheduler::doraemon(phi0, cfg, k, m)
            }
            SchedulerKindConfig::Fixed { family } => {
                Scheduler::fixed_dr(support, *family, k, m)
            }
            SchedulerKindConfig::Nodr { nominal } => {
                Scheduler::no_dr(&support, nominal.clone(), k, m)
            }
            SchedulerKindConfig::Autodr { auto } => {
                Scheduler::auto_dr(support, auto.clone(), k, m)
            }
        }
    }

    /// The trainer plus a copy of the policy it starts from.
    pub fn build_trainer(&self) -> Result<(Box<dyn Trainer>, HistoryPolicy)> {
        match (&self.environment, self.resolved_learner()) {
            (
                EnvironmentConfig::InclinedPlane { env, .. },
                LearnerConfig::Cem { cem, window, hidden },
            ) => {
                let policy = HistoryPolicy::zeros(window, 2, hidden, env.a_max);
                let trainer = CemTrainer::new(env.clone(), cem, policy.clone())?;
                Ok((Box::new(trainer), policy))
            }
            (EnvironmentConfig::SkillRegion { region, .. }, LearnerConfig::Skill) => {
                let trainer = SkillTrainer::new(region.clone());
                let placeholder = HistoryPolicy::zeros(0, 1, Vec::new(), 1.0);
                Ok((Box::new(trainer), placeholder))
            }
            (env, learner) => Err(Error::InvalidConfig(format!(
                "learner {learner:?} cannot drive environment {}",
                env.native_predicate()
            ))),
        }
    }
}

/// The default narrow starting distribution: unimodal at the box
/// midpoint, with the unit-interval standard deviation matched across
/// families so curricula from either start at comparable entropy.
pub fn initial_spec(
    support: BoundedSupport,
    family: Family,
    concentration: f64,
) -> Result<DistributionSpec> {
    if !(concentration > 0.0) {
        return Err(Error::InvalidConfig(
            "init_concentration must be positive".into(),
        ));
    }
    let dims = support.dims();
    match family {
        Family::IndependentBeta => DistributionSpec::beta(
            support,
            vec![concentration; dims],
            vec![concentration; dims],
        ),
        Family::IndependentTruncatedGaussian => {
            let unit_std = 0.5 / (2.0 * concentration + 1.0).sqrt();
            let mean = support.midpoint();
            let std = (0..dims).map(|d| unit_std * support.width(d)).collect();
            DistributionSpec::truncated_gaussian(support, mean, std)
        }
    }
}

fn parse_seed_list(list: &str) -> Result<Vec<u64>> {
    let seeds: std::result::Result<Vec<u64>, _> = list
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    match seeds {
        Ok(seeds) if !seeds.is_empty() => Ok(seeds),
        _ => Err(Error::InvalidConfig(format!(
            "cannot parse seed list {list:?}"
        ))),
    }
}
