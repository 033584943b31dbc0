//! Distribution schedulers behind one interface: propose the next training
//! distribution from the episodes of the last one. The entropy-maximizing
//! curriculum drives the constrained steps in [`crate::optimizer`]; the
//! No-DR, Fixed-DR, and AutoDR baselines share the same driver loop.

mod autodr;

pub use autodr::{
    autodr_sample, autodr_update, AutoDrConfig, AutoDrDecision, AutoDrState, BoundaryTag,
    Side, AUTODR_INIT_HALF_WIDTH_FRAC,
};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{BoundedSupport, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::estimator::{is_success_rate, mc_success_rate, EpisodeRecord};
use crate::learner::HistoryPolicy;
use crate::optimizer::{backup_step, doraemon_step, StartCheck, StepConfig, StepStatus};

/// Relative half width of the stand-in sampling sliver used for the single
///-instance baseline.
pub const NO_DR_SLACK_FRAC: f64 = 1e-9;

/// Which update path an iteration took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Feasible start, the entropy step ran directly.
    Main,
    /// Backup restored feasibility, then the entropy step ran.
    BackupMain,
    /// Backup could not restore feasibility; its solution carries over
    /// unchanged to the next iteration.
    BackupContinue,
    /// The entropy step stalled; nothing moved.
    Stalled,
    /// Static baseline distribution.
    Static,
    /// Per-boundary bound adjustments.
    AutoDr,
}

/// One solver call, flattened for the run log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub status: StepStatus,
    pub entropy_before: f64,
    pub entropy_after: f64,
    pub kl: f64,
    /// Estimated success at the step's start point, under the weights the
    /// branch decision used.
    pub g_before: f64,
    /// Estimated success at the returned point.
    pub g_after: f64,
    pub solver_iters: usize,
}

/// Per-iteration diagnostics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    /// Update count, starting at 1; run logs reserve 0 for the state
    /// before any update.
    pub iter: usize,
    pub scheduler: String,
    pub entropy: f64,
    pub in_dist_success: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_success: Option<f64>,
    pub branch_taken: Branch,
}

/// What one scheduler update did, beyond the new distribution itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub branch: Branch,
    /// Monte-Carlo success rate of the iteration's records.
    pub mc_rate: f64,
    pub backup: Option<StepReport>,
    pub main: Option<StepReport>,
    /// Threshold decisions made this update (AutoDR only).
    pub autodr_decisions: Vec<(BoundaryTag, AutoDrDecision)>,
}

impl IterationOutcome {
    fn new(branch: Branch, mc_rate: f64) -> Self {
        Self {
            branch,
            mc_rate,
            backup: None,
            main: None,
            autodr_decisions: Vec::new(),
        }
    }
}

/// The best policy seen so far under the benchmark measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSnapshot {
    pub iteration: usize,
    pub phi: DistributionSpec,
    pub policy: HistoryPolicy,
    pub global_success: f64,
}

/// Driver-side curriculum state shared by every scheduler: the current
/// training distribution, the iteration budget, the diagnostics history,
/// and the best snapshot measured so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub phi_current: DistributionSpec,
    pub iteration: usize,
    /// Episodes per distribution update.
    pub k: usize,
    /// Iteration budget.
    pub max_iterations: usize,
    pub history: Vec<IterationRow>,
    pub best_snapshot: Option<BestSnapshot>,
}

impl CurriculumState {
    pub fn new(phi_initial: DistributionSpec, k: usize, max_iterations: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig(
                "episodes per update must be at least 1".into(),
            ));
        }
        Ok(Self {
            phi_current: phi_initial,
            iteration: 0,
            k,
            max_iterations,
            history: Vec::new(),
            best_snapshot: None,
        })
    }

    /// True once the iteration budget is used up.
    pub fn done(&self) -> bool {
        self.iteration >= self.max_iterations
    }

    /// Keep `candidate` when it strictly beats the stored snapshot, so
    /// ties resolve to the earliest iteration measured.
    pub fn consider_snapshot(&mut self, candidate: BestSnapshot) -> bool {
        let better = match &self.best_snapshot {
            None => true,
            Some(best) => candidate.global_success > best.global_success,
        };
        if better {
            self.best_snapshot = Some(candidate);
        }
        better
    }

    fn guard_update(&self, records: &[EpisodeRecord]) -> Result<()> {
        if self.done() {
            return Err(Error::InvalidConfig(format!(
                "iteration budget {} exhausted",
                self.max_iterations
            )));
        }
        if records.len() != self.k {
            return Err(Error::InvalidConfig(format!(
                "expected {} records per update, got {}",
                self.k,
                records.len()
            )));
        }
        Ok(())
    }

    fn push_row(&mut self, scheduler: &str, in_dist_success: f64, branch: Branch) {
        self.iteration += 1;
        self.history.push(IterationRow {
            iter: self.iteration,
            scheduler: scheduler.to_string(),
            entropy: self.phi_current.entropy(),
            in_dist_success,
            global_success: None,
            branch_taken: branch,
        });
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoraemonConfig {
    pub step: StepConfig,
    /// Feasibility-restoration path on infeasible starts; disabling it
    /// turns those iterations into holds.
    #[serde(default = "default_backup_enabled")]
    pub backup_enabled: bool,
}

fn default_backup_enabled() -> bool {
    true
}

impl DoraemonConfig {
    pub fn new(step: StepConfig) -> Self {
        Self {
            step,
            backup_enabled: true,
        }
    }
}

/// One curriculum update from `records` collected under
/// `state.phi_current`.
///
/// Feasible start (Monte-Carlo success at or above alpha): the entropy
/// step runs directly. Infeasible start with the backup enabled: the
/// success-restoration step runs first; if even the restored point's
/// reweighted success estimate stays below alpha, the iteration carries
/// the backup solution and stops there, otherwise the entropy step runs
/// from the restored point. Infeasible start with the backup disabled:
/// the entropy step runs from the infeasible point as-is, with the start
/// check lifted; the distribution can then keep widening on optimistic
/// reweighted estimates but never retreats. A stalled solve keeps its
/// start point, so the iteration is logged but moves nothing.
pub fn doraemon_iteration(
    state: &mut CurriculumState,
    records: &[EpisodeRecord],
    cfg: &DoraemonConfig,
) -> Result<IterationOutcome> {
    state.guard_update(records)?;
    let alpha = cfg.step.alpha;
    let mc = mc_success_rate(records)?;
    let phi_i = state.phi_current.clone();
    let entropy_i = phi_i.entropy();
    let mut outcome = IterationOutcome::new(Branch::Main, mc);

    let phi_start = if mc >= alpha || !cfg.backup_enabled {
        phi_i.clone()
    } else {
        let backup = backup_step(&phi_i, records, &cfg.step)?;
        let g_backup = is_success_rate(records, &phi_i, &backup.phi_next, cfg.step.clip)?;
        outcome.backup = Some(StepReport {
            status: backup.status,
            entropy_before: entropy_i,
            entropy_after: backup.achieved.entropy,
            kl: backup.achieved.kl_from_start,
            g_before: mc,
            g_after: g_backup,
            solver_iters: backup.solver_iters,
        });
        if g_backup < alpha {
            outcome.branch = Branch::BackupContinue;
            state.phi_current = backup.phi_next;
            state.push_row("doraemon", mc, outcome.branch);
            return Ok(outcome);
        }
        outcome.branch = Branch::BackupMain;
        backup.phi_next
    };

    // The restored point passes feasibility under weights referenced to
    // the collection distribution, which the step itself cannot see; with
    // the backup disabled there is no restoration step to hand off to. In
    // both cases the start check is lifted.
    let mut step_cfg = cfg.step.clone();
    step_cfg.start_check = if mc >= alpha {
        StartCheck::Enforce
    } else {
        StartCheck::AssumeFeasible
    };
    let g_start = match outcome.backup {
        Some(report) => report.g_after,
        None => mc,
    };
    let main = doraemon_step(&phi_start, records, &step_cfg)?;
    outcome.main = Some(StepReport {
        status: main.status,
        entropy_before: phi_start.entropy(),
        entropy_after: main.achieved.entropy,
        kl: main.achieved.kl_from_start,
        g_before: g_start,
        g_after: main.achieved.estimated_success,
        solver_iters: main.solver_iters,
    });
    if main.status == StepStatus::Stalled && outcome.branch == Branch::Main {
        outcome.branch = Branch::Stalled;
    }
    state.phi_current = main.phi_next;
    state.push_row("doraemon", mc, outcome.branch);
    Ok(outcome)
}

/// The maximum-entropy training distribution on the benchmark box.
pub fn fixed_dr_spec(support: BoundedSupport, family: Family) -> DistributionSpec {
    DistributionSpec::max_entropy(support, family)
}

/// Bookkeeping distribution for the single-instance baseline: a uniform
/// sliver of relative half width [`NO_DR_SLACK_FRAC`] around `nominal`
/// (default the box midpoint), clipped into the box. A point mass has no
/// density on the benchmark, so the baseline carries the narrowest spec
/// the machinery can represent; its sampler still returns `nominal`
/// itself, exactly.
pub fn no_dr_spec(support: &BoundedSupport, nominal: Option<Vec<f64>>) -> Result<DistributionSpec> {
    let nominal = nominal.unwrap_or_else(|| support.midpoint());
    if nominal.len() != support.dims() {
        return Err(Error::DimensionMismatch {
            expected: support.dims(),
            got: nominal.len(),
        });
    }
    for (d, &x) in nominal.iter().enumerate() {
        if x < support.lo()[d] || x > support.hi()[d] {
            return Err(Error::OutOfSupport { dim: d, value: x });
        }
    }
    let mut lo = Vec::with_capacity(support.dims());
    let mut hi = Vec::with_capacity(support.dims());
    for d in 0..support.dims() {
        // wide enough to be representable next to a large nominal value
        let slack = (NO_DR_SLACK_FRAC * support.width(d))
            .max(4.0 * f64::EPSILON * nominal[d].abs());
        lo.push((nominal[d] - slack).max(support.lo()[d]));
        hi.push((nominal[d] + slack).min(support.hi()[d]));
    }
    Ok(DistributionSpec::max_entropy(
        BoundedSupport::new(lo, hi)?,
        Family::IndependentBeta,
    ))
}

enum SchedulerKind {
    Doraemon { cfg: DoraemonConfig },
    FixedDr,
    NoDr { nominal: Vec<f64> },
    AutoDr { auto: AutoDrState },
}

/// One of the four schedulers plus its curriculum state, driven as:
/// draw `k` episodes with [`draw_episode`](Self::draw_episode), train on
/// them, then [`update`](Self::update) with the records (and, for AutoDR,
/// the tags the draws produced).
pub struct Scheduler {
    state: CurriculumState,
    kind: SchedulerKind,
}

impl Scheduler {
    pub fn doraemon(
        phi_initial: DistributionSpec,
        cfg: DoraemonConfig,
        k: usize,
        max_iterations: usize,
    ) -> Result<Self> {
        Ok(Self {
            state: CurriculumState::new(phi_initial, k, max_iterations)?,
            kind: SchedulerKind::Doraemon { cfg },
        })
    }

    pub fn fixed_dr(
        support: BoundedSupport,
        family: Family,
        k: usize,
        max_iterations: usize,
    ) -> Result<Self> {
        Ok(Self {
            state: CurriculumState::new(fixed_dr_spec(support, family), k, max_iterations)?,
            kind: SchedulerKind::FixedDr,
        })
    }

    pub fn no_dr(
        support: &BoundedSupport,
        nominal: Option<Vec<f64>>,
        k: usize,
        max_iterations: usize,
    ) -> Result<Self> {
        let nominal = nominal.unwrap_or_else(|| support.midpoint());
        let phi = no_dr_spec(support, Some(nominal.clone()))?;
        Ok(Self {
            state: CurriculumState::new(phi, k, max_iterations)?,
            kind: SchedulerKind::NoDr { nominal },
        })
    }

    pub fn auto_dr(
        benchmark: BoundedSupport,
        cfg: AutoDrConfig,
        k: usize,
        max_iterations: usize,
    ) -> Result<Self> {
        let auto = AutoDrState::new(benchmark, cfg)?;
        let state = CurriculumState::new(auto.uniform_spec()?, k, max_iterations)?;
        Ok(Self {
            state,
            kind: SchedulerKind::AutoDr { auto },
        })
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            SchedulerKind::Doraemon { .. } => "doraemon",
            SchedulerKind::FixedDr => "fixed_dr",
            SchedulerKind::NoDr { .. } => "no_dr",
            SchedulerKind::AutoDr { .. } => "auto_dr",
        }
    }

    pub fn state(&self) -> &CurriculumState {
        &self.state
    }

    /// Current training distribution (for AutoDR, the current uniform box).
    pub fn phi(&self) -> &DistributionSpec {
        &self.state.phi_current
    }

    pub fn entropy(&self) -> f64 {
        self.state.phi_current.entropy()
    }

    pub fn done(&self) -> bool {
        self.state.done()
    }

    pub fn autodr_state(&self) -> Option<&AutoDrState> {
        match &self.kind {
            SchedulerKind::AutoDr { auto } => Some(auto),
            _ => None,
        }
    }

    pub fn consider_snapshot(&mut self, candidate: BestSnapshot) -> bool {
        self.state.consider_snapshot(candidate)
    }

    /// Record the benchmark-wide success measured right after the last
    /// update on its diagnostics row.
    pub fn annotate_global_success(&mut self, value: f64) {
        if let Some(row) = self.state.history.last_mut() {
            row.global_success = Some(value);
        }
    }

    /// Dynamics for one training episode, plus the boundary tag when the
    /// draw was pinned (AutoDR only). The single-instance baseline returns
    /// its nominal vector without consuming randomness.
    pub fn draw_episode(&self, rng: &mut dyn RngCore) -> Result<(Vec<f64>, Option<BoundaryTag>)> {
        match &self.kind {
            SchedulerKind::NoDr { nominal } => Ok((nominal.clone(), None)),
            SchedulerKind::AutoDr { auto } => Ok(autodr_sample(auto, rng)),
            SchedulerKind::Doraemon { .. } | SchedulerKind::FixedDr => {
                Ok((self.state.phi_current.sample_one(rng)?, None))
            }
        }
    }

    /// Propose the next training distribution from one update's records.
    /// `tags` must align with `records` by index for AutoDR; the other
    /// schedulers ignore it.
    pub fn update(
        &mut self,
        records: &[EpisodeRecord],
        tags: &[Option<BoundaryTag>],
    ) -> Result<IterationOutcome> {
        match &mut self.kind {
            SchedulerKind::Doraemon { cfg } => {
                let cfg = cfg.clone();
                doraemon_iteration(&mut self.state, records, &cfg)
            }
            SchedulerKind::FixedDr | SchedulerKind::NoDr { .. } => {
                self.state.guard_update(records)?;
                let mc = mc_success_rate(records)?;
                let label = match self.kind {
                    SchedulerKind::FixedDr => "fixed_dr",
                    _ => "no_dr",
                };
                self.state.push_row(label, mc, Branch::Static);
                Ok(IterationOutcome::new(Branch::Static, mc))
            }
            SchedulerKind::AutoDr { auto } => {
                self.state.guard_update(records)?;
                if tags.len() != records.len() {
                    return Err(Error::InvalidConfig(format!(
                        "{} tags for {} records",
                        tags.len(),
                        records.len()
                    )));
                }
                let mc = mc_success_rate(records)?;
                let mut outcome = IterationOutcome::new(Branch::AutoDr, mc);
                for (record, tag) in records.iter().zip(tags) {
                    if let Some(tag) = tag {
                        if let Some(decision) = autodr_update(auto, record, Some(tag))? {
                            outcome.autodr_decisions.push((*tag, decision));
                        }
                    }
                }
                self.state.phi_current = auto.uniform_spec()?;
                self.state.push_row("auto_dr", mc, Branch::AutoDr);
                Ok(outcome)
            }
        }
    }
}
