//! Constrained distribution updates.
//!
//! Both per-iteration problems share one solver: projected gradient ascent
//! on an exact-penalty objective in transformed parameter space, with an
//! increasing penalty schedule, several perturbed restarts, a bisection
//! snap back onto the KL ball, and a compass-search polish that walks the
//! feasible region boundary. The contract is oracle agreement and
//! constraint satisfaction, not any particular optimization path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::EpisodeRecord;

use super::gradients::Problem;

/// Whether doraemon_step verifies the caller's feasibility guarantee.
///
/// The curriculum's backup path hands the main step a start point whose
/// own-weighted success estimate is below alpha by construction (that is
/// why the backup ran), while feasibility was established under weights
/// referenced to the pre-backup distribution. `AssumeFeasible` lets that
/// call proceed; if no candidate in the trust region then satisfies the
/// success constraint without losing entropy, the step reports `Stalled`
/// and the caller keeps the backup solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartCheck {
    Enforce,
    AssumeFeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepConfig {
    /// Desired in-distribution success rate, in [0, 1].
    pub alpha: f64,
    /// KL trust-region radius in nats, > 0.
    pub epsilon: f64,
    #[serde(default = "default_tol_kl")]
    pub tol_kl: f64,
    #[serde(default = "default_tol_g")]
    pub tol_g: f64,
    #[serde(default = "default_tol_entropy")]
    pub tol_entropy: f64,
    /// Gradient iterations per penalty stage.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Perturbed restarts in addition to the start point itself.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_penalty_schedule")]
    pub penalty_schedule: Vec<f64>,
    #[serde(default)]
    pub restart_seed: u64,
    /// Optional importance-weight cap passed through to the estimator.
    #[serde(default)]
    pub clip: Option<f64>,
    #[serde(default = "default_start_check")]
    pub start_check: StartCheck,
}

fn default_tol_kl() -> f64 {
    1e-4
}
fn default_tol_g() -> f64 {
    1e-3
}
fn default_tol_entropy() -> f64 {
    1e-6
}
fn default_max_iterations() -> usize {
    300
}
fn default_restarts() -> usize {
    4
}
fn default_penalty_schedule() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}
fn default_start_check() -> StartCheck {
    StartCheck::Enforce
}

impl StepConfig {
    pub fn new(alpha: f64, epsilon: f64) -> Self {
        Self {
            alpha,
            epsilon,
            tol_kl: default_tol_kl(),
            tol_g: default_tol_g(),
            tol_entropy: default_tol_entropy(),
            max_iterations: default_max_iterations(),
            restarts: default_restarts(),
            penalty_schedule: default_penalty_schedule(),
            restart_seed: 0,
            clip: None,
            start_check: default_start_check(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Achieved {
    pub entropy: f64,
    pub kl_from_start: f64,
    pub estimated_success: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    MainStepOk,
    BackupStepOk,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub phi_next: DistributionSpec,
    pub achieved: Achieved,
    pub status: StepStatus,
    pub solver_iters: usize,
}

/// Gradients of the three step quantities in transformed parameter space
/// (log shapes for Beta; mean and log std for the truncated Gaussian),
/// ordered like the wire format: first marginal parameters then second.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverGradients {
    pub grad_entropy: Vec<f64>,
    pub grad_kl: Vec<f64>,
    pub grad_success: Vec<f64>,
}

pub fn solver_gradients(
    phi: &DistributionSpec,
    records: &[EpisodeRecord],
    phi_ref: &DistributionSpec,
) -> Result<SolverGradients> {
    if phi.family() != phi_ref.family() {
        return Err(Error::FamilyMismatch);
    }
    if phi.support() != phi_ref.support() {
        return Err(Error::SupportMismatch);
    }
    let problem = Problem::new(phi_ref, records, None)?;
    let theta = problem.transform.to_theta(phi);
    Ok(SolverGradients {
        grad_entropy: problem.entropy_grad(&theta),
        grad_kl: problem.kl_grad(&theta),
        grad_success: problem.g_hat_grad(&theta),
    })
}

/// Which of the two constrained problems is being solved.
#[derive(Clone, Copy, PartialEq)]
enum Goal {
    /// max H s.t. g_hat >= alpha, KL <= epsilon
    MaxEntropy,
    /// max g_hat s.t. KL <= epsilon
    MaxSuccess,
}

struct Candidate {
    theta: Vec<f64>,
    entropy: f64,
    kl: f64,
    g: f64,
}

struct Solver<'a> {
    problem: &'a Problem,
    cfg: &'a StepConfig,
    goal: Goal,
    theta_start: Vec<f64>,
    entropy_start: f64,
    g_start: f64,
    iters: usize,
}

impl<'a> Solver<'a> {
    fn objective(&self, c: &Candidate) -> f64 {
        match self.goal {
            Goal::MaxEntropy => c.entropy,
            Goal::MaxSuccess => c.g,
        }
    }

    /// Feasibility of a final candidate, strict on KL and slightly loose
    /// on the estimated quantities so reported values sit well inside the
    /// documented tolerances.
    fn valid(&self, c: &Candidate) -> bool {
        if c.kl > self.cfg.epsilon {
            return false;
        }
        match self.goal {
            Goal::MaxEntropy => {
                c.g >= self.cfg.alpha - 0.5 * self.cfg.tol_g
                    && c.entropy >= self.entropy_start - 0.5 * self.cfg.tol_entropy
            }
            Goal::MaxSuccess => c.g >= self.g_start - 0.5 * self.cfg.tol_g,
        }
    }

    fn evaluate(&self, theta: Vec<f64>) -> Candidate {
        Candidate {
            entropy: self.problem.entropy(&theta),
            kl: self.problem.kl(&theta),
            g: self.problem.g_hat(&theta),
            theta,
        }
    }

    /// Exact-penalty value and gradient for one penalty weight.
    fn penalized(&self, theta: &[f64], mu: f64) -> (f64, Vec<f64>) {
        let h = self.problem.entropy(theta);
        let kl = self.problem.kl(theta);
        let g = self.problem.g_hat(theta);
        let mut value = match self.goal {
            Goal::MaxEntropy => h,
            Goal::MaxSuccess => g,
        };
        let mut grad = match self.goal {
            Goal::MaxEntropy => self.problem.entropy_grad(theta),
            Goal::MaxSuccess => self.problem.g_hat_grad(theta),
        };
        if kl > self.cfg.epsilon {
            value -= mu * (kl - self.cfg.epsilon);
            let gk = self.problem.kl_grad(theta);
            for (gi, ki) in grad.iter_mut().zip(&gk) {
                *gi -= mu * ki;
            }
        }
        if self.goal == Goal::MaxEntropy && g < self.cfg.alpha {
            value -= mu * (self.cfg.alpha - g);
            let gg = self.problem.g_hat_grad(theta);
            for (gi, si) in grad.iter_mut().zip(&gg) {
                *gi += mu * si;
            }
        }
        (value, grad)
    }

    /// Projected gradient ascent through the penalty schedule from one
    /// starting point.
    fn ascend(&mut self, mut theta: Vec<f64>) -> Vec<f64> {
        let eta_max = (2.0 * self.cfg.epsilon).sqrt().min(0.25);
        for &mu in &self.cfg.penalty_schedule {
            let mut eta = eta_max;
            for _ in 0..self.cfg.max_iterations {
                self.iters += 1;
                let (value, grad) = self.penalized(&theta, mu);
                let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
                if gnorm2 < 1e-24 {
                    break;
                }
                let mut accepted = false;
                let mut try_eta = (eta * 2.0).min(eta_max);
                for _ in 0..40 {
                    let trial: Vec<f64> = theta
                        .iter()
                        .zip(&grad)
                        .map(|(t, g)| t + try_eta * g)
                        .collect();
                    let trial = self.problem.transform.projected(&trial);
                    // sufficient increase along the projected displacement
                    let along: f64 = trial
                        .iter()
                        .zip(&theta)
                        .zip(&grad)
                        .map(|((t1, t0), g)| (t1 - t0) * g)
                        .sum();
                    let (trial_value, _) = self.penalized(&trial, mu);
                    if trial_value >= value + 1e-4 * along && trial_value > value {
                        theta = trial;
                        eta = try_eta;
                        accepted = true;
                        break;
                    }
                    try_eta *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
        }
        theta
    }

    /// Pull a candidate outside the KL ball back onto its boundary along
    /// the segment from the start point.
    fn snap_to_ball(&self, theta: &[f64]) -> Vec<f64> {
        if self.problem.kl(theta) <= self.cfg.epsilon {
            return theta.to_vec();
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let blend: Vec<f64> = self
                .theta_start
                .iter()
                .zip(theta)
                .map(|(s, t)| s + mid * (t - s))
                .collect();
            if self.problem.kl(&blend) <= self.cfg.epsilon {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.theta_start
            .iter()
            .zip(theta)
            .map(|(s, t)| s + lo * (t - s))
            .collect()
    }

    /// Compass search over single coordinates, accepting only feasible
    /// improvements. Trial points that leave the trust region are pulled
    /// back onto its boundary first; the combined move has a tangential
    /// component, which lets the search walk along the curved boundary
    /// where plain axis moves would always be rejected. Comparison is
    /// lexicographic: the goal objective first, then entropy as tie-break.
    fn polish(&mut self, start: Candidate) -> Candidate {
        let n = start.theta.len();
        let mut best = start;
        let mut scale = 0.1;
        let mut budget = 20_000usize;
        while scale > 1e-7 && budget > 0 {
            let mut improved = false;
            for j in 0..n {
                for sign in [1.0, -1.0] {
                    if budget == 0 {
                        break;
                    }
                    budget -= 1;
                    self.iters += 1;
                    let mut trial = best.theta.clone();
                    trial[j] += sign * scale;
                    let trial = self.problem.transform.projected(&trial);
                    let trial = self.snap_to_ball(&trial);
                    if trial == best.theta {
                        continue;
                    }
                    let cand = self.evaluate(trial);
                    if !self.valid(&cand) {
                        continue;
                    }
                    let better = self.objective(&cand) > self.objective(&best) + 1e-13
                        || ((self.objective(&cand) - self.objective(&best)).abs() <= 1e-13
                            && cand.entropy > best.entropy + 1e-12);
                    if better {
                        best = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                scale *= 0.5;
            }
        }
        best
    }

    fn run(&mut self) -> (Candidate, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.restart_seed);
        let noise = Normal::new(0.0, (0.5 * (2.0 * self.cfg.epsilon).sqrt()).min(0.25)).unwrap();

        let mut starts = vec![self.theta_start.clone()];

        // The objective restricted to the trust-region boundary can have
        // several local maxima and gradient ascent from the center funnels
        // into one of them, so seed every axis direction (and the diagonals
        // when there are only two parameters) snapped onto the boundary.
        let d = self.theta_start.len();
        let reach = 4.0 * (2.0 * self.cfg.epsilon).sqrt();
        let boundary_seed = |offsets: &[(usize, f64)]| {
            let mut t = self.theta_start.clone();
            for &(j, delta) in offsets {
                t[j] += delta;
            }
            self.problem.transform.project(&mut t);
            t
        };
        let mut raw_seeds = Vec::new();
        for j in 0..d {
            for sign in [1.0, -1.0] {
                raw_seeds.push(boundary_seed(&[(j, sign * reach)]));
            }
        }
        if d == 2 {
            let leg = reach * std::f64::consts::FRAC_1_SQRT_2;
            for s0 in [1.0, -1.0] {
                for s1 in [1.0, -1.0] {
                    raw_seeds.push(boundary_seed(&[(0, s0 * leg), (1, s1 * leg)]));
                }
            }
        }
        for seed in raw_seeds {
            starts.push(self.snap_to_ball(&seed));
        }

        for _ in 0..self.cfg.restarts {
            let jittered: Vec<f64> = self
                .theta_start
                .iter()
                .map(|t| t + noise.sample(&mut rng))
                .collect();
            starts.push(self.problem.transform.projected(&jittered));
        }

        // the start point is always a candidate; listed first so exact
        // ties resolve toward it
        let mut candidates = vec![self.evaluate(self.theta_start.clone())];
        for s in starts {
            let theta = self.ascend(s);
            let theta = self.snap_to_ball(&theta);
            let cand = self.evaluate(theta);
            let cand = if self.valid(&cand) {
                self.polish(cand)
            } else {
                cand
            };
            candidates.push(cand);
        }

        let mut best: Option<Candidate> = None;
        for cand in candidates {
            if !self.valid(&cand) {
                continue;
            }
            match &best {
                None => best = Some(cand),
                Some(b) => {
                    let better = self.objective(&cand) > self.objective(b) + 1e-12
                        || ((self.objective(&cand) - self.objective(b)).abs() <= 1e-12
                            && cand.entropy > b.entropy + 1e-12);
                    if better {
                        best = Some(cand);
                    }
                }
            }
        }
        match best {
            Some(b) => (b, true),
            None => (self.evaluate(self.theta_start.clone()), false),
        }
    }
}

fn run_goal(
    phi_from: &DistributionSpec,
    records: &[EpisodeRecord],
    cfg: &StepConfig,
    goal: Goal,
) -> Result<(Candidate, bool, usize, f64)> {
    cfg.validate()?;
    let problem = Problem::new(phi_from, records, cfg.clip)?;
    let theta_start = problem.transform.to_theta(phi_from);
    let entropy_start = problem.entropy(&theta_start);
    let g_start = problem.g_hat(&theta_start);
    let mut solver = Solver {
        problem: &problem,
        cfg,
        goal,
        theta_start,
        entropy_start,
        g_start,
        iters: 0,
    };
    let (best, found) = solver.run();
    Ok((best, found, solver.iters, g_start))
}

/// The main distribution update: maximize entropy subject to the estimated
/// success staying at or above alpha and the KL from `phi_start` staying
/// within the trust region. Success weights are referenced to `phi_start`.
pub fn doraemon_step(
    phi_start: &DistributionSpec,
    records: &[EpisodeRecord],
    cfg: &StepConfig,
) -> Result<StepResult> {
    cfg.validate()?;
    if cfg.start_check == StartCheck::Enforce {
        let problem = Problem::new(phi_start, records, cfg.clip)?;
        let mc = problem.mc_rate();
        if mc < cfg.alpha {
            return Err(Error::InfeasibleStart {
                estimated: mc,
                alpha: cfg.alpha,
            });
        }
    }
    let (best, found, iters, _) = run_goal(phi_start, records, cfg, Goal::MaxEntropy)?;
    Ok(finish(phi_start, best, found, iters, StepStatus::MainStepOk))
}

/// The feasibility-restoration update: maximize the estimated success
/// inside the trust region around `phi_current`.
pub fn backup_step(
    phi_current: &DistributionSpec,
    records: &[EpisodeRecord],
    cfg: &StepConfig,
) -> Result<StepResult> {
    let (best, found, iters, _) = run_goal(phi_current, records, cfg, Goal::MaxSuccess)?;
    Ok(finish(
        phi_current,
        best,
        found,
        iters,
        StepStatus::BackupStepOk,
    ))
}

fn finish(
    phi_from: &DistributionSpec,
    best: Candidate,
    found: bool,
    iters: usize,
    ok_status: StepStatus,
) -> StepResult {
    if !found {
        return StepResult {
            phi_next: phi_from.clone(),
            achieved: Achieved {
                entropy: best.entropy,
                // phi_next is phi_from itself
                kl_from_start: 0.0,
                estimated_success: best.g,
            },
            status: StepStatus::Stalled,
            solver_iters: iters,
        };
    }
    StepResult {
        phi_next: spec_of(phi_from, &best.theta),
        achieved: Achieved {
            entropy: best.entropy,
            kl_from_start: best.kl,
            estimated_success: best.g,
        },
        status: ok_status,
        solver_iters: iters,
    }
}

fn spec_of(phi_from: &DistributionSpec, theta: &[f64]) -> DistributionSpec {
    use super::transform::Transform;
    Transform::new(phi_from.family(), phi_from.support().clone()).to_spec(theta)
}
