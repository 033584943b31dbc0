mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;

use doraemon::distributions::{BoundedSupport, DistributionSpec};
use doraemon::environments::{feasible_half_width, plane_rollout, InclinedPlaneConfig};
use doraemon::learner::{plane_controller, CemConfig, CemTrainer, HistoryPolicy, Trainer};

fn fresh_trainer() -> CemTrainer {
    let env = InclinedPlaneConfig::default();
    let policy = HistoryPolicy::zeros(5, 2, vec![], env.a_max);
    CemTrainer::new(env, CemConfig::default(), policy).unwrap()
}

/// Success fraction of the policy over fresh episodes at a fixed
/// inclination.
fn eval_at(env: &InclinedPlaneConfig, policy: &HistoryPolicy, omega: f64, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..n)
        .filter(|_| plane_rollout(env, plane_controller(policy, env), omega, &mut rng).success)
        .count();
    hits as f64 / n as f64
}

/// Mean return over a fixed evaluation set of (omega, start seed) pairs.
fn eval_set_return(env: &InclinedPlaneConfig, policy: &HistoryPolicy, set: &[(f64, u64)]) -> f64 {
    let total: f64 = set
        .iter()
        .map(|&(omega, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            plane_rollout(env, plane_controller(policy, env), omega, &mut rng)
                .summary
                .total_return
        })
        .sum();
    total / set.len() as f64
}

#[test]
fn record_dynamics_match_the_sampling_distribution() {
    let support = BoundedSupport::scalar(-0.6, 0.3).unwrap();
    let spec = DistributionSpec::beta(support, vec![2.5], vec![1.5]).unwrap();
    let mut t = fresh_trainer();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut unit_samples = Vec::new();
    for _ in 0..40 {
        let (records, _) = t.collect_and_train(&spec, 50, &mut rng).unwrap();
        assert_eq!(records.len(), 50);
        for r in &records {
            unit_samples.push((r.xi[0] + 0.6) / 0.9);
        }
    }
    assert!(common::ks_accepts(&mut unit_samples, |u| beta_reg(2.5, 1.5, u)));
}

#[test]
fn nodr_learner_masters_the_flat_plane() {
    // near-degenerate sampler pinned at omega = 0
    let support = BoundedSupport::scalar(-1e-9, 1e-9).unwrap();
    let spec = DistributionSpec::beta(support, vec![1.0], vec![1.0]).unwrap();
    let env = InclinedPlaneConfig::default();
    let mut final_rates = Vec::new();
    for seed in 0..10u64 {
        let mut t = fresh_trainer();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut rate = 0.0;
        for epoch in 0..200 {
            let (_, policy) = t.collect_and_train(&spec, 50, &mut rng).unwrap();
            if (epoch + 1) % 10 == 0 {
                rate = eval_at(&env, &policy, 0.0, 100, 9_000 + seed);
                if rate >= 0.99 {
                    break;
                }
            }
        }
        final_rates.push(rate);
    }
    let mean = final_rates.iter().sum::<f64>() / final_rates.len() as f64;
    assert!(
        mean >= 0.95,
        "seed-averaged held-out success {mean:.3} (per seed: {final_rates:?})"
    );
}

#[test]
fn elite_selection_improves_returns_on_a_stationary_task() {
    let support = BoundedSupport::scalar(-0.5, 0.5).unwrap();
    let spec = DistributionSpec::beta(support, vec![2.0], vec![2.0]).unwrap();
    let env = InclinedPlaneConfig::default();
    let eval_set: Vec<(f64, u64)> = (0..25)
        .map(|i| (-0.45 + 0.9 * i as f64 / 24.0, 500 + i as u64))
        .collect();
    let mut improved = 0;
    for seed in 0..10u64 {
        let mut t = fresh_trainer();
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let start = eval_set_return(&env, t.policy(), &eval_set);
        let mut policy = t.policy().clone();
        for _ in 0..80 {
            policy = t.collect_and_train(&spec, 50, &mut rng).unwrap().1;
        }
        let end = eval_set_return(&env, &policy, &eval_set);
        if end >= start {
            improved += 1;
        }
    }
    assert!(improved >= 9, "improved in only {improved} of 10 runs");
}

#[test]
fn infeasible_inclinations_stay_unsolved() {
    // concentrated far beyond the feasibility boundary
    let env = InclinedPlaneConfig::default();
    let omega_c = feasible_half_width(&env).unwrap();
    let support = BoundedSupport::scalar(1.1, 1.3).unwrap();
    assert!(1.1 > omega_c);
    let spec = DistributionSpec::beta(support, vec![2.0], vec![2.0]).unwrap();
    let mut t = fresh_trainer();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..30 {
        let (records, policy) = t.collect_and_train(&spec, 30, &mut rng).unwrap();
        assert!(records.iter().all(|r| !r.success));
        assert_eq!(eval_at(&env, &policy, 1.2, 20, 17), 0.0);
    }
}
