//! Brute-force references for the constrained distribution updates: a dense
//! grid search over 1-dim Beta parameters restricted to the KL ball, a fixed
//! suite of main/backup step cases checked against it, and finite-difference
//! gradient comparisons. Everything here recomputes entropy, KL, and the
//! weighted success estimate from scratch via statrs so the comparison does
//! not share code with the crate under test.

use doraemon::distributions::{BoundedSupport, DistributionSpec, Family, Params, MIN_SHAPE};
use doraemon::estimator::{is_success_rate, mc_success_rate, EpisodeRecord};
use doraemon::optimizer::{backup_step, doraemon_step, solver_gradients, StepConfig, StepResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

pub fn ln_b(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn h_beta_unit(a: f64, b: f64) -> f64 {
    ln_b(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
        + (a + b - 2.0) * digamma(a + b)
}

pub fn kl_beta(a: f64, b: f64, a0: f64, b0: f64) -> f64 {
    ln_b(a0, b0) - ln_b(a, b)
        + (a - a0) * digamma(a)
        + (b - b0) * digamma(b)
        + (a0 - a + b0 - b) * digamma(a + b)
}

/// Bounding box in (ln a, ln b) for the set KL <= eps around (a0, b0),
/// from bisected crossings along eight directions. The ball is a thin
/// diagonal ellipse for concentrated shapes, so axis crossings alone
/// would undershoot; diagonals catch the long axis and a 1.4 margin
/// covers the remaining curvature. The lower edges clamp to the shape
/// floor the solver itself observes.
pub fn ball_box(a0: f64, b0: f64, eps: f64) -> ([f64; 2], [f64; 2]) {
    let t0 = [a0.ln(), b0.ln()];
    let kl_of = |ta: f64, tb: f64| kl_beta(ta.exp(), tb.exp(), a0, b0);
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let dirs: [[f64; 2]; 8] = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [inv, inv],
        [inv, -inv],
        [-inv, inv],
        [-inv, -inv],
    ];
    let mut half = [0.0f64; 2];
    for dir in dirs {
        let mut s_hi = 1e-3;
        while kl_of(t0[0] + s_hi * dir[0], t0[1] + s_hi * dir[1]) <= eps && s_hi < 8.0 {
            s_hi *= 2.0;
        }
        let mut s_lo = 0.0;
        let mut s_up = s_hi.min(8.0);
        for _ in 0..80 {
            let mid = 0.5 * (s_lo + s_up);
            if kl_of(t0[0] + mid * dir[0], t0[1] + mid * dir[1]) <= eps {
                s_lo = mid;
            } else {
                s_up = mid;
            }
        }
        let s = 0.5 * (s_lo + s_up);
        half[0] = half[0].max(1.4 * s * dir[0].abs());
        half[1] = half[1].max(1.4 * s * dir[1].abs());
    }
    let t_floor = MIN_SHAPE.ln();
    (
        [(t0[0] - half[0]).max(t_floor), t0[0] + half[0]],
        [(t0[1] - half[1]).max(t_floor), t0[1] + half[1]],
    )
}

pub fn beta1(lo: f64, hi: f64, a: f64, b: f64) -> DistributionSpec {
    let support = BoundedSupport::scalar(lo, hi).unwrap();
    DistributionSpec::beta(support, vec![a], vec![b]).unwrap()
}

pub fn beta_params_1d(spec: &DistributionSpec) -> (f64, f64) {
    match spec.params() {
        Params::Beta { a, b } => (a[0], b[0]),
        _ => panic!("expected a Beta spec"),
    }
}

pub fn records_from<F: Fn(&[f64]) -> bool>(
    spec: &DistributionSpec,
    k: usize,
    seed: u64,
    pred: F,
) -> Vec<EpisodeRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spec.sample(k, &mut rng)
        .unwrap()
        .into_iter()
        .map(|xi| {
            let success = pred(&xi);
            EpisodeRecord {
                return_value: if success { 1.0 } else { 0.0 },
                success,
                steps: 1,
                xi,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub obj: f64,
    pub theta: [f64; 2],
}

/// Exhaustive search over (ln a, ln b) for the best objective inside the
/// KL ball around a 1-dim Beta start. The box is sized by bisecting the
/// KL = eps crossing along eight directions (the ball is a thin diagonal
/// ellipse for concentrated shapes, so axis crossings alone undershoot),
/// then every grid cell is tested against the exact ball condition. The
/// start point itself is always evaluated so exact ties favor it.
pub fn grid_oracle(
    start: &DistributionSpec,
    records: &[EpisodeRecord],
    eps: f64,
    min_g: Option<f64>,
    maximize_success: bool,
    clip: Option<f64>,
    n: usize,
) -> Oracle {
    let (a0, b0) = beta_params_1d(start);
    let lo = start.support().lo()[0];
    let w = start.support().width(0);
    let lnw = w.ln();
    let t0 = [a0.ln(), b0.ln()];
    let lnb0 = ln_b(a0, b0);

    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    for r in records.iter().filter(|r| r.success) {
        let u = (r.xi[0] - lo) / w;
        l1.push(u.ln());
        l2.push((1.0 - u).ln());
    }
    let s_count = l1.len();
    let k_total = records.len() as f64;
    let mc = s_count as f64 / k_total;
    let need_g = maximize_success || min_g.is_some();

    let (ax, bx) = ball_box(a0, b0, eps);

    let axis = |range: [f64; 2]| -> Vec<f64> {
        (0..n)
            .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let ta = axis(ax);
    let tb = axis(bx);
    let av: Vec<f64> = ta.iter().map(|t| t.exp()).collect();
    let bv: Vec<f64> = tb.iter().map(|t| t.exp()).collect();
    let lga: Vec<f64> = av.iter().map(|&a| ln_gamma(a)).collect();
    let lgb: Vec<f64> = bv.iter().map(|&b| ln_gamma(b)).collect();
    let dga: Vec<f64> = av.iter().map(|&a| digamma(a)).collect();
    let dgb: Vec<f64> = bv.iter().map(|&b| digamma(b)).collect();

    // Per-record weight factors split so each exponent stays moderate:
    // w_k(a, b) = exp((a-a0) ln u_k) * exp((b-b0) ln(1-u_k)) * exp(lnB0 - lnB).
    let mut at = vec![0.0f64; n * s_count];
    let mut bt = vec![0.0f64; n * s_count];
    if need_g {
        for i in 0..n {
            for k in 0..s_count {
                at[i * s_count + k] = ((av[i] - a0) * l1[k]).exp();
                bt[i * s_count + k] = ((bv[i] - b0) * l2[k]).exp();
            }
        }
    }

    let center_obj = if maximize_success {
        mc
    } else {
        h_beta_unit(a0, b0) + lnw
    };
    let center_ok = min_g.map_or(true, |cut| mc >= cut);

    let row_best: Vec<Option<(f64, [f64; 2])>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = av[i];
            let am1 = a - 1.0;
            let a_row = &at[i * s_count..(i + 1) * s_count];
            let mut best: Option<(f64, [f64; 2])> = None;
            for j in 0..n {
                let b = bv[j];
                let s = a + b;
                let lg_s = ln_gamma(s);
                let dg_s = digamma(s);
                let lnb = lga[i] + lgb[j] - lg_s;
                let kl = lnb0 - lnb + (a - a0) * dga[i] + (b - b0) * dgb[j]
                    + (a0 - a + b0 - b) * dg_s;
                if !(kl <= eps) {
                    continue;
                }
                let g = if need_g {
                    let f = (lnb0 - lnb).exp();
                    let b_row = &bt[j * s_count..(j + 1) * s_count];
                    let mut acc = 0.0;
                    match clip {
                        None => {
                            for k in 0..s_count {
                                acc += a_row[k] * b_row[k];
                            }
                            acc *= f;
                        }
                        Some(c) => {
                            for k in 0..s_count {
                                acc += (a_row[k] * b_row[k] * f).min(c);
                            }
                        }
                    }
                    acc / k_total
                } else {
                    0.0
                };
                if let Some(cut) = min_g {
                    if g < cut {
                        continue;
                    }
                }
                let obj = if maximize_success {
                    g
                } else {
                    lnb - am1 * dga[i] - (b - 1.0) * dgb[j] + (s - 2.0) * dg_s + lnw
                };
                if best.map_or(true, |(bo, _)| obj > bo) {
                    best = Some((obj, [ta[i], tb[j]]));
                }
            }
            best
        })
        .collect();

    let mut best = if center_ok {
        Some((center_obj, t0))
    } else {
        None
    };
    for rb in row_best.into_iter().flatten() {
        if best.map_or(true, |(bo, _)| rb.0 > bo) {
            best = Some(rb);
        }
    }
    let (obj, theta) = best.expect("oracle found no feasible point");
    Oracle { obj, theta }
}

/// Best unit-interval entropy reachable per KL budget for one Beta
/// marginal: entry i is the max entropy over grid cells with
/// KL <= (i + 1) / nb * eps. Lets a multi-dim entropy-only problem be
/// solved exactly by sweeping the budget split between dimensions.
pub fn entropy_budget_curve(a0: f64, b0: f64, eps: f64, n: usize, nb: usize) -> Vec<f64> {
    let (ax, bx) = ball_box(a0, b0, eps);
    let axis = |range: [f64; 2]| -> Vec<f64> {
        (0..n)
            .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let av: Vec<f64> = axis(ax).iter().map(|t| t.exp()).collect();
    let bv: Vec<f64> = axis(bx).iter().map(|t| t.exp()).collect();
    let mut curve = vec![f64::NEG_INFINITY; nb];
    curve[0] = h_beta_unit(a0, b0);
    for &a in &av {
        for &b in &bv {
            let kl = kl_beta(a, b, a0, b0);
            if !(kl <= eps) {
                continue;
            }
            let bin = ((kl / eps * nb as f64) as usize).min(nb - 1);
            let h = h_beta_unit(a, b);
            if h > curve[bin] {
                curve[bin] = h;
            }
        }
    }
    for i in 1..nb {
        curve[i] = curve[i].max(curve[i - 1]);
    }
    curve
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Main,
    Backup,
}

pub struct OracleCase {
    pub name: &'static str,
    pub op: Op,
    pub start: DistributionSpec,
    pub records: Vec<EpisodeRecord>,
    pub cfg: StepConfig,
}

fn case(
    name: &'static str,
    op: Op,
    start: DistributionSpec,
    records: Vec<EpisodeRecord>,
    alpha: f64,
    epsilon: f64,
    clip: Option<f64>,
) -> OracleCase {
    let mut cfg = StepConfig::new(alpha, epsilon);
    cfg.clip = clip;
    OracleCase {
        name,
        op,
        start,
        records,
        cfg,
    }
}

/// The fixed 1-dim Beta suite: twelve main steps and eight backup steps.
pub fn suite() -> Vec<OracleCase> {
    let unit = |a, b| beta1(0.0, 1.0, a, b);
    let mut cases = Vec::new();

    let s1 = unit(100.0, 100.0);
    let r1 = records_from(&s1, 50, 11, |_| true);
    cases.push(case("all_success_tight", Op::Main, s1, r1, 0.5, 0.05, None));

    let s2 = unit(100.0, 100.0);
    let r2 = records_from(&s2, 20, 12, |_| true);
    cases.push(case(
        "entropy_only_concentrated",
        Op::Main,
        s2,
        r2,
        0.0,
        0.05,
        None,
    ));

    let s3 = beta1(-1.0, 2.0, 3.0, 7.0);
    let r3 = records_from(&s3, 30, 13, |xi| xi[0] < 0.5);
    cases.push(case("entropy_only_skewed", Op::Main, s3, r3, 0.0, 0.1, None));

    let s4 = unit(0.3, 0.3);
    let r4 = records_from(&s4, 20, 14, |_| true);
    cases.push(case(
        "entropy_only_low_shapes",
        Op::Main,
        s4,
        r4,
        0.0,
        0.02,
        None,
    ));

    let s5 = unit(100.0, 100.0);
    let r5 = records_from(&s5, 40, 15, |_| true);
    cases.push(case("tiny_trust_region", Op::Main, s5, r5, 0.5, 1e-8, None));

    let s6 = unit(2.0, 2.0);
    let r6 = records_from(&s6, 60, 16, |xi| xi[0] < 0.6);
    cases.push(case("mixed_center", Op::Main, s6, r6, 0.5, 0.05, None));

    let s7 = unit(4.0, 2.0);
    let r7 = records_from(&s7, 60, 17, |xi| xi[0] < 0.8);
    cases.push(case("mixed_skew", Op::Main, s7, r7, 0.55, 0.1, None));

    let s8 = unit(1.5, 1.5);
    let r8 = records_from(&s8, 80, 18, |xi| (0.3..=0.7).contains(&xi[0]));
    cases.push(case("interior_band", Op::Main, s8, r8, 0.35, 0.08, None));

    let s9 = unit(5.0, 1.2);
    let r9 = records_from(&s9, 60, 19, |xi| xi[0] > 0.55);
    cases.push(case("upper_tail", Op::Main, s9, r9, 0.7, 0.06, None));

    let s10 = unit(1.0, 1.0);
    let r10 = records_from(&s10, 30, 20, |xi| xi[0] < 0.8);
    cases.push(case("uniform_start", Op::Main, s10, r10, 0.5, 0.05, None));

    let s11 = beta1(-5.0, 15.0, 6.0, 3.0);
    let r11 = records_from(&s11, 50, 21, |xi| xi[0] < 10.0);
    cases.push(case("shifted_support", Op::Main, s11, r11, 0.5, 0.08, None));

    let s12 = unit(0.7, 4.0);
    let r12 = records_from(&s12, 20, 22, |_| true);
    cases.push(case(
        "one_sided_low_shape",
        Op::Main,
        s12,
        r12,
        0.0,
        0.05,
        None,
    ));

    let s13 = unit(2.0, 2.0);
    let r13 = records_from(&s13, 40, 23, |_| false);
    cases.push(case(
        "flat_all_failures",
        Op::Backup,
        s13,
        r13,
        0.5,
        0.05,
        None,
    ));

    let s14 = unit(2.0, 2.0);
    let r14 = records_from(&s14, 80, 24, |xi| xi[0] < 0.3);
    cases.push(case(
        "success_cluster_low",
        Op::Backup,
        s14,
        r14,
        0.5,
        0.1,
        None,
    ));

    let s15 = unit(3.0, 3.0);
    let r15 = records_from(&s15, 50, 25, |_| true);
    cases.push(case(
        "clipped_at_start",
        Op::Backup,
        s15,
        r15,
        0.5,
        0.05,
        Some(1.0),
    ));

    let s16 = unit(2.0, 5.0);
    let r16 = records_from(&s16, 70, 26, |xi| xi[0] > 0.7);
    cases.push(case(
        "success_cluster_high",
        Op::Backup,
        s16,
        r16,
        0.5,
        0.08,
        None,
    ));

    let s17 = unit(2.0, 2.0);
    let r17 = records_from(&s17, 30, 27, |xi| xi[0] < 0.5);
    cases.push(case(
        "clipped_mixed",
        Op::Backup,
        s17,
        r17,
        0.5,
        0.1,
        Some(2.0),
    ));

    let s18 = unit(2.0, 3.0);
    let r18 = records_from(&s18, 40, 28, |xi| xi[0] < 0.4);
    cases.push(case(
        "backup_tiny_trust_region",
        Op::Backup,
        s18,
        r18,
        0.5,
        1e-8,
        None,
    ));

    let s19 = beta1(2.0, 6.0, 1.2, 1.2);
    let r19 = records_from(&s19, 60, 29, |xi| xi[0] < 3.2);
    cases.push(case(
        "backup_shifted_support",
        Op::Backup,
        s19,
        r19,
        0.5,
        0.12,
        None,
    ));

    let s20 = unit(1.0, 3.0);
    let r20 = records_from(&s20, 50, 30, |xi| xi[0] < 0.9);
    cases.push(case(
        "backup_mostly_feasible",
        Op::Backup,
        s20,
        r20,
        0.5,
        0.06,
        None,
    ));

    cases
}

pub struct CaseReport {
    pub name: &'static str,
    pub op: Op,
    pub cfg: StepConfig,
    pub h_start: f64,
    pub mc_start: f64,
    pub result: StepResult,
    pub oracle: Oracle,
    /// The quantity the oracle bounds: entropy for main steps, the
    /// weighted success estimate for backup steps.
    pub solver_obj: f64,
}

pub fn run_case(case: &OracleCase) -> CaseReport {
    let mc_start = mc_success_rate(&case.records).unwrap();
    let h_start = case.start.entropy();
    let (result, oracle, solver_obj) = match case.op {
        Op::Main => {
            assert!(
                mc_start >= case.cfg.alpha,
                "{}: suite setup must start feasible (mc {mc_start})",
                case.name
            );
            let res = doraemon_step(&case.start, &case.records, &case.cfg).unwrap();
            let oracle = grid_oracle(
                &case.start,
                &case.records,
                case.cfg.epsilon,
                Some(case.cfg.alpha - 0.5 * case.cfg.tol_g),
                false,
                case.cfg.clip,
                2000,
            );
            let obj = res.achieved.entropy;
            (res, oracle, obj)
        }
        Op::Backup => {
            let res = backup_step(&case.start, &case.records, &case.cfg).unwrap();
            let oracle = grid_oracle(
                &case.start,
                &case.records,
                case.cfg.epsilon,
                None,
                true,
                case.cfg.clip,
                2000,
            );
            let obj = res.achieved.estimated_success;
            (res, oracle, obj)
        }
    };
    CaseReport {
        name: case.name,
        op: case.op,
        cfg: case.cfg.clone(),
        h_start,
        mc_start,
        result,
        oracle,
        solver_obj,
    }
}

fn perturb(spec: &DistributionSpec, coord: usize, delta: f64) -> DistributionSpec {
    let support = spec.support().clone();
    let d = support.dims();
    match spec.params() {
        Params::Beta { a, b } => {
            let mut a = a.clone();
            let mut b = b.clone();
            if coord < d {
                a[coord] *= delta.exp();
            } else {
                b[coord - d] *= delta.exp();
            }
            DistributionSpec::beta(support, a, b).unwrap()
        }
        Params::TruncatedGaussian { mean, std } => {
            let mut mean = mean.clone();
            let mut std = std.clone();
            if coord < d {
                mean[coord] += delta;
            } else {
                std[coord - d] *= delta.exp();
            }
            DistributionSpec::truncated_gaussian(support, mean, std).unwrap()
        }
    }
}

fn random_support<R: Rng>(rng: &mut R, d: usize) -> BoundedSupport {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for _ in 0..d {
        let l = rng.gen_range(-3.0..1.0);
        let w = rng.gen_range(0.5..4.0);
        lo.push(l);
        hi.push(l + w);
    }
    BoundedSupport::new(lo, hi).unwrap()
}

fn random_spec<R: Rng>(
    rng: &mut R,
    family: Family,
    support: &BoundedSupport,
    mean_in_support: bool,
) -> DistributionSpec {
    let d = support.dims();
    match family {
        Family::IndependentBeta => {
            let shape = |rng: &mut R| (rng.gen_range(0.2f64.ln()..30.0f64.ln())).exp();
            let a = (0..d).map(|_| shape(rng)).collect();
            let b = (0..d).map(|_| shape(rng)).collect();
            DistributionSpec::beta(support.clone(), a, b).unwrap()
        }
        Family::IndependentTruncatedGaussian => {
            let mut mean = Vec::new();
            let mut std = Vec::new();
            for dim in 0..d {
                let w = support.width(dim);
                let lo = support.lo()[dim];
                if mean_in_support {
                    mean.push(rng.gen_range(lo + 0.1 * w..lo + 0.9 * w));
                    std.push(w * (rng.gen_range(0.1f64.ln()..1.5f64.ln())).exp());
                } else {
                    mean.push(rng.gen_range(lo - 0.2 * w..lo + 1.2 * w));
                    std.push(w * (rng.gen_range(0.05f64.ln()..2.0f64.ln())).exp());
                }
            }
            DistributionSpec::truncated_gaussian(support.clone(), mean, std).unwrap()
        }
    }
}

pub struct GradErrs {
    pub entropy: f64,
    pub kl: f64,
    pub success: f64,
}

/// Compares solver gradients against central finite differences in the
/// transformed coordinates (h = 1e-5) over 50 random specs per family.
/// Relative error uses max(1e-3, |analytic|, |difference|) as denominator
/// so near-zero components are judged absolutely.
pub fn gradient_max_rel_errors() -> GradErrs {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut errs = GradErrs {
        entropy: 0.0,
        kl: 0.0,
        success: 0.0,
    };
    let h = 1e-5;
    for idx in 0..100 {
        let family = if idx < 50 {
            Family::IndependentBeta
        } else {
            Family::IndependentTruncatedGaussian
        };
        let d = if idx % 3 == 0 { 3 } else { 1 };
        let support = random_support(&mut rng, d);
        let phi_ref = random_spec(&mut rng, family, &support, true);
        let phi = random_spec(&mut rng, family, &support, false);
        let records = {
            let mut sample_rng = ChaCha8Rng::seed_from_u64(9000 + idx);
            phi_ref
                .sample(25, &mut sample_rng)
                .unwrap()
                .into_iter()
                .enumerate()
                .map(|(k, xi)| EpisodeRecord {
                    xi,
                    return_value: 0.0,
                    success: k % 3 != 0,
                    steps: 1,
                })
                .collect::<Vec<_>>()
        };
        let grads = solver_gradients(&phi, &records, &phi_ref).unwrap();
        for coord in 0..2 * d {
            let plus = perturb(&phi, coord, h);
            let minus = perturb(&phi, coord, -h);
            let rel = |an: f64, fd: f64| (an - fd).abs() / an.abs().max(fd.abs()).max(1e-3);

            let fd_h = (plus.entropy() - minus.entropy()) / (2.0 * h);
            errs.entropy = errs.entropy.max(rel(grads.grad_entropy[coord], fd_h));

            let fd_kl = (plus.kl_divergence(&phi_ref).unwrap()
                - minus.kl_divergence(&phi_ref).unwrap())
                / (2.0 * h);
            errs.kl = errs.kl.max(rel(grads.grad_kl[coord], fd_kl));

            let fd_g = (is_success_rate(&records, &phi_ref, &plus, None).unwrap()
                - is_success_rate(&records, &phi_ref, &minus, None).unwrap())
                / (2.0 * h);
            errs.success = errs.success.max(rel(grads.grad_success[coord], fd_g));
        }
    }
    errs
}

/// Max |dKL/dtheta| component over random specs evaluated at phi = phi_ref,
/// where the divergence is at its minimum.
pub fn kl_grad_max_at_reference() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let mut worst = 0.0f64;
    for idx in 0..20 {
        let family = if idx % 2 == 0 {
            Family::IndependentBeta
        } else {
            Family::IndependentTruncatedGaussian
        };
        let d = 1 + idx % 3;
        let support = random_support(&mut rng, d);
        let phi = random_spec(&mut rng, family, &support, true);
        let records = vec![EpisodeRecord {
            xi: support.midpoint(),
            return_value: 1.0,
            success: true,
            steps: 1,
        }];
        let grads = solver_gradients(&phi, &records, &phi).unwrap();
        for component in grads.grad_kl {
            worst = worst.max(component.abs());
        }
    }
    worst
}
