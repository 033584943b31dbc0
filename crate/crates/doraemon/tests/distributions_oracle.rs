mod common;

use common::{integrate, integrate_unit_log, ks_accepts};
use doraemon::distributions::{BoundedSupport, DistributionSpec, Family};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::ContinuousCDF;
use statrs::function::gamma::ln_gamma;

const QUAD_TOL: f64 = 1e-9;

fn random_support(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let lo = rng.gen_range(-5.0..5.0);
    let width = rng.gen_range(0.1..10.0);
    (lo, lo + width)
}

fn random_shape(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range((0.05f64).ln()..(100.0f64).ln()).exp()
}

// oracle-side Beta log density on the unit interval, from raw shapes
fn beta_ld(a: f64, b: f64) -> impl Fn(f64, f64) -> f64 {
    let ln_b = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    move |ln_u: f64, ln_1mu: f64| (a - 1.0) * ln_u + (b - 1.0) * ln_1mu - ln_b
}

fn random_tg_1d_on(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> DistributionSpec {
    let w = hi - lo;
    let mean = rng.gen_range(lo - 0.2 * w..hi + 0.2 * w);
    let std = rng.gen_range((0.05f64 * w).ln()..(4.0 * w).ln()).exp();
    DistributionSpec::truncated_gaussian(
        BoundedSupport::scalar(lo, hi).unwrap(),
        vec![mean],
        vec![std],
    )
    .unwrap()
}

fn entropy_by_quadrature(spec: &DistributionSpec) -> f64 {
    let (lo, hi) = (spec.support().lo()[0], spec.support().hi()[0]);
    integrate(
        |x| {
            let lp = spec.log_pdf_permissive(&[x]);
            -lp.exp() * lp
        },
        lo,
        hi,
        QUAD_TOL,
    )
}

fn kl_by_quadrature(p: &DistributionSpec, q: &DistributionSpec) -> f64 {
    let (lo, hi) = (p.support().lo()[0], p.support().hi()[0]);
    integrate(
        |x| {
            let lp = p.log_pdf_permissive(&[x]);
            let lq = q.log_pdf_permissive(&[x]);
            lp.exp() * (lp - lq)
        },
        lo,
        hi,
        QUAD_TOL,
    )
}

fn mass_by_quadrature(spec: &DistributionSpec) -> f64 {
    let (lo, hi) = (spec.support().lo()[0], spec.support().hi()[0]);
    integrate(|x| spec.log_pdf_permissive(&[x]).exp(), lo, hi, QUAD_TOL)
}

#[test]
fn beta_entropy_and_kl_match_quadrature_on_100_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    for i in 0..100 {
        let (lo, hi) = random_support(&mut rng);
        let (a, b) = (random_shape(&mut rng), random_shape(&mut rng));
        let support = BoundedSupport::scalar(lo, hi).unwrap();
        let p = DistributionSpec::beta(support.clone(), vec![a], vec![b]).unwrap();

        let ld_p = beta_ld(a, b);
        let mass = integrate_unit_log(&ld_p, |_, _| 1.0, QUAD_TOL);
        assert!(
            (mass - 1.0).abs() < 1e-7,
            "case {i}: density integrates to {mass} for {p:?}"
        );

        // entropy in physical units is the unit-interval integral shifted
        // by the log interval width (change of variables, no closed form)
        let h_quad = integrate_unit_log(&ld_p, |lu, l1| -ld_p(lu, l1), QUAD_TOL) + (hi - lo).ln();
        let h = p.entropy();
        assert!(
            (h - h_quad).abs() < 1e-6,
            "case {i}: entropy {h} vs quadrature {h_quad} for {p:?}"
        );

        // KL is invariant under the shared affine rescaling
        let (a2, b2) = (random_shape(&mut rng), random_shape(&mut rng));
        let q = DistributionSpec::beta(support, vec![a2], vec![b2]).unwrap();
        let ld_q = beta_ld(a2, b2);
        let kl_quad =
            integrate_unit_log(&ld_p, |lu, l1| ld_p(lu, l1) - ld_q(lu, l1), QUAD_TOL);
        let kl = p.kl_divergence(&q).unwrap();
        assert!(
            (kl - kl_quad).abs() < 1e-6,
            "case {i}: kl {kl} vs quadrature {kl_quad} for {p:?} || {q:?}"
        );
        assert!(kl >= -1e-12);
    }
}

#[test]
fn truncated_gaussian_entropy_and_kl_match_quadrature_on_100_specs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    for i in 0..100 {
        let (lo, hi) = random_support(&mut rng);
        let p = random_tg_1d_on(lo, hi, &mut rng);
        assert!(
            (mass_by_quadrature(&p) - 1.0).abs() < 1e-7,
            "case {i}: density does not integrate to one: {p:?}"
        );
        let h_quad = entropy_by_quadrature(&p);
        let h = p.entropy();
        assert!(
            (h - h_quad).abs() < 1e-6,
            "case {i}: entropy {h} vs quadrature {h_quad} for {p:?}"
        );

        let q = random_tg_1d_on(lo, hi, &mut rng);
        let kl_quad = kl_by_quadrature(&p, &q);
        let kl = p.kl_divergence(&q).unwrap();
        assert!(
            (kl - kl_quad).abs() < 1e-6,
            "case {i}: kl {kl} vs quadrature {kl_quad} for {p:?} || {q:?}"
        );
        assert!(kl >= -1e-12);
    }
}

#[test]
fn uniform_beta_entropy_is_exactly_zero_on_unit_interval() {
    let spec = DistributionSpec::max_entropy(BoundedSupport::unit(1), Family::IndependentBeta);
    assert_eq!(spec.entropy(), 0.0);
}

#[test]
fn product_entropy_matches_two_dimensional_quadrature() {
    let support = BoundedSupport::new(vec![0.0, -2.0], vec![1.0, 3.0]).unwrap();
    let spec =
        DistributionSpec::beta(support.clone(), vec![2.5, 0.8], vec![1.3, 4.0]).unwrap();
    // iterated tanh-sinh over both axes
    let h2 = integrate(
        |x0| {
            integrate(
                |x1| {
                    let lp = spec.log_pdf_permissive(&[x0, x1]);
                    -lp.exp() * lp
                },
                -2.0,
                3.0,
                1e-10,
            )
        },
        0.0,
        1.0,
        1e-9,
    );
    assert!(
        (spec.entropy() - h2).abs() < 1e-6,
        "{} vs {}",
        spec.entropy(),
        h2
    );
}

#[test]
fn beta_sampler_matches_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(2003);
    for (a, b) in [(1.0, 1.0), (0.5, 2.0), (100.0, 100.0), (3.0, 0.7)] {
        let spec = DistributionSpec::beta(
            BoundedSupport::scalar(-2.0, 4.0).unwrap(),
            vec![a],
            vec![b],
        )
        .unwrap();
        let mut xs: Vec<f64> = spec
            .sample(4000, &mut rng)
            .unwrap()
            .into_iter()
            .map(|v| v[0])
            .collect();
        let ref_dist = statrs::distribution::Beta::new(a, b).unwrap();
        assert!(
            ks_accepts(&mut xs, |x| ref_dist.cdf((x + 2.0) / 6.0)),
            "KS rejected Beta({a},{b}) sampler"
        );
    }
}

#[test]
fn truncated_gaussian_sampler_matches_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(2004);
    for (mean, std) in [(0.0, 1.0), (1.8, 0.6), (-2.5, 2.0)] {
        let spec = DistributionSpec::truncated_gaussian(
            BoundedSupport::scalar(-2.0, 2.0).unwrap(),
            vec![mean],
            vec![std],
        )
        .unwrap();
        let mut xs: Vec<f64> = spec
            .sample(4000, &mut rng)
            .unwrap()
            .into_iter()
            .map(|v| v[0])
            .collect();
        let parent = statrs::distribution::Normal::new(mean, std).unwrap();
        let z = parent.cdf(2.0) - parent.cdf(-2.0);
        let lo_mass = parent.cdf(-2.0);
        assert!(
            ks_accepts(&mut xs, |x| (parent.cdf(x) - lo_mass) / z),
            "KS rejected truncated gaussian ({mean},{std}) sampler"
        );
    }
}
