#![allow(dead_code)]

//! Shared numeric helpers for the integration tests. Nothing here calls
//! back into the library's closed forms, so these double as independent
//! oracles.

pub mod oracle;

/// Tanh-sinh (double-exponential) quadrature of `f` over the open interval
/// (lo, hi). Nodes never land on the endpoints and endpoint singularities
/// that are merely integrable, like Beta densities with shapes below one,
/// converge at the usual double-exponential rate. Non-finite integrand
/// values are treated as zero; they only occur within a few ulps of the
/// endpoints where the weighted contribution is negligible.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let c = 0.5 * (lo + hi);
    let s = 0.5 * (hi - lo);
    let t_max = 6.5;
    let half_pi = std::f64::consts::FRAC_PI_2;

    // weighted integrand at node index k for spacing h, zero when the node
    // degenerates onto an endpoint
    let node = |k: i64, h: f64| -> f64 {
        let t = k as f64 * h;
        let sh = half_pi * t.sinh();
        let g = sh.tanh();
        let w = half_pi * t.cosh() / sh.cosh().powi(2);
        let x = c + s * g;
        if w > 0.0 && x > lo && x < hi {
            let v = f(x);
            if v.is_finite() {
                return w * v;
            }
        }
        0.0
    };

    let mut h = 1.0;
    let mut n = (t_max / h) as i64;
    let mut sum: f64 = (-n..=n).map(|k| node(k, h)).sum();
    let mut estimate = s * h * sum;
    for _ in 0..9 {
        h *= 0.5;
        n = (t_max / h) as i64;
        // nodes at odd multiples of the new spacing are the new ones
        sum += (1..=n).step_by(2).map(|k| node(k, h) + node(-k, h)).sum::<f64>();
        let next = s * h * sum;
        if (next - estimate).abs() <= tol * estimate.abs().max(1.0) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Tanh-sinh quadrature over u in (0, 1) of exp(ld(ln u, ln(1-u))) times
/// factor(ln u, ln(1-u)).
///
/// Node geometry stays in log space throughout: near the endpoints `u` and
/// `1 - u` are tracked as log offsets computed directly from the transform,
/// reaching offsets around exp(-745) where a plain f64 coordinate saturates
/// at one ulp (about 1e-16). That matters for Beta densities with shapes
/// near the admissible floor, where a macroscopic fraction of the mass sits
/// closer to the endpoint than one ulp of the interval. The density factor
/// is combined with the quadrature weight in log space before
/// exponentiating, so singular-but-integrable densities never overflow.
pub fn integrate_unit_log<D, F>(ld: D, factor: F, tol: f64) -> f64
where
    D: Fn(f64, f64) -> f64,
    F: Fn(f64, f64) -> f64,
{
    let t_max = 6.5;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let ln_half_pi = half_pi.ln();
    let ln2 = std::f64::consts::LN_2;

    let node = |k: i64, h: f64| -> f64 {
        let t = k as f64 * h;
        let y = half_pi * t.sinh();
        let ya = y.abs();
        // for y >= 0: u = 1/(1+e^{-2y}), 1-u = e^{-2y}/(1+e^{-2y})
        let l1p = (-2.0 * ya).exp().ln_1p();
        let ln_near = -2.0 * ya - l1p; // log of the smaller of u, 1-u
        let ln_far = -l1p;
        let (ln_u, ln_1mu) = if y >= 0.0 {
            (ln_far, ln_near)
        } else {
            (ln_near, ln_far)
        };
        let ln_cosh_y = ya + l1p - ln2;
        // extra ln(1/2) is the interval half-width of (0,1)
        let ln_w = ln_half_pi + t.cosh().ln() - 2.0 * ln_cosh_y - ln2;
        let v = (ln_w + ld(ln_u, ln_1mu)).exp() * factor(ln_u, ln_1mu);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut n = (t_max / h) as i64;
    let mut sum: f64 = (-n..=n).map(|k| node(k, h)).sum();
    let mut estimate = h * sum;
    for _ in 0..9 {
        h *= 0.5;
        n = (t_max / h) as i64;
        sum += (1..=n).step_by(2).map(|k| node(k, h) + node(-k, h)).sum::<f64>();
        let next = h * sum;
        if (next - estimate).abs() <= tol * estimate.abs().max(1.0) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against the CDF
/// `cdf`. Returns sup |F_n - F|.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        d = d.max((((i + 1) as f64) / n - fx).abs());
        d = d.max((fx - (i as f64) / n).abs());
    }
    d
}

/// Asymptotic KS acceptance: sqrt(n) * D below the alpha = 0.001 critical
/// value 1.9495 of the Kolmogorov distribution.
pub fn ks_accepts(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> bool {
    let n = samples.len() as f64;
    n.sqrt() * ks_statistic(samples, cdf) < 1.9495
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
