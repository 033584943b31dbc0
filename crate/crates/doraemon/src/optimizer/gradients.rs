//! Value and gradient evaluation for the three quantities the solver
//! trades off: entropy of the candidate, KL from the reference, and the
//! importance-sampling success estimate against the reference.
//!
//! Records are cached once per step in a form that makes repeated
//! evaluation cheap: Beta marginals reuse per-record (ln u, ln(1-u)),
//! truncated Gaussians the raw coordinates, and both keep the reference
//! log density per successful record. Computing the reference density from
//! the same cached values the candidate uses makes the identity case
//! exact: at theta = theta_ref every weight is exp(0).

use crate::distributions::{beta, DistributionSpec, Family, Params, TruncDim};
use crate::error::{Error, Result};
use crate::estimator::EpisodeRecord;
use crate::special::ln_beta;

use super::transform::Transform;

pub(crate) struct Problem {
    pub transform: Transform,
    family: Family,
    ref_first: Vec<f64>,
    ref_second: Vec<f64>,
    n_records: usize,
    /// per successful record: Beta caches ln u and ln(1-u) per dim,
    /// truncated Gaussian caches xi per dim
    succ_ln_u: Vec<Vec<f64>>,
    succ_ln_1mu: Vec<Vec<f64>>,
    succ_xi: Vec<Vec<f64>>,
    succ_lp_ref: Vec<f64>,
    clip: Option<f64>,
}

fn spec_params(spec: &DistributionSpec) -> (Vec<f64>, Vec<f64>) {
    match spec.params() {
        Params::Beta { a, b } => (a.clone(), b.clone()),
        Params::TruncatedGaussian { mean, std } => (mean.clone(), std.clone()),
    }
}

impl Problem {
    pub fn new(
        phi_ref: &DistributionSpec,
        records: &[EpisodeRecord],
        clip: Option<f64>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyRecords);
        }
        let family = phi_ref.family();
        let support = phi_ref.support().clone();
        let d = support.dims();
        let (ref_first, ref_second) = spec_params(phi_ref);

        let mut succ_ln_u = Vec::new();
        let mut succ_ln_1mu = Vec::new();
        let mut succ_xi = Vec::new();
        let mut succ_lp_ref = Vec::new();
        for rec in records {
            if rec.xi.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: rec.xi.len(),
                });
            }
            for (dim, &x) in rec.xi.iter().enumerate() {
                if x < support.lo()[dim] || x > support.hi()[dim] {
                    return Err(Error::OutOfSupport { dim, value: x });
                }
            }
            if !rec.success {
                continue;
            }
            match family {
                Family::IndependentBeta => {
                    let mut lns = Vec::with_capacity(d);
                    let mut ln1ms = Vec::with_capacity(d);
                    let mut lp = 0.0;
                    for dim in 0..d {
                        let u = (rec.xi[dim] - support.lo()[dim]) / support.width(dim);
                        let (ln_u, ln_1mu) = (u.ln(), (-u).ln_1p());
                        lp += (ref_first[dim] - 1.0) * ln_u + (ref_second[dim] - 1.0) * ln_1mu
                            - ln_beta(ref_first[dim], ref_second[dim]);
                        lns.push(ln_u);
                        ln1ms.push(ln_1mu);
                    }
                    succ_ln_u.push(lns);
                    succ_ln_1mu.push(ln1ms);
                    succ_lp_ref.push(lp);
                }
                Family::IndependentTruncatedGaussian => {
                    let lp = (0..d)
                        .map(|dim| {
                            TruncDim::new(
                                ref_first[dim],
                                ref_second[dim],
                                support.lo()[dim],
                                support.hi()[dim],
                            )
                            .log_pdf(rec.xi[dim])
                        })
                        .sum();
                    succ_xi.push(rec.xi.clone());
                    succ_lp_ref.push(lp);
                }
            }
        }

        Ok(Self {
            transform: Transform::new(family, support),
            family,
            ref_first,
            ref_second,
            n_records: records.len(),
            succ_ln_u,
            succ_ln_1mu,
            succ_xi,
            succ_lp_ref,
            clip,
        })
    }

    /// Natural parameters for a theta vector, without the solver-box
    /// clamps `to_spec` applies; evaluation must be exact wherever the
    /// caller's spec is valid, not just inside the solver box.
    fn theta_params(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.transform.dims();
        match self.family {
            Family::IndependentBeta => (
                theta[..d].iter().map(|t| t.exp()).collect(),
                theta[d..].iter().map(|t| t.exp()).collect(),
            ),
            Family::IndependentTruncatedGaussian => (
                theta[..d].to_vec(),
                theta[d..].iter().map(|t| t.exp()).collect(),
            ),
        }
    }

    fn trunc_dims(&self, first: &[f64], second: &[f64]) -> Vec<TruncDim> {
        let s = self.transform.support();
        (0..s.dims())
            .map(|d| TruncDim::new(first[d], second[d], s.lo()[d], s.hi()[d]))
            .collect()
    }

    pub fn entropy(&self, theta: &[f64]) -> f64 {
        let (first, second) = self.theta_params(theta);
        let s = self.transform.support();
        match self.family {
            Family::IndependentBeta => (0..s.dims())
                .map(|d| beta::entropy_unit(first[d], second[d]) + s.width(d).ln())
                .sum(),
            Family::IndependentTruncatedGaussian => self
                .trunc_dims(&first, &second)
                .iter()
                .map(|t| t.entropy())
                .sum(),
        }
    }

    pub fn entropy_grad(&self, theta: &[f64]) -> Vec<f64> {
        let (first, second) = self.theta_params(theta);
        let d = self.transform.dims();
        let mut grad = vec![0.0; 2 * d];
        match self.family {
            Family::IndependentBeta => {
                for dim in 0..d {
                    let (ga, gb) = beta::entropy_grad(first[dim], second[dim]);
                    grad[dim] = ga;
                    grad[d + dim] = gb;
                }
            }
            Family::IndependentTruncatedGaussian => {
                for (dim, t) in self.trunc_dims(&first, &second).iter().enumerate() {
                    let (gm, gs) = t.entropy_grad();
                    grad[dim] = gm;
                    grad[d + dim] = gs;
                }
            }
        }
        self.transform.chain(theta, &grad)
    }

    pub fn kl(&self, theta: &[f64]) -> f64 {
        let (first, second) = self.theta_params(theta);
        let d = self.transform.dims();
        match self.family {
            Family::IndependentBeta => (0..d)
                .map(|dim| {
                    beta::kl_unit(
                        first[dim],
                        second[dim],
                        self.ref_first[dim],
                        self.ref_second[dim],
                    )
                })
                .sum(),
            Family::IndependentTruncatedGaussian => {
                let refs = self.trunc_dims(&self.ref_first, &self.ref_second);
                self.trunc_dims(&first, &second)
                    .iter()
                    .zip(&refs)
                    .map(|(p, q)| p.kl_to(q))
                    .sum()
            }
        }
    }

    pub fn kl_grad(&self, theta: &[f64]) -> Vec<f64> {
        let (first, second) = self.theta_params(theta);
        let d = self.transform.dims();
        let mut grad = vec![0.0; 2 * d];
        match self.family {
            Family::IndependentBeta => {
                for dim in 0..d {
                    let (ga, gb) = beta::kl_grad(
                        first[dim],
                        second[dim],
                        self.ref_first[dim],
                        self.ref_second[dim],
                    );
                    grad[dim] = ga;
                    grad[d + dim] = gb;
                }
            }
            Family::IndependentTruncatedGaussian => {
                let refs = self.trunc_dims(&self.ref_first, &self.ref_second);
                for (dim, (p, q)) in self.trunc_dims(&first, &second).iter().zip(&refs).enumerate()
                {
                    let (gm, gs) = p.kl_grad(q);
                    grad[dim] = gm;
                    grad[d + dim] = gs;
                }
            }
        }
        self.transform.chain(theta, &grad)
    }

    /// Candidate log density of successful record `k`, reusing the cache.
    fn lp_new(&self, k: usize, first: &[f64], second: &[f64], tds: &[TruncDim]) -> f64 {
        match self.family {
            Family::IndependentBeta => (0..first.len())
                .map(|d| {
                    (first[d] - 1.0) * self.succ_ln_u[k][d]
                        + (second[d] - 1.0) * self.succ_ln_1mu[k][d]
                        - ln_beta(first[d], second[d])
                })
                .sum(),
            Family::IndependentTruncatedGaussian => (0..first.len())
                .map(|d| tds[d].log_pdf(self.succ_xi[k][d]))
                .sum(),
        }
    }

    pub fn g_hat(&self, theta: &[f64]) -> f64 {
        let (first, second) = self.theta_params(theta);
        let tds = match self.family {
            Family::IndependentTruncatedGaussian => self.trunc_dims(&first, &second),
            Family::IndependentBeta => Vec::new(),
        };
        let mut acc = 0.0;
        for k in 0..self.succ_lp_ref.len() {
            let mut w = (self.lp_new(k, &first, &second, &tds) - self.succ_lp_ref[k]).exp();
            if let Some(c) = self.clip {
                w = w.min(c);
            }
            acc += w;
        }
        acc / self.n_records as f64
    }

    pub fn g_hat_grad(&self, theta: &[f64]) -> Vec<f64> {
        let (first, second) = self.theta_params(theta);
        let d = self.transform.dims();
        let tds = match self.family {
            Family::IndependentTruncatedGaussian => self.trunc_dims(&first, &second),
            Family::IndependentBeta => Vec::new(),
        };
        let mut grad = vec![0.0; 2 * d];
        for k in 0..self.succ_lp_ref.len() {
            let w = (self.lp_new(k, &first, &second, &tds) - self.succ_lp_ref[k]).exp();
            if let Some(c) = self.clip {
                // a clipped weight is locally constant in theta
                if w >= c {
                    continue;
                }
            }
            match self.family {
                Family::IndependentBeta => {
                    for dim in 0..d {
                        let (ga, gb) = beta::log_pdf_grad(
                            first[dim],
                            second[dim],
                            self.succ_ln_u[k][dim],
                            self.succ_ln_1mu[k][dim],
                        );
                        grad[dim] += w * ga;
                        grad[d + dim] += w * gb;
                    }
                }
                Family::IndependentTruncatedGaussian => {
                    for dim in 0..d {
                        let (gm, gs) = tds[dim].log_pdf_grad(self.succ_xi[k][dim]);
                        grad[dim] += w * gm;
                        grad[d + dim] += w * gs;
                    }
                }
            }
        }
        let k = self.n_records as f64;
        grad.iter_mut().for_each(|g| *g /= k);
        self.transform.chain(theta, &grad)
    }

    /// Fraction of successful records; what g_hat equals at the reference.
    pub fn mc_rate(&self) -> f64 {
        self.succ_lp_ref.len() as f64 / self.n_records as f64
    }
}
