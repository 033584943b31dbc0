//! Mapping between distribution specs and the solver's flat parameter
//! vector.
//!
//! Layout matches the wire format: all first marginal parameters, then all
//! second ones. Beta shapes are optimized as logs; the truncated Gaussian
//! as (mean, log std). Box constraints in this space keep every iterate a
//! valid spec, so projection is a per-coordinate clamp.

use crate::distributions::{BoundedSupport, DistributionSpec, Family, Params, MIN_SHAPE};

/// Largest admissible Beta shape; generous, only there to keep the special
/// functions out of overflow territory.
const MAX_SHAPE: f64 = 1e6;
/// Std bounds relative to the interval width.
const MIN_STD_FRAC: f64 = 1e-6;
const MAX_STD_FRAC: f64 = 4.0;

#[derive(Debug, Clone)]
pub(crate) struct Transform {
    family: Family,
    support: BoundedSupport,
    lo_box: Vec<f64>,
    hi_box: Vec<f64>,
}

impl Transform {
    pub fn new(family: Family, support: BoundedSupport) -> Self {
        let d = support.dims();
        let (lo_box, hi_box) = match family {
            Family::IndependentBeta => (
                vec![MIN_SHAPE.ln(); 2 * d],
                vec![MAX_SHAPE.ln(); 2 * d],
            ),
            Family::IndependentTruncatedGaussian => {
                let mut lo = support.lo().to_vec();
                let mut hi = support.hi().to_vec();
                for dim in 0..d {
                    lo.push((MIN_STD_FRAC * support.width(dim)).ln());
                    hi.push((MAX_STD_FRAC * support.width(dim)).ln());
                }
                (lo, hi)
            }
        };
        Self {
            family,
            support,
            lo_box,
            hi_box,
        }
    }

    pub fn dims(&self) -> usize {
        self.support.dims()
    }

    pub fn support(&self) -> &BoundedSupport {
        &self.support
    }

    pub fn to_theta(&self, spec: &DistributionSpec) -> Vec<f64> {
        match spec.params() {
            Params::Beta { a, b } => a.iter().chain(b).map(|v| v.ln()).collect(),
            Params::TruncatedGaussian { mean, std } => mean
                .iter()
                .copied()
                .chain(std.iter().map(|s| s.ln()))
                .collect(),
        }
    }

    /// Build the spec for a (projected) theta. exp(ln floor) can land one
    /// ulp under the floor, hence the final clamps.
    pub fn to_spec(&self, theta: &[f64]) -> DistributionSpec {
        let d = self.dims();
        match self.family {
            Family::IndependentBeta => {
                let a = theta[..d]
                    .iter()
                    .map(|t| t.exp().clamp(MIN_SHAPE, MAX_SHAPE))
                    .collect();
                let b = theta[d..]
                    .iter()
                    .map(|t| t.exp().clamp(MIN_SHAPE, MAX_SHAPE))
                    .collect();
                DistributionSpec::beta(self.support.clone(), a, b)
                    .expect("projected theta is always valid")
            }
            Family::IndependentTruncatedGaussian => {
                let mean = theta[..d].to_vec();
                let std = (0..d)
                    .map(|i| {
                        theta[d + i].exp().clamp(
                            MIN_STD_FRAC * self.support.width(i),
                            MAX_STD_FRAC * self.support.width(i),
                        )
                    })
                    .collect();
                DistributionSpec::truncated_gaussian(self.support.clone(), mean, std)
                    .expect("projected theta is always valid")
            }
        }
    }

    pub fn project(&self, theta: &mut [f64]) {
        for (t, (&lo, &hi)) in theta.iter_mut().zip(self.lo_box.iter().zip(&self.hi_box)) {
            *t = t.clamp(lo, hi);
        }
    }

    pub fn projected(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        self.project(&mut out);
        out
    }

    /// Convert a gradient with respect to the natural parameters into one
    /// with respect to theta. Log-parameterized coordinates pick up a
    /// factor of the parameter value.
    pub fn chain(&self, theta: &[f64], grad_params: &[f64]) -> Vec<f64> {
        let d = self.dims();
        match self.family {
            Family::IndependentBeta => theta
                .iter()
                .zip(grad_params)
                .map(|(t, g)| g * t.exp())
                .collect(),
            Family::IndependentTruncatedGaussian => grad_params
                .iter()
                .enumerate()
                .map(|(i, g)| if i < d { *g } else { g * theta[i].exp() })
                .collect(),
        }
    }
}
