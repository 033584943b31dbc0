//! Product distributions over the dynamics-parameter box: independent Beta
//! marginals or independent truncated Gaussians, one marginal per dimension.
//! All densities and entropies are in physical units (the interval rescaling
//! term is included).

pub(crate) mod beta;
mod support;
pub(crate) mod trunc_gauss;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beta::MIN_SHAPE;
pub use support::BoundedSupport;

pub(crate) use trunc_gauss::TruncDim;

/// Upper bound on rejection-sampling retries per dimension per draw.
pub const REJECTION_RETRY_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    IndependentBeta,
    IndependentTruncatedGaussian,
}

/// Marginal parameters, one entry per dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    /// Shape pairs (a, b) of Beta marginals.
    Beta { a: Vec<f64>, b: Vec<f64> },
    /// Mean and standard deviation of the parent Gaussians, physical units.
    TruncatedGaussian { mean: Vec<f64>, std: Vec<f64> },
}

impl Params {
    fn family(&self) -> Family {
        match self {
            Params::Beta { .. } => Family::IndependentBeta,
            Params::TruncatedGaussian { .. } => Family::IndependentTruncatedGaussian,
        }
    }
}

/// A fully specified sampling distribution for dynamics parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDto", into = "SpecDto")]
pub struct DistributionSpec {
    support: BoundedSupport,
    params: Params,
}

/// Wire format: marginal parameters flattened into one vector, first
/// parameter of every dimension, then the second (a's then b's for Beta,
/// means then stds for the truncated Gaussian).
#[derive(Serialize, Deserialize)]
struct SpecDto {
    family: Family,
    dims: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    params: Vec<f64>,
}

impl From<DistributionSpec> for SpecDto {
    fn from(spec: DistributionSpec) -> Self {
        let dims = spec.dims();
        let (family, params) = match spec.params {
            Params::Beta { mut a, b } => {
                a.extend(b);
                (Family::IndependentBeta, a)
            }
            Params::TruncatedGaussian { mut mean, std } => {
                mean.extend(std);
                (Family::IndependentTruncatedGaussian, mean)
            }
        };
        SpecDto {
            family,
            dims,
            lo: spec.support.lo().to_vec(),
            hi: spec.support.hi().to_vec(),
            params,
        }
    }
}

impl TryFrom<SpecDto> for DistributionSpec {
    type Error = Error;
    fn try_from(dto: SpecDto) -> Result<Self> {
        if dto.lo.len() != dto.dims || dto.hi.len() != dto.dims || dto.params.len() != 2 * dto.dims
        {
            return Err(Error::DimensionMismatch {
                expected: dto.dims,
                got: dto.params.len() / 2,
            });
        }
        let support = BoundedSupport::new(dto.lo, dto.hi)?;
        let (first, second) = dto.params.split_at(dto.dims);
        match dto.family {
            Family::IndependentBeta => {
                DistributionSpec::beta(support, first.to_vec(), second.to_vec())
            }
            Family::IndependentTruncatedGaussian => {
                DistributionSpec::truncated_gaussian(support, first.to_vec(), second.to_vec())
            }
        }
    }
}

impl DistributionSpec {
    pub fn beta(support: BoundedSupport, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != support.dims() || b.len() != support.dims() {
            return Err(Error::DimensionMismatch {
                expected: support.dims(),
                got: a.len().min(b.len()),
            });
        }
        for d in 0..support.dims() {
            beta::validate_shape(d, a[d], b[d])?;
        }
        Ok(Self {
            support,
            params: Params::Beta { a, b },
        })
    }

    pub fn truncated_gaussian(
        support: BoundedSupport,
        mean: Vec<f64>,
        std: Vec<f64>,
    ) -> Result<Self> {
        if mean.len() != support.dims() || std.len() != support.dims() {
            return Err(Error::DimensionMismatch {
                expected: support.dims(),
                got: mean.len().min(std.len()),
            });
        }
        for d in 0..support.dims() {
            trunc_gauss::validate_params(d, mean[d], std[d])?;
        }
        Ok(Self {
            support,
            params: Params::TruncatedGaussian { mean, std },
        })
    }

    /// The maximum-entropy member of the family on `support`: Beta(1, 1)
    /// marginals, or for truncated Gaussians the widest parent used by the
    /// schedulers (mean at the midpoint, std equal to the interval width).
    pub fn max_entropy(support: BoundedSupport, family: Family) -> Self {
        let dims = support.dims();
        match family {
            Family::IndependentBeta => Self {
                params: Params::Beta {
                    a: vec![1.0; dims],
                    b: vec![1.0; dims],
                },
                support,
            },
            Family::IndependentTruncatedGaussian => {
                let mean = support.midpoint();
                let std = (0..dims).map(|d| support.width(d)).collect();
                Self {
                    params: Params::TruncatedGaussian { mean, std },
                    support,
                }
            }
        }
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn dims(&self) -> usize {
        self.support.dims()
    }

    pub fn support(&self) -> &BoundedSupport {
        &self.support
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    fn trunc_dim(&self, d: usize) -> TruncDim {
        match &self.params {
            Params::TruncatedGaussian { mean, std } => TruncDim::new(
                mean[d],
                std[d],
                self.support.lo()[d],
                self.support.hi()[d],
            ),
            Params::Beta { .. } => unreachable!("caller checked the family"),
        }
    }

    /// Draw one dynamics vector, strictly interior in every dimension.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let dims = self.dims();
        let mut xi = Vec::with_capacity(dims);
        match &self.params {
            Params::Beta { a, b } => {
                for d in 0..dims {
                    xi.push(beta::sample_interval(
                        d,
                        a[d],
                        b[d],
                        self.support.lo()[d],
                        self.support.hi()[d],
                        REJECTION_RETRY_CAP,
                        rng,
                    )?);
                }
            }
            Params::TruncatedGaussian { .. } => {
                for d in 0..dims {
                    xi.push(self.trunc_dim(d).sample(d, REJECTION_RETRY_CAP, rng)?);
                }
            }
        }
        Ok(xi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    /// Joint log density at `xi`, physical units. Errors when `xi` is
    /// outside the support or has the wrong dimension.
    pub fn log_pdf(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: xi.len(),
            });
        }
        for (d, &x) in xi.iter().enumerate() {
            if x < self.support.lo()[d] || x > self.support.hi()[d] {
                return Err(Error::OutOfSupport { dim: d, value: x });
            }
        }
        Ok(self.log_pdf_unchecked(xi))
    }

    /// Like [`log_pdf`](Self::log_pdf) but maps out-of-support points to
    /// `-inf` instead of erroring. Dimension mismatches still panic in
    /// debug builds via indexing.
    pub fn log_pdf_permissive(&self, xi: &[f64]) -> f64 {
        if xi.len() != self.dims() || !self.support.contains(xi) {
            return f64::NEG_INFINITY;
        }
        self.log_pdf_unchecked(xi)
    }

    fn log_pdf_unchecked(&self, xi: &[f64]) -> f64 {
        match &self.params {
            Params::Beta { a, b } => (0..self.dims())
                .map(|d| {
                    let w = self.support.width(d);
                    let u = (xi[d] - self.support.lo()[d]) / w;
                    beta::log_pdf_unit(a[d], b[d], u) - w.ln()
                })
                .sum(),
            Params::TruncatedGaussian { .. } => {
                (0..self.dims()).map(|d| self.trunc_dim(d).log_pdf(xi[d])).sum()
            }
        }
    }

    /// Differential entropy in nats, physical units. Sums over dimensions
    /// because the marginals are independent.
    pub fn entropy(&self) -> f64 {
        match &self.params {
            Params::Beta { a, b } => (0..self.dims())
                .map(|d| beta::entropy_unit(a[d], b[d]) + self.support.width(d).ln())
                .sum(),
            Params::TruncatedGaussian { .. } => {
                (0..self.dims()).map(|d| self.trunc_dim(d).entropy()).sum()
            }
        }
    }

    /// KL(self || other). Both specs must share family and support.
    pub fn kl_divergence(&self, other: &DistributionSpec) -> Result<f64> {
        if self.family() != other.family() {
            return Err(Error::FamilyMismatch);
        }
        if self.support != other.support {
            return Err(Error::SupportMismatch);
        }
        let kl = match (&self.params, &other.params) {
            (Params::Beta { a, b }, Params::Beta { a: a2, b: b2 }) => (0..self.dims())
                .map(|d| beta::kl_unit(a[d], b[d], a2[d], b2[d]))
                .sum(),
            (Params::TruncatedGaussian { .. }, Params::TruncatedGaussian { .. }) => (0..self
                .dims())
                .map(|d| self.trunc_dim(d).kl_to(&other.trunc_dim(d)))
                .sum(),
            _ => unreachable!("families already matched"),
        };
        Ok(kl)
    }
}
