use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned bounded box for the dynamics-parameter space, one
/// `[lo, hi]` interval per dimension in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SupportDto", into = "SupportDto")]
pub struct BoundedSupport {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SupportDto {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl From<BoundedSupport> for SupportDto {
    fn from(s: BoundedSupport) -> Self {
        SupportDto { lo: s.lo, hi: s.hi }
    }
}

impl TryFrom<SupportDto> for BoundedSupport {
    type Error = Error;
    fn try_from(dto: SupportDto) -> Result<Self> {
        BoundedSupport::new(dto.lo, dto.hi)
    }
}

impl BoundedSupport {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len().max(1),
                got: hi.len(),
            });
        }
        for (d, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::InvalidSupport { dim: d, lo: l, hi: h });
            }
        }
        Ok(Self { lo, hi })
    }

    /// One-dimensional support.
    pub fn scalar(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The unit box `[0, 1]^dims`.
    pub fn unit(dims: usize) -> Self {
        Self {
            lo: vec![0.0; dims],
            hi: vec![1.0; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.hi[dim] - self.lo[dim]
    }

    /// Σ_d ln(hi − lo); the entropy of the uniform distribution on the box.
    pub fn log_volume(&self) -> f64 {
        (0..self.dims()).map(|d| self.width(d).ln()).sum()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Closed-interval membership, all dimensions.
    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dims()
            && xi
                .iter()
                .enumerate()
                .all(|(d, &x)| x >= self.lo[d] && x <= self.hi[d])
    }

    fn check_member(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: xi.len(),
            });
        }
        for (d, &x) in xi.iter().enumerate() {
            if x < self.lo[d] || x > self.hi[d] {
                return Err(Error::OutOfSupport { dim: d, value: x });
            }
        }
        Ok(())
    }

    /// Affine map onto `[0, 1]^dims`. Errors on out-of-support input.
    pub fn to_unit(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_member(xi)?;
        Ok(xi
            .iter()
            .enumerate()
            .map(|(d, &x)| (x - self.lo[d]) / self.width(d))
            .collect())
    }

    /// Inverse of [`to_unit`](Self::to_unit); input must lie in the unit box.
    pub fn from_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: u.len(),
            });
        }
        for (d, &v) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfSupport { dim: d, value: v });
            }
        }
        Ok(u
            .iter()
            .enumerate()
            .map(|(d, &v)| self.lo[d] + v * self.width(d))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_bounds() {
        assert!(BoundedSupport::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoundedSupport::new(vec![2.0], vec![1.0]).is_err());
        assert!(BoundedSupport::new(vec![], vec![]).is_err());
    }

    #[test]
    fn unit_map_endpoints_and_midpoint() {
        let s = BoundedSupport::new(vec![2.39, 0.12], vec![17.21, 0.88]).unwrap();
        assert_eq!(s.to_unit(s.lo()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(s.to_unit(s.hi()).unwrap(), vec![1.0, 1.0]);
        let mid = s.to_unit(&s.midpoint()).unwrap();
        assert!((mid[0] - 0.5).abs() < 1e-12 && (mid[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_support_errors() {
        let s = BoundedSupport::scalar(-1.0, 1.0).unwrap();
        assert!(matches!(
            s.to_unit(&[1.5]),
            Err(Error::OutOfSupport { dim: 0, .. })
        ));
        assert!(s.from_unit(&[-0.01]).is_err());
    }
}
