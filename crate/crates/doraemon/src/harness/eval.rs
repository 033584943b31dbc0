//! Benchmark-measure evaluation: Monte-Carlo success over the uniform
//! reference distribution and grid slices of the dynamics space.
//!
//! Both take the environment as a closure running one episode at given
//! dynamics, so they work unchanged for any environment and any policy.

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::BoundedSupport;
use crate::error::{Error, Result};

/// One episode at fixed dynamics: mean return and success flag.
pub type EpisodeFn<'a> = dyn FnMut(&[f64], &mut dyn RngCore) -> Result<(f64, bool)> + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalEval {
    /// Success fraction over dynamics drawn uniformly from the benchmark.
    pub rate: f64,
    /// 95% binomial confidence half-width.
    pub half_width: f64,
    pub episodes: usize,
}

/// Monte-Carlo success rate under the maximum-entropy benchmark measure.
pub fn global_success_rate(
    episode: &mut EpisodeFn,
    support: &BoundedSupport,
    n_eval: usize,
    rng: &mut dyn RngCore,
) -> Result<GlobalEval> {
    if n_eval == 0 {
        return Err(Error::InvalidConfig("n_eval must be at least 1".into()));
    }
    let mut successes = 0usize;
    for _ in 0..n_eval {
        let u: Vec<f64> = (0..support.dims()).map(|_| rng.gen::<f64>()).collect();
        let xi = support.from_unit(&u)?;
        let (_, ok) = episode(&xi, rng)?;
        if ok {
            successes += 1;
        }
    }
    let rate = successes as f64 / n_eval as f64;
    Ok(GlobalEval {
        rate,
        half_width: 1.96 * (rate * (1.0 - rate) / n_eval as f64).sqrt(),
        episodes: n_eval,
    })
}

/// A one- or two-dimensional slice of the dynamics space, everything else
/// pinned to `nominal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim_x: usize,
    /// Second varied dimension; omit for a line slice.
    #[serde(default)]
    pub dim_y: Option<usize>,
    pub size_x: usize,
    #[serde(default = "one")]
    pub size_y: usize,
    /// Coordinates of the unvaried dimensions (and of a varied axis of
    /// size one).
    pub nominal: Vec<f64>,
    #[serde(default = "default_episodes_per_cell")]
    pub episodes_per_cell: usize,
}

fn one() -> usize {
    1
}

fn default_episodes_per_cell() -> usize {
    5
}

impl GridSpec {
    /// A line over one dimension of `support`, everything else (none, for
    /// one-dimensional spaces) at the midpoint.
    pub fn line(support: &BoundedSupport, dim: usize, size: usize) -> Self {
        Self {
            dim_x: dim,
            dim_y: None,
            size_x: size,
            size_y: 1,
            nominal: support.midpoint(),
            episodes_per_cell: default_episodes_per_cell(),
        }
    }

    fn validate(&self, support: &BoundedSupport) -> Result<()> {
        if self.dim_x >= support.dims() {
            return Err(Error::DimensionMismatch {
                expected: support.dims(),
                got: self.dim_x,
            });
        }
        if let Some(dy) = self.dim_y {
            if dy >= support.dims() || dy == self.dim_x {
                return Err(Error::InvalidConfig(format!(
                    "grid dimensions {} and {dy} must be distinct and in range",
                    self.dim_x
                )));
            }
        }
        if self.nominal.len() != support.dims() {
            return Err(Error::DimensionMismatch {
                expected: support.dims(),
                got: self.nominal.len(),
            });
        }
        if !support.contains(&self.nominal) {
            return Err(Error::InvalidConfig(
                "grid nominal point lies outside the benchmark box".into(),
            ));
        }
        if self.size_x == 0 || self.size_y == 0 || self.episodes_per_cell == 0 {
            return Err(Error::InvalidConfig(
                "grid sizes and episodes per cell must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Cell results of a grid slice; matrices are indexed `[y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEval {
    pub dim_x: usize,
    pub dim_y: Option<usize>,
    pub x_values: Vec<f64>,
    /// Empty for line slices.
    pub y_values: Vec<f64>,
    pub mean_return: Vec<Vec<f64>>,
    /// Strict success majority over the cell's episodes.
    pub success: Vec<Vec<bool>>,
}

fn axis_values(support: &BoundedSupport, dim: usize, size: usize, nominal: &[f64]) -> Vec<f64> {
    if size <= 1 {
        return vec![nominal[dim]];
    }
    let (lo, hi) = (support.lo()[dim], support.hi()[dim]);
    (0..size)
        .map(|i| lo + (hi - lo) * i as f64 / (size - 1) as f64)
        .collect()
}

/// Evaluate every cell of the slice: `episodes_per_cell` rollouts, mean
/// return, and the majority success flag.
pub fn evaluate_grid(
    episode: &mut EpisodeFn,
    support: &BoundedSupport,
    spec: &GridSpec,
    rng: &mut dyn RngCore,
) -> Result<GridEval> {
    spec.validate(support)?;
    let x_values = axis_values(support, spec.dim_x, spec.size_x, &spec.nominal);
    let y_values = match spec.dim_y {
        Some(dy) => axis_values(support, dy, spec.size_y, &spec.nominal),
        None => vec![f64::NAN],
    };
    let mut mean_return = Vec::with_capacity(y_values.len());
    let mut success = Vec::with_capacity(y_values.len());
    for &y in &y_values {
        let mut row_return = Vec::with_capacity(x_values.len());
        let mut row_success = Vec::with_capacity(x_values.len());
        for &x in &x_values {
            let mut xi = spec.nominal.clone();
            xi[spec.dim_x] = x;
            if let Some(dy) = spec.dim_y {
                xi[dy] = y;
            }
            let mut total = 0.0;
            let mut wins = 0usize;
            for _ in 0..spec.episodes_per_cell {
                let (ret, ok) = episode(&xi, rng)?;
                total += ret;
                if ok {
                    wins += 1;
                }
            }
            row_return.push(total / spec.episodes_per_cell as f64);
            row_success.push(2 * wins > spec.episodes_per_cell);
        }
        mean_return.push(row_return);
        success.push(row_success);
    }
    Ok(GridEval {
        dim_x: spec.dim_x,
        dim_y: spec.dim_y,
        x_values,
        y_values: if spec.dim_y.is_some() { y_values } else { Vec::new() },
        mean_return,
        success,
    })
}

impl GridEval {
    /// Success fraction over the x cells inside `[lo, hi]` on a line
    /// slice.
    pub fn line_success_fraction(&self, lo: f64, hi: f64) -> Option<f64> {
        if self.dim_y.is_some() {
            return None;
        }
        let cells: Vec<usize> = (0..self.x_values.len())
            .filter(|&i| self.x_values[i] >= lo && self.x_values[i] <= hi)
            .collect();
        if cells.is_empty() {
            return None;
        }
        let wins = cells.iter().filter(|&&i| self.success[0][i]).count();
        Some(wins as f64 / cells.len() as f64)
    }

    /// Matrix CSV for one of the two quantities. The header row names the
    /// varied dimensions and carries the x grid values; the first column
    /// carries the y grid values (the quantity name on line slices).
    pub fn to_csv(&self, quantity: GridQuantity) -> String {
        let mut out = String::new();
        let header_label = match self.dim_y {
            Some(dy) => format!("xi{dy}\\xi{}", self.dim_x),
            None => format!("xi{}", self.dim_x),
        };
        out.push_str(&header_label);
        for x in &self.x_values {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
        let rows = self.mean_return.len();
        for r in 0..rows {
            let label = match self.dim_y {
                Some(_) => format!("{}", self.y_values[r]),
                None => quantity.name().to_string(),
            };
            out.push_str(&label);
            for c in 0..self.x_values.len() {
                match quantity {
                    GridQuantity::MeanReturn => {
                        out.push_str(&format!(",{}", self.mean_return[r][c]))
                    }
                    GridQuantity::Success => {
                        out.push_str(if self.success[r][c] { ",1" } else { ",0" })
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridQuantity {
    MeanReturn,
    Success,
}

impl GridQuantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::MeanReturn => "mean_return",
            Self::Success => "success",
        }
    }
}
