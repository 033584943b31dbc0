//! History-conditioned deterministic policies.

use serde::{Deserialize, Serialize};

use crate::environments::PlaneState;
use crate::error::{Error, Result};

/// A feedforward map from the current observation plus a window of recent
/// observation-action pairs to one action. Hidden layers use tanh; the
/// output passes through tanh and is scaled, so actions always lie inside
/// `[-action_scale, action_scale]` no matter the weights.
///
/// The window is zero-padded at the old end while fewer than `window`
/// transitions exist, which pins real transitions to fixed feature slots
/// counted back from the present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPolicy {
    window: usize,
    obs_dim: usize,
    hidden: Vec<usize>,
    action_scale: f64,
    weights: Vec<f64>,
}

impl HistoryPolicy {
    pub fn zeros(window: usize, obs_dim: usize, hidden: Vec<usize>, action_scale: f64) -> Self {
        let mut p = Self {
            window,
            obs_dim,
            hidden,
            action_scale,
            weights: Vec::new(),
        };
        p.weights = vec![0.0; p.param_count()];
        p
    }

    pub fn with_weights(
        window: usize,
        obs_dim: usize,
        hidden: Vec<usize>,
        action_scale: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self::zeros(window, obs_dim, hidden, action_scale);
        p.set_weights(weights)?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.action_scale > 0.0) {
            return Err(Error::InvalidConfig("action_scale must be positive".into()));
        }
        if self.obs_dim == 0 {
            return Err(Error::InvalidConfig("obs_dim must be positive".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidConfig("hidden layer sizes must be positive".into()));
        }
        if self.weights.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: self.weights.len(),
            });
        }
        Ok(())
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_scale(&self) -> f64 {
        self.action_scale
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.param_count(),
                got: weights.len(),
            });
        }
        self.weights = weights;
        Ok(())
    }

    /// Input width: the current observation plus `window` past
    /// observation-action pairs.
    pub fn input_dim(&self) -> usize {
        self.obs_dim + self.window * (self.obs_dim + 1)
    }

    /// All layer widths, input through the scalar output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(1);
        sizes
    }

    pub fn param_count(&self) -> usize {
        let sizes = self.layer_sizes();
        sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Action for the current observation given past transitions, most
    /// recent last. Histories longer than the window use only the last
    /// `window` entries; shorter ones are zero-padded.
    pub fn act(&self, history: &[(Vec<f64>, f64)], obs: &[f64]) -> f64 {
        let take = history.len().min(self.window);
        let mut feats = Vec::with_capacity(self.input_dim());
        feats.resize((self.window - take) * (self.obs_dim + 1), 0.0);
        for (past_obs, past_action) in &history[history.len() - take..] {
            feats.extend_from_slice(past_obs);
            feats.push(past_action / self.action_scale);
        }
        feats.extend_from_slice(obs);
        self.action_scale * self.forward(&feats).tanh()
    }

    /// Pre-squash network output. Weight layout per layer: the weight
    /// matrix row-major (out by in), then the biases.
    fn forward(&self, input: &[f64]) -> f64 {
        let sizes = self.layer_sizes();
        let mut acts = input.to_vec();
        let mut off = 0;
        for li in 1..sizes.len() {
            let (n_in, n_out) = (sizes[li - 1], sizes[li]);
            let last = li + 1 == sizes.len();
            let mut next = vec![0.0; n_out];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut z = self.weights[off + n_in * n_out + o];
                for (i, &a) in acts.iter().enumerate() {
                    z += self.weights[off + o * n_in + i] * a;
                }
                *slot = if last { z } else { z.tanh() };
            }
            off += (n_in + 1) * n_out;
            acts = next;
        }
        acts[0]
    }
}

/// One-episode controller for the inclined plane: feeds the policy
/// normalized `(x, v)` observations and maintains its transition window.
/// Build a fresh one per episode.
///
/// Positions are measured in band half-widths and velocities in band
/// half-widths per five steps, so weights of order one already express
/// useful feedback gains and the search never has to reach extreme
/// magnitudes.
pub fn plane_controller<'a>(
    policy: &'a HistoryPolicy,
    env: &crate::environments::InclinedPlaneConfig,
) -> impl FnMut(&PlaneState) -> f64 + 'a {
    let x_scale = 1.0 / env.band;
    let v_scale = 5.0 * env.dt / env.band;
    let mut history: Vec<(Vec<f64>, f64)> = Vec::new();
    move |s: &PlaneState| {
        let obs = vec![s.x * x_scale, s.v * v_scale];
        let action = policy.act(&history, &obs);
        if policy.window() > 0 {
            history.push((obs, action));
            if history.len() > policy.window() {
                history.remove(0);
            }
        }
        action
    }
}
