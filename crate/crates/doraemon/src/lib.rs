//! Entropy-maximizing domain-randomization curricula.
//!
//! The crate is organized around one loop: sample dynamics from a
//! distribution over a bounded box, roll out a policy, estimate how well it
//! would do under candidate distributions by importance sampling, then move
//! the distribution toward maximum entropy subject to a success constraint
//! and a KL trust region. Supporting modules provide the baseline
//! schedulers, two analytic environments, a small policy learner, and an
//! experiment harness with a CLI.

pub mod curriculum;
pub mod distributions;
pub mod environments;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod learner;
pub mod optimizer;
pub mod special;

pub use error::{Error, Result};
