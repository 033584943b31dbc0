//! Constrained per-iteration distribution updates and their gradients.

mod gradients;
mod solve;
mod transform;

pub use solve::{
    backup_step, doraemon_step, solver_gradients, Achieved, SolverGradients, StartCheck,
    StepConfig, StepResult, StepStatus,
};
