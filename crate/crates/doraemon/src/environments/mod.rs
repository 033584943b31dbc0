//! Desk-scale latent-dynamics environments with analytic ground truth.

mod plane;
mod skill;

pub use plane::{
    feasibility_margin, feasible_half_width, initial_state, plane_rollout, plane_step,
    scripted_pd_policy, InclinedPlaneConfig, PlaneRollout, PlaneState,
};
pub use skill::{skill_rollout, skill_success_probability, SkillRegionConfig};
