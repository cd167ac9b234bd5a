//! Batched 2D physics of agents, ball and walls.

pub mod control;
pub mod physics;
pub mod state;
pub mod vec2;

pub use control::{inverse_remap_unit_disk, pd_track, remap_unit_disk, ActionCommand, Twist, Wrench};
pub use physics::{
    apply_kick, check_termination, kicking_agent, resolve_collisions, step_batch, step_world, Outcome,
    StepEvents,
};
pub use state::{AgentState, BallState, FieldGeometry, PdGains, PhysicsConfig, ScoreEvent, Team, WorldState};
pub use vec2::{wrap_angle, Vec2};
