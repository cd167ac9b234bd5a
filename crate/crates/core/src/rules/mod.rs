//! Soccer semantics on top of the physics: ownership, events, spawning and
//! per-episode statistics.

pub mod events;
pub mod ownership;
pub mod spawn;
pub mod stats;

pub use events::{detect_events, EventKind, GameEvent, PossessionTracker};
pub use ownership::{assign_ownership, OwnershipState};
pub use spawn::{spawn_episode, BallBand, SpawnSpec};
pub use stats::{EpisodeStats, GameResult, StatsAccumulator};
