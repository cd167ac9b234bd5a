//! Evaluation, export and persistence around the simulator and trainer.

pub mod checkpoint;
pub mod evaluation;
pub mod heatmap;
pub mod trajectory;

pub use checkpoint::{Checkpoint, ResumeState, TrainerState, FORMAT_VERSION, MAGIC};
pub use evaluation::{run_match, MatchBudget, MatchReport, Scenario, ScenarioKind};
pub use heatmap::{cell_center, export_value_heatmap, rank_correlation, HeatmapSubject};
pub use trajectory::{read_trajectories, replay, JsonlWriter, ReplaySummary, TrajectoryRecord, TrajectorySink};
