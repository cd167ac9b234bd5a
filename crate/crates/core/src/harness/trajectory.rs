//! Line-delimited JSON trajectory logs and their replay.
//!
//! Each episode starts with a `start` record holding the full initial world;
//! every control step then adds one `step` record with the commands applied
//! and the resulting world, ownership and events.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Result, SoccerError};
use crate::game::{GameInstance, StepReport};
use crate::rules::{GameEvent, OwnershipState};
use crate::sim::{step_world, ActionCommand, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrajectoryRecord {
    Start {
        episode: u64,
        world: WorldState,
    },
    Step {
        episode: u64,
        step: u64,
        actions: Vec<ActionCommand>,
        world: WorldState,
        ownership: OwnershipState,
        events: Vec<GameEvent>,
    },
}

impl TrajectoryRecord {
    pub fn start(episode: u64, inst: &GameInstance) -> Self {
        TrajectoryRecord::Start { episode, world: inst.world.clone() }
    }

    pub fn step(episode: u64, inst: &GameInstance, actions: Vec<ActionCommand>, report: &StepReport) -> Self {
        TrajectoryRecord::Step {
            episode,
            step: inst.world.episode_step,
            actions,
            world: inst.world.clone(),
            ownership: inst.ownership,
            events: report.events.clone(),
        }
    }

    pub fn world(&self) -> &WorldState {
        match self {
            TrajectoryRecord::Start { world, .. } | TrajectoryRecord::Step { world, .. } => world,
        }
    }
}

pub trait TrajectorySink {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()>;
}

impl TrajectorySink for Vec<TrajectoryRecord> {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Streams records as one JSON object per line.
pub struct JsonlWriter<W: Write> {
    out: W,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TrajectorySink for JsonlWriter<W> {
    fn record(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }
}

pub fn read_trajectories<R: BufRead>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub episodes: usize,
    pub steps: usize,
}

/// Re-simulates every logged step from the logged commands and checks that
/// the resulting world is bit-for-bit the logged one.
pub fn replay(records: &[TrajectoryRecord], cfg: &Config) -> Result<ReplaySummary> {
    let mut summary = ReplaySummary::default();
    let mut current: Option<WorldState> = None;
    for (k, rec) in records.iter().enumerate() {
        match rec {
            TrajectoryRecord::Start { world, .. } => {
                current = Some(world.clone());
                summary.episodes += 1;
            }
            TrajectoryRecord::Step { actions, world, step, .. } => {
                let prev = current.as_ref().ok_or_else(|| SoccerError::ReplayMismatch {
                    record: k,
                    detail: "step record before any start record".into(),
                })?;
                let (next, _) = step_world(prev, actions, cfg.physics.control_dt, &cfg.physics)?;
                if !bitwise_eq(&next, world) {
                    return Err(SoccerError::ReplayMismatch {
                        record: k,
                        detail: format!("state after step {step} differs from the log"),
                    });
                }
                current = Some(next);
                summary.steps += 1;
            }
        }
    }
    Ok(summary)
}

/// Equality on the serialised form, which distinguishes every bit pattern
/// serde_json can represent (including signed zeros).
fn bitwise_eq(a: &WorldState, b: &WorldState) -> bool {
    serde_json::to_string(a).ok() == serde_json::to_string(b).ok()
}
