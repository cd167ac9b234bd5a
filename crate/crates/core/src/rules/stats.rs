use serde::{Deserialize, Serialize};

use super::events::{EventKind, GameEvent};
use super::ownership::OwnershipState;
use crate::sim::{Outcome, Team};

/// Game result from the blue team's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameResult {
    Win,
    Draw,
    Loss,
}

impl From<Outcome> for GameResult {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::BlueWin => GameResult::Win,
            Outcome::RedWin => GameResult::Loss,
            Outcome::Timeout => GameResult::Draw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub outcome: GameResult,
    pub ownership_time_blue: f64,
    pub ownership_time_red: f64,
    pub passes_blue: u32,
    pub passes_red: u32,
    pub ownership_losses_blue: u32,
    pub ownership_losses_red: u32,
    pub duration: f64,
    /// Control steps in which a blue agent had the ball in its kickable area.
    pub blue_touch_steps: u32,
    pub steps: u32,
}

/// Running per-episode counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsAccumulator {
    pub ownership_time_blue: f64,
    pub ownership_time_red: f64,
    pub passes_blue: u32,
    pub passes_red: u32,
    pub ownership_losses_blue: u32,
    pub ownership_losses_red: u32,
    pub blue_touch_steps: u32,
    pub steps: u32,
}

impl StatsAccumulator {
    pub fn record_step(&mut self, dt: f64, ownership: &OwnershipState, events: &[GameEvent], blue_touch: bool) {
        self.steps += 1;
        match ownership.owner_team {
            Some(Team::Blue) => self.ownership_time_blue += dt,
            Some(Team::Red) => self.ownership_time_red += dt,
            None => {}
        }
        if blue_touch {
            self.blue_touch_steps += 1;
        }
        for ev in events {
            match (ev.kind, ev.team) {
                (EventKind::Pass, Some(Team::Blue)) => self.passes_blue += 1,
                (EventKind::Pass, Some(Team::Red)) => self.passes_red += 1,
                (EventKind::OwnershipLoss, Some(Team::Blue)) => self.ownership_losses_blue += 1,
                (EventKind::OwnershipLoss, Some(Team::Red)) => self.ownership_losses_red += 1,
                _ => {}
            }
        }
    }

    pub fn finish(&self, outcome: Outcome, duration: f64) -> EpisodeStats {
        EpisodeStats {
            outcome: outcome.into(),
            ownership_time_blue: self.ownership_time_blue,
            ownership_time_red: self.ownership_time_red,
            passes_blue: self.passes_blue,
            passes_red: self.passes_red,
            ownership_losses_blue: self.ownership_losses_blue,
            ownership_losses_red: self.ownership_losses_red,
            duration,
            blue_touch_steps: self.blue_touch_steps,
            steps: self.steps,
        }
    }
}
