use serde::{Deserialize, Serialize};

use super::ownership::OwnershipState;
use crate::sim::{StepEvents, Team};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Goal,
    BallOut,
    Pass,
    OwnershipLoss,
    Collision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub kind: EventKind,
    /// Scoring team for goals, passing team for passes, the team that lost
    /// the ball for ownership losses.
    pub team: Option<Team>,
    /// Passer then receiver for passes; previous owner for losses; the
    /// colliding agent for collisions.
    pub agents: Vec<usize>,
    pub sim_time: f64,
}

/// Last agent that owned the ball this episode. Survives no-owner gaps so
/// that a ball in flight between teammates still counts as a pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossessionTracker {
    pub last_owner: Option<(usize, Team)>,
}

/// Derives game events from consecutive ownership states and the physics
/// events of the step.
pub fn detect_events(
    tracker: &PossessionTracker,
    current: &OwnershipState,
    step: &StepEvents,
    teams: &[Team],
    sim_time: f64,
) -> (PossessionTracker, Vec<GameEvent>) {
    let mut events = Vec::new();
    let mut next = *tracker;

    if let (Some(agent), Some(team)) = (current.owner_agent, current.owner_team) {
        match tracker.last_owner {
            Some((prev, prev_team)) if prev_team == team && prev != agent => events.push(GameEvent {
                kind: EventKind::Pass,
                team: Some(team),
                agents: vec![prev, agent],
                sim_time,
            }),
            Some((prev, prev_team)) if prev_team != team => events.push(GameEvent {
                kind: EventKind::OwnershipLoss,
                team: Some(prev_team),
                agents: vec![prev],
                sim_time,
            }),
            _ => {}
        }
        next.last_owner = Some((agent, team));
    }

    if let Some(goal) = step.goal {
        events.push(GameEvent { kind: EventKind::Goal, team: Some(goal.scorer()), agents: vec![], sim_time });
    }
    if step.ball_out {
        events.push(GameEvent { kind: EventKind::BallOut, team: None, agents: vec![], sim_time });
    }
    for (id, _) in step.collisions.iter().enumerate().filter(|(_, &hit)| hit) {
        events.push(GameEvent {
            kind: EventKind::Collision,
            team: teams.get(id).copied(),
            agents: vec![id],
            sim_time,
        });
    }
    (next, events)
}
