//! Per-agent rewards for the trainee (blue) team.

use serde::{Deserialize, Serialize};

use crate::rules::OwnershipState;
use crate::sim::{ScoreEvent, StepEvents, Team, Vec2, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardScales {
    pub score: f64,
    pub ball_outside: f64,
    pub collision: f64,
    pub ball_to_goal_velocity: f64,
    pub base_to_ball_velocity: f64,
    pub ball_direction: f64,
}

impl Default for RewardScales {
    fn default() -> Self {
        Self {
            score: 100.0,
            ball_outside: 1.0,
            collision: 1.0,
            ball_to_goal_velocity: 2.0,
            base_to_ball_velocity: 0.5,
            ball_direction: 0.025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub scales: RewardScales,
    pub direction_sigma: f64,
    /// Shaping terms (ball-to-goal, base-to-ball, direction) are applied
    /// only while this is set.
    pub dense_active: bool,
    /// The approach term only applies beyond this ego-to-ball distance.
    pub far_threshold: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { scales: RewardScales::default(), direction_sigma: 0.4, dense_active: true, far_threshold: 0.5 }
    }
}

/// Breakdown of one agent's reward; `total()` is what the learner sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub score: f64,
    pub ball_outside: f64,
    pub collision: f64,
    pub ball_to_goal: f64,
    pub base_to_ball: f64,
    pub ball_direction: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.score + self.ball_outside + self.collision + self.ball_to_goal + self.base_to_ball + self.ball_direction
    }
}

/// `scale * exp(-(angle / sigma)^2)`.
pub fn direction_reward(angle: f64, sigma: f64, scale: f64) -> f64 {
    scale * (-(angle / sigma).powi(2)).exp()
}

/// Signed speed of the ball towards the centre of the goal blue attacks.
pub fn ball_to_goal_speed(world: &WorldState) -> f64 {
    let goal = world.field.attack_goal(Team::Blue);
    world.ball.velocity.dot((goal - world.ball.position).normalized())
}

/// Rewards for every active blue agent, in agent-index order.
///
/// `world` is the state after the step whose physics produced `events`.
pub fn compute_rewards(
    world: &WorldState,
    events: &StepEvents,
    ownership: &OwnershipState,
    cfg: &RewardConfig,
) -> Vec<(usize, RewardTerms)> {
    let s = &cfg.scales;
    let score = match events.goal {
        Some(ScoreEvent::BlueGoal) => s.score,
        Some(ScoreEvent::RedGoal) => -s.score,
        None => 0.0,
    };
    let outside = if events.ball_out { -s.ball_outside } else { 0.0 };
    let ball_to_goal = if cfg.dense_active { s.ball_to_goal_velocity * ball_to_goal_speed(world) } else { 0.0 };
    let blue_owns = ownership.owner_team == Some(Team::Blue);

    world
        .team_ids(Team::Blue)
        .map(|id| {
            let agent = &world.agents[id];
            let mut terms = RewardTerms {
                score,
                ball_outside: outside,
                collision: if events.collisions.get(id).copied().unwrap_or(false) { -s.collision } else { 0.0 },
                ball_to_goal,
                ..Default::default()
            };
            if cfg.dense_active {
                let to_ball: Vec2 = world.ball.position - agent.position;
                if !blue_owns && to_ball.norm() > cfg.far_threshold {
                    terms.base_to_ball = s.base_to_ball_velocity * agent.linear_velocity.dot(to_ball.normalized());
                }
                let bearing = crate::sim::wrap_angle(to_ball.angle() - agent.heading);
                terms.ball_direction = direction_reward(bearing, cfg.direction_sigma, s.ball_direction);
            }
            (id, terms)
        })
        .collect()
}

/// Permanent removal of the shaping terms: once the milestone is reached
/// `dense_active` stays false.
pub fn dense_gate(milestone_reached: bool, cfg: RewardConfig) -> RewardConfig {
    RewardConfig { dense_active: cfg.dense_active && !milestone_reached, ..cfg }
}
