//! Per-agent ego-perspective observations.
//!
//! Layout of the local vector (18 entries):
//!
//! | range  | content                                                    |
//! |--------|------------------------------------------------------------|
//! | 0..4   | own pose in the team frame: x/hl, y/hw, sin, cos           |
//! | 4..7   | own velocity rotated into the ego frame: vx, vy, omega     |
//! | 7..9   | ball position relative to ego, ego axes, / field length    |
//! | 9..11  | ball velocity, ego axes                                    |
//! | 11..16 | field info: half length, half width, goal half width, wall corner x/y |
//! | 16..18 | active teammates (excluding ego) and opponents, / 3        |
//!
//! The team frame is the world frame for blue and the world rotated by pi
//! for red, so both teams attack towards +x. Neighbour rows hold `H` poses
//! (current first) of one agent, each relative to the ego's current pose:
//! `(dx, dy, sin dtheta, cos dtheta)` with positions divided by the field
//! length.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::sim::{Team, Vec2, WorldState};

pub const LOCAL_DIM: usize = 18;
pub const POSE_DIM: usize = 4;
const COUNT_SCALE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseMagnitudes {
    pub pose: f64,
    pub velocity: f64,
    pub ball_position: f64,
    pub ball_velocity: f64,
    pub field_info: f64,
    pub counts: f64,
    pub neighbors: f64,
}

impl NoiseMagnitudes {
    pub const ZERO: NoiseMagnitudes = NoiseMagnitudes {
        pose: 0.0,
        velocity: 0.0,
        ball_position: 0.0,
        ball_velocity: 0.0,
        field_info: 0.0,
        counts: 0.0,
        neighbors: 0.0,
    };

    pub fn actor_default() -> Self {
        Self {
            pose: 0.002,
            velocity: 0.005,
            ball_position: 0.002,
            ball_velocity: 0.005,
            field_info: 0.0,
            counts: 0.0,
            neighbors: 0.002,
        }
    }

    fn all(&self) -> [f64; 7] {
        [self.pose, self.velocity, self.ball_position, self.ball_velocity, self.field_info, self.counts, self.neighbors]
    }

    pub fn is_zero(&self) -> bool {
        self.all().iter().all(|&m| m == 0.0)
    }
}

impl Default for NoiseMagnitudes {
    fn default() -> Self {
        Self::actor_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationConfig {
    pub history_len: usize,
    pub n_max_neighbors: usize,
    pub noise_actor: NoiseMagnitudes,
    pub noise_critic: NoiseMagnitudes,
    /// Upper bound reported in the active-agent counts.
    pub count_clamp: usize,
    /// Half-length and half-width used to normalise the field info entries.
    pub reference_half_length: f64,
    pub reference_half_width: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self {
            history_len: 2,
            n_max_neighbors: 3,
            noise_actor: NoiseMagnitudes::actor_default(),
            noise_critic: NoiseMagnitudes::ZERO,
            count_clamp: 3,
            reference_half_length: 4.5,
            reference_half_width: 3.0,
        }
    }
}

impl ObservationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_len == 0 || self.n_max_neighbors == 0 {
            return Err(SoccerError::Config("history_len and n_max_neighbors must be at least 1".into()));
        }
        if !self.noise_critic.is_zero() {
            return Err(SoccerError::Config("critic observations must be noise free".into()));
        }
        if self.noise_actor.all().iter().any(|m| !(*m >= 0.0)) {
            return Err(SoccerError::Config("noise magnitudes must be non-negative".into()));
        }
        Ok(())
    }

    pub fn entity_dim(&self) -> usize {
        POSE_DIM * self.history_len
    }

    pub fn local_dim(&self) -> usize {
        LOCAL_DIM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Actor,
    Critic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBundle {
    pub local: Vec<f64>,
    /// Row-major `n_max x entity_dim`; masked rows are zero.
    pub teammates: Vec<f64>,
    pub opponents: Vec<f64>,
    pub teammate_mask: Vec<bool>,
    pub opponent_mask: Vec<bool>,
    pub entity_dim: usize,
}

impl ObservationBundle {
    pub fn teammate_rows(&self) -> impl Iterator<Item = &[f64]> {
        valid_rows(&self.teammates, &self.teammate_mask, self.entity_dim)
    }

    pub fn opponent_rows(&self) -> impl Iterator<Item = &[f64]> {
        valid_rows(&self.opponents, &self.opponent_mask, self.entity_dim)
    }
}

fn valid_rows<'a>(data: &'a [f64], mask: &'a [bool], dim: usize) -> impl Iterator<Item = &'a [f64]> {
    data.chunks_exact(dim).zip(mask).filter(|(_, &m)| m).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

/// Past poses of every agent of one instance, most recent first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryBuffer {
    depth: usize,
    past: Vec<VecDeque<Pose>>,
}

impl HistoryBuffer {
    /// Starts a buffer holding `history_len - 1` past poses per agent, padded
    /// with each agent's spawn pose.
    pub fn new(world: &WorldState, history_len: usize) -> Self {
        let depth = history_len.saturating_sub(1);
        let past = world
            .agents
            .iter()
            .map(|a| std::iter::repeat(Pose { position: a.position, heading: a.heading }).take(depth).collect())
            .collect();
        Self { depth, past }
    }

    /// Records the poses of `world` as the most recent past step.
    pub fn push(&mut self, world: &WorldState) {
        if self.depth == 0 {
            return;
        }
        for (q, a) in self.past.iter_mut().zip(&world.agents) {
            q.push_front(Pose { position: a.position, heading: a.heading });
            q.truncate(self.depth);
        }
    }

    /// Pose of `agent` `lag` steps ago; `lag == 0` reads the live world.
    pub fn pose(&self, world: &WorldState, agent: usize, lag: usize) -> Pose {
        if lag == 0 {
            let a = &world.agents[agent];
            Pose { position: a.position, heading: a.heading }
        } else {
            self.past[agent][lag - 1]
        }
    }

    /// Overwrites the stored history of one agent with a fixed pose.
    pub fn set_static(&mut self, agent: usize, pose: Pose) {
        for p in self.past[agent].iter_mut() {
            *p = pose;
        }
    }
}

/// Ids of `candidates` sorted by distance to `from`, ties by index.
pub fn nearest_neighbors(world: &WorldState, ego: usize, team: Team, n_max: usize) -> Vec<usize> {
    let origin = world.agents[ego].position;
    let mut ids: Vec<(f64, usize)> = world
        .team_ids(team)
        .filter(|&id| id != ego)
        .map(|id| ((world.agents[id].position - origin).norm(), id))
        .collect();
    ids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ids.truncate(n_max);
    ids.into_iter().map(|(_, id)| id).collect()
}

/// Builds the observation of `agent_id`. Actor observations receive uniform
/// noise per group; critic observations use the critic magnitudes (zero).
pub fn build_observation<R: Rng + ?Sized>(
    world: &WorldState,
    agent_id: usize,
    history: &HistoryBuffer,
    cfg: &ObservationConfig,
    role: Role,
    rng: &mut R,
) -> ObservationBundle {
    let ego = &world.agents[agent_id];
    debug_assert!(ego.active, "observation requested for inactive agent {agent_id}");
    let field = &world.field;
    let hl = field.half_length();
    let hw = field.half_width();
    let len = field.field_length;
    let flip = ego.team == Team::Red;
    let to_team = |v: Vec2| if flip { -v } else { v };
    let team_heading = if flip { crate::sim::wrap_angle(ego.heading + std::f64::consts::PI) } else { ego.heading };
    let to_ego = |v: Vec2| v.rotate(-ego.heading);

    let mut local = Vec::with_capacity(LOCAL_DIM);
    let p = to_team(ego.position);
    local.extend_from_slice(&[p.x / hl, p.y / hw, team_heading.sin(), team_heading.cos()]);
    let v = to_ego(ego.linear_velocity);
    local.extend_from_slice(&[v.x, v.y, ego.angular_velocity]);
    let b = to_ego(world.ball.position - ego.position) * (1.0 / len);
    local.extend_from_slice(&[b.x, b.y]);
    let bv = to_ego(world.ball.velocity);
    local.extend_from_slice(&[bv.x, bv.y]);
    let (rl, rw) = (cfg.reference_half_length, cfg.reference_half_width);
    local.extend_from_slice(&[
        hl / rl,
        hw / rw,
        0.5 * field.goal_width / rw,
        (hl + field.wall_offset) / rl,
        (hw + field.wall_offset) / rw,
    ]);
    let n_team = world.team_count(ego.team).saturating_sub(1).min(cfg.count_clamp);
    let n_opp = world.team_count(ego.team.opponent()).min(cfg.count_clamp);
    local.extend_from_slice(&[n_team as f64 / COUNT_SCALE, n_opp as f64 / COUNT_SCALE]);
    debug_assert_eq!(local.len(), LOCAL_DIM);

    let dim = cfg.entity_dim();
    let n_max = cfg.n_max_neighbors;
    let fill = |team: Team| {
        let mut data = vec![0.0; n_max * dim];
        let mut mask = vec![false; n_max];
        for (row, id) in nearest_neighbors(world, agent_id, team, n_max).into_iter().enumerate() {
            mask[row] = true;
            for lag in 0..cfg.history_len {
                let pose = history.pose(world, id, lag);
                let rel = to_ego(pose.position - ego.position) * (1.0 / len);
                let dtheta = pose.heading - ego.heading;
                let o = row * dim + lag * POSE_DIM;
                data[o..o + POSE_DIM].copy_from_slice(&[rel.x, rel.y, dtheta.sin(), dtheta.cos()]);
            }
        }
        (data, mask)
    };
    let (mut teammates, teammate_mask) = fill(ego.team);
    let (mut opponents, opponent_mask) = fill(ego.team.opponent());

    let noise = match role {
        Role::Actor => cfg.noise_actor,
        Role::Critic => cfg.noise_critic,
    };
    if !noise.is_zero() {
        let groups = [
            (0..4, noise.pose),
            (4..7, noise.velocity),
            (7..9, noise.ball_position),
            (9..11, noise.ball_velocity),
            (11..16, noise.field_info),
            (16..18, noise.counts),
        ];
        for (range, m) in groups {
            inject_noise(&mut local[range], m, rng);
        }
        for (rows, mask) in [(&mut teammates, &teammate_mask), (&mut opponents, &opponent_mask)] {
            for (row, &valid) in rows.chunks_exact_mut(dim).zip(mask.iter()) {
                if valid {
                    inject_noise(row, noise.neighbors, rng);
                }
            }
        }
    }

    ObservationBundle { local, teammates, opponents, teammate_mask, opponent_mask, entity_dim: dim }
}

/// Adds independent uniform noise in `[-magnitude, magnitude]` to every
/// entry. A zero magnitude leaves the slice untouched and draws nothing.
pub fn inject_noise<R: Rng + ?Sized>(values: &mut [f64], magnitude: f64, rng: &mut R) {
    debug_assert!(magnitude >= 0.0);
    if magnitude == 0.0 {
        return;
    }
    for v in values {
        *v += rng.random_range(-magnitude..=magnitude);
    }
}
