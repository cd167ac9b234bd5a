use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::sim::{AgentState, BallState, FieldGeometry, Team, Vec2, WorldState};

/// Longitudinal band for the ball spawn, as fractions of the field length
/// measured from the blue goal line (0 = blue goal line, 1 = red goal line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallBand {
    pub near: f64,
    pub far: f64,
}

impl BallBand {
    pub const FULL: BallBand = BallBand { near: 0.0, far: 1.0 };

    /// Band for an initial-position curriculum level: the far edge moves
    /// linearly from a quarter of the field (level 0) to the full field.
    pub fn for_level(level: u32, max_level: u32) -> BallBand {
        if max_level == 0 {
            return BallBand::FULL;
        }
        let t = level.min(max_level) as f64 / max_level as f64;
        BallBand { near: 0.0, far: 0.25 + 0.75 * t }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.near) || !(0.0..=1.0).contains(&self.far) || self.near > self.far {
            return Err(SoccerError::Config(format!("invalid ball band {:?}", self)));
        }
        Ok(())
    }

    /// World x-coordinate range of the band on the given field.
    pub fn x_range(&self, field: &FieldGeometry) -> (f64, f64) {
        let hl = field.half_length();
        let lo = (-hl + self.near * field.field_length).max(-hl + field.ball_radius);
        let hi = (-hl + self.far * field.field_length).min(hl - field.ball_radius);
        (lo, hi.max(lo))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnSpec {
    pub field: FieldGeometry,
    pub n_blue: usize,
    pub n_red: usize,
    pub ball_band: BallBand,
    pub curriculum_level: u32,
    pub rng_stream: u64,
}

const ATTEMPTS_PER_BODY: usize = 200;

/// Samples a fresh episode: agents uniform in their own half with uniform
/// headings, ball uniform in the band, no initial overlaps.
pub fn spawn_episode<R: Rng + ?Sized>(spec: &SpawnSpec, rng: &mut R) -> Result<WorldState> {
    if spec.n_blue == 0 || spec.n_red == 0 {
        return Err(SoccerError::Config("both teams need at least one agent".into()));
    }
    spec.ball_band.validate()?;
    let field = spec.field;
    let hl = field.half_length();
    let hw = field.half_width();
    let r = field.agent_radius;
    if hl <= 2.0 * r || hw <= 2.0 * r {
        return Err(SoccerError::Config("field too small for agents".into()));
    }

    let (bx_lo, bx_hi) = spec.ball_band.x_range(&field);
    let by = hw - field.ball_radius;
    let ball = Vec2::new(rng.random_range(bx_lo..=bx_hi), rng.random_range(-by..=by));

    let total = spec.n_blue + spec.n_red;
    let mut agents: Vec<AgentState> = Vec::with_capacity(total);
    for k in 0..total {
        let team = if k < spec.n_blue { Team::Blue } else { Team::Red };
        let (x_lo, x_hi) = match team {
            Team::Blue => (-hl + r, -r),
            Team::Red => (r, hl - r),
        };
        let mut placed = None;
        for _ in 0..ATTEMPTS_PER_BODY {
            let p = Vec2::new(rng.random_range(x_lo..=x_hi), rng.random_range(-(hw - r)..=(hw - r)));
            let clear_ball = (p - ball).norm() > r + field.ball_radius;
            let clear_agents = agents.iter().all(|a| (a.position - p).norm() > 2.0 * r);
            if clear_ball && clear_agents {
                placed = Some(p);
                break;
            }
        }
        let Some(position) = placed else {
            return Err(SoccerError::SpawnFailed { agents: total, attempts: ATTEMPTS_PER_BODY });
        };
        let heading = sample_heading(rng);
        agents.push(AgentState::at_rest(team, position, heading));
    }

    Ok(WorldState {
        field,
        agents,
        ball: BallState { position: ball, velocity: Vec2::ZERO },
        sim_time: 0.0,
        episode_step: 0,
        score_event: None,
        curriculum_level: spec.curriculum_level,
        rng_stream: spec.rng_stream,
    })
}

/// Uniform on (-pi, pi].
fn sample_heading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // random::<f64>() is in [0, 1), so pi - 2pi*u is in (-pi, pi].
    PI - 2.0 * PI * rng.random::<f64>()
}
