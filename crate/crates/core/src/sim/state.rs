use serde::{Deserialize, Serialize};

use super::vec2::Vec2;
use crate::error::{Result, SoccerError};

/// Playing field dimensions. The field is centred on the origin with the
/// long axis along x; blue defends the goal at `-field_length / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldGeometry {
    pub field_length: f64,
    pub field_width: f64,
    pub goal_width: f64,
    /// Distance of the enclosing wall outside the field lines.
    pub wall_offset: f64,
    pub kickable_radius: f64,
    pub ownership_radius: f64,
    pub agent_radius: f64,
    pub ball_radius: f64,
}

impl Default for FieldGeometry {
    fn default() -> Self {
        Self {
            field_length: 9.0,
            field_width: 6.0,
            goal_width: 1.5,
            wall_offset: 0.5,
            kickable_radius: 0.3,
            ownership_radius: 0.25,
            agent_radius: 0.15,
            ball_radius: 0.05,
        }
    }
}

impl FieldGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.field_length,
            self.field_width,
            self.goal_width,
            self.wall_offset,
            self.kickable_radius,
            self.ownership_radius,
            self.agent_radius,
            self.ball_radius,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SoccerError::Config("field dimensions must be positive".into()));
        }
        if self.goal_width >= self.field_width {
            return Err(SoccerError::Config("goal_width must be smaller than field_width".into()));
        }
        if self.ownership_radius <= self.ball_radius {
            return Err(SoccerError::Config("ownership_radius must exceed ball_radius".into()));
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.field_length
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.field_width
    }

    /// Scales field, goal and width by `factor`; body sizes and the wall
    /// offset are kept.
    pub fn scaled(&self, factor: f64) -> FieldGeometry {
        FieldGeometry {
            field_length: self.field_length * factor,
            field_width: self.field_width * factor,
            goal_width: self.goal_width * factor,
            ..*self
        }
    }

    /// Centre of the goal that `team` attacks.
    pub fn attack_goal(&self, team: Team) -> Vec2 {
        match team {
            Team::Blue => Vec2::new(self.half_length(), 0.0),
            Team::Red => Vec2::new(-self.half_length(), 0.0),
        }
    }

    /// Centre of the goal that `team` defends.
    pub fn own_goal(&self, team: Team) -> Vec2 {
        self.attack_goal(team.opponent())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Blue,
    Red,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Red,
            Team::Red => Team::Blue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vec2,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub linear_velocity: Vec2,
    pub angular_velocity: f64,
    /// Acceleration measured over the last physics substep; feeds the
    /// derivative term of the velocity tracker.
    pub linear_acceleration: Vec2,
    pub angular_acceleration: f64,
    pub team: Team,
    pub active: bool,
}

impl AgentState {
    pub fn at_rest(team: Team, position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading,
            linear_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            linear_acceleration: Vec2::ZERO,
            angular_acceleration: 0.0,
            team,
            active: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Goal scored this episode, named by the scoring team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreEvent {
    BlueGoal,
    RedGoal,
}

impl ScoreEvent {
    pub fn scorer(self) -> Team {
        match self {
            ScoreEvent::BlueGoal => Team::Blue,
            ScoreEvent::RedGoal => Team::Red,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub field: FieldGeometry,
    /// Blue agents first, then red.
    pub agents: Vec<AgentState>,
    pub ball: BallState,
    pub sim_time: f64,
    pub episode_step: u64,
    pub score_event: Option<ScoreEvent>,
    /// Initial-position curriculum level the episode was spawned with.
    pub curriculum_level: u32,
    pub rng_stream: u64,
}

impl WorldState {
    pub fn active_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.agents.iter().enumerate().filter(|(_, a)| a.active).map(|(i, _)| i)
    }

    pub fn active_count(&self) -> usize {
        self.agents.iter().filter(|a| a.active).count()
    }

    pub fn team_ids(&self, team: Team) -> impl Iterator<Item = usize> + '_ {
        self.agents
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.active && a.team == team)
            .map(|(i, _)| i)
    }

    pub fn team_count(&self, team: Team) -> usize {
        self.team_ids(team).count()
    }

    /// Total kinetic energy of agents and ball, using the given masses and
    /// a solid-disc moment of inertia for agents.
    pub fn kinetic_energy(&self, agent_mass: f64, ball_mass: f64) -> f64 {
        let inertia = 0.5 * agent_mass * self.field.agent_radius * self.field.agent_radius;
        let agents: f64 = self
            .agents
            .iter()
            .filter(|a| a.active)
            .map(|a| {
                0.5 * agent_mass * a.linear_velocity.norm_sq()
                    + 0.5 * inertia * a.angular_velocity * a.angular_velocity
            })
            .sum();
        agents + 0.5 * ball_mass * self.ball.velocity.norm_sq()
    }
}

/// Physical constants of the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    pub control_dt: f64,
    pub substeps: u32,
    pub episode_limit: f64,
    pub agent_mass: f64,
    pub ball_mass: f64,
    pub max_speed: f64,
    pub max_angular_speed: f64,
    pub max_kick_speed: f64,
    /// Half-life of the exponential ball velocity decay, seconds.
    pub ball_friction_half_life: f64,
    pub restitution_wall: f64,
    pub restitution_agent: f64,
    pub restitution_ball: f64,
    pub gains: PdGains,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.1,
            substeps: 4,
            episode_limit: 30.0,
            agent_mass: 5.0,
            ball_mass: 0.5,
            max_speed: 1.5,
            max_angular_speed: 4.0,
            max_kick_speed: 4.0,
            ball_friction_half_life: 1.5,
            restitution_wall: 0.2,
            restitution_agent: 0.2,
            restitution_ball: 0.5,
            gains: PdGains::default(),
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_dt > 0.0) || self.substeps == 0 || !(self.episode_limit > 0.0) {
            return Err(SoccerError::Config("control_dt, substeps and episode_limit must be positive".into()));
        }
        if !(self.agent_mass > 0.0 && self.ball_mass > 0.0) {
            return Err(SoccerError::Config("masses must be positive".into()));
        }
        if !(self.max_speed > 0.0 && self.max_angular_speed > 0.0 && self.max_kick_speed >= 0.0) {
            return Err(SoccerError::Config("speed limits must be positive".into()));
        }
        for e in [self.restitution_wall, self.restitution_agent, self.restitution_ball] {
            if !(0.0..=1.0).contains(&e) {
                return Err(SoccerError::Config("restitution must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn agent_inertia(&self, field: &FieldGeometry) -> f64 {
        0.5 * self.agent_mass * field.agent_radius * field.agent_radius
    }
}

/// Gains of the base velocity tracker. Linear gains act on m/s error and
/// produce newtons; angular gains act on rad/s error and produce N*m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdGains {
    pub kp_linear: f64,
    pub kd_linear: f64,
    pub max_force: f64,
    pub kp_angular: f64,
    pub kd_angular: f64,
    pub max_torque: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self {
            kp_linear: 50.0,
            kd_linear: 0.5,
            max_force: 40.0,
            kp_angular: 0.6,
            kd_angular: 0.005,
            max_torque: 1.5,
        }
    }
}
