//! Scripted heuristic adversary: one greedy attacker, a goalkeeper and
//! defenders.

use serde::{Deserialize, Serialize};

use crate::sim::{inverse_remap_unit_disk, wrap_angle, ActionCommand, PhysicsConfig, Team, Vec2, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BotConfig {
    /// Keeper stands this far in front of its goal centre, towards the ball.
    pub keeper_depth: f64,
    /// Defenders hold the point this fraction of the ball-to-goal distance
    /// away from the ball.
    pub defender_standoff: f64,
    /// Proportional gain (1/s) for position holding.
    pub position_gain: f64,
    /// Proportional gain (1/s) for heading control.
    pub heading_gain: f64,
}

impl Default for BotConfig {
    fn default() -> Self {
        Self { keeper_depth: 0.3, defender_standoff: 0.4, position_gain: 3.0, heading_gain: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotRoleAssignment {
    pub attacker: usize,
    pub goalkeeper: Option<usize>,
    pub defenders: Vec<usize>,
}

impl BotRoleAssignment {
    pub fn role_of(&self, id: usize) -> Option<BotRole> {
        if id == self.attacker {
            Some(BotRole::Attacker)
        } else if self.goalkeeper == Some(id) {
            Some(BotRole::Goalkeeper)
        } else if self.defenders.contains(&id) {
            Some(BotRole::Defender)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BotRole {
    Attacker,
    Goalkeeper,
    Defender,
}

fn closest_to(world: &WorldState, ids: &[usize], target: Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &id in ids {
        let d = (world.agents[id].position - target).norm();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// Attacker: closest to the ball. Keeper: closest of the rest to the own
/// goal. Everyone else defends. Ties go to the lowest index.
pub fn assign_roles(world: &WorldState, team: Team) -> Option<BotRoleAssignment> {
    let ids: Vec<usize> = world.team_ids(team).collect();
    let attacker = closest_to(world, &ids, world.ball.position)?;
    let rest: Vec<usize> = ids.into_iter().filter(|&i| i != attacker).collect();
    let goalkeeper = closest_to(world, &rest, world.field.own_goal(team));
    let defenders = rest.into_iter().filter(|&i| Some(i) != goalkeeper).collect();
    Some(BotRoleAssignment { attacker, goalkeeper, defenders })
}

/// Ego-frame command that drives towards `dir_world` with the given speed
/// fraction, satisfying the disc constraint after remap.
fn drive(heading: f64, dir_world: Vec2, fraction: f64) -> (f64, f64) {
    let ego = dir_world.normalized().rotate(-heading) * fraction.clamp(0.0, 1.0);
    inverse_remap_unit_disk(ego.x, ego.y)
}

fn turn_towards(heading: f64, target_angle: f64, gain: f64, phys: &PhysicsConfig) -> f64 {
    (gain * wrap_angle(target_angle - heading) / phys.max_angular_speed).clamp(-1.0, 1.0)
}

/// Command for one bot-controlled agent.
pub fn bot_act(world: &WorldState, agent_id: usize, phys: &PhysicsConfig, cfg: &BotConfig) -> ActionCommand {
    let agent = &world.agents[agent_id];
    let team = agent.team;
    let roles = assign_roles(world, team).expect("agent's team is non-empty");
    let ball = world.ball.position;
    let to_ball = ball - agent.position;
    let kickable = to_ball.norm() <= world.field.kickable_radius;

    let mut cmd = ActionCommand::default();
    if kickable {
        let shot = world.field.attack_goal(team) - ball;
        let (kx, ky) = drive(agent.heading, shot, 1.0);
        cmd.k_x = kx;
        cmd.k_y = ky;
    }

    let target = match roles.role_of(agent_id).unwrap_or(BotRole::Defender) {
        BotRole::Attacker => None,
        BotRole::Goalkeeper => {
            let goal = world.field.own_goal(team);
            Some(goal + (ball - goal).normalized() * cfg.keeper_depth)
        }
        BotRole::Defender => {
            let goal = world.field.own_goal(team);
            Some(ball + (goal - ball) * cfg.defender_standoff)
        }
    };

    match target {
        None => {
            let (vx, vy) = drive(agent.heading, to_ball, 1.0);
            cmd.v_x = vx;
            cmd.v_y = vy;
        }
        Some(p) => {
            let err = p - agent.position;
            let fraction = cfg.position_gain * err.norm() / phys.max_speed;
            let (vx, vy) = drive(agent.heading, err, fraction);
            cmd.v_x = vx;
            cmd.v_y = vy;
        }
    }
    cmd.v_theta = turn_towards(agent.heading, to_ball.angle(), cfg.heading_gain, phys);
    cmd
}
