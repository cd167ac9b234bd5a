use serde::{Deserialize, Serialize};

use super::control::{pd_track, ActionCommand, Twist};
use super::state::{FieldGeometry, PhysicsConfig, ScoreEvent, Team, WorldState};
use super::vec2::{wrap_angle, Vec2};
use crate::error::{Result, SoccerError};

/// Things that happened during one control step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    pub goal: Option<ScoreEvent>,
    pub ball_out: bool,
    /// One flag per agent (indexed like `WorldState::agents`): involved in an
    /// agent-agent or agent-wall contact. Ball contact does not count.
    pub collisions: Vec<bool>,
    /// Agent whose kick command took effect this step.
    pub kicker: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    BlueWin,
    RedWin,
    Timeout,
}

/// Overrides the ball velocity with the agent's kick if the ball lies in the
/// agent's kickable area. `kick` is the remapped ego-frame command.
pub fn apply_kick(world: &mut WorldState, agent_id: usize, kick: Vec2, max_kick_speed: f64) -> bool {
    let agent = &world.agents[agent_id];
    if !agent.active {
        return false;
    }
    let dist = (world.ball.position - agent.position).norm();
    if dist > world.field.kickable_radius {
        return false;
    }
    world.ball.velocity = kick.rotate(agent.heading) * max_kick_speed;
    true
}

/// Selects the agent whose kick applies: the active agent closest to the ball
/// inside its kickable area, lowest index on ties.
pub fn kicking_agent(world: &WorldState) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for id in world.active_ids() {
        let d = (world.ball.position - world.agents[id].position).norm();
        if d <= world.field.kickable_radius && best.map_or(true, |(_, bd)| d < bd) {
            best = Some((id, d));
        }
    }
    best.map(|(id, _)| id)
}

const MAX_COLLISION_PASSES: usize = 8;

/// Resolves agent-agent, agent-wall and agent-ball overlaps in place.
/// Returns one flag per agent for agent-agent or agent-wall contacts.
pub fn resolve_collisions(world: &mut WorldState, phys: &PhysicsConfig) -> Vec<bool> {
    let mut flags = vec![false; world.agents.len()];
    let field = world.field;
    let r = field.agent_radius;
    let min_dist = 2.0 * r;

    for pass in 0..MAX_COLLISION_PASSES {
        let mut any = false;
        let n = world.agents.len();
        for i in 0..n {
            if !world.agents[i].active {
                continue;
            }
            for j in (i + 1)..n {
                if !world.agents[j].active {
                    continue;
                }
                let delta = world.agents[j].position - world.agents[i].position;
                let dist = delta.norm();
                if dist >= min_dist {
                    continue;
                }
                any = true;
                flags[i] = true;
                flags[j] = true;
                // Coincident centres: separate along +x, deterministic.
                let normal = if dist > 1e-12 { delta * (1.0 / dist) } else { Vec2::new(1.0, 0.0) };
                let push = normal * (0.5 * (min_dist - dist));
                world.agents[i].position -= push;
                world.agents[j].position += push;
                if pass == 0 {
                    let rel = (world.agents[j].linear_velocity - world.agents[i].linear_velocity).dot(normal);
                    if rel < 0.0 {
                        // Equal masses.
                        let impulse = normal * (0.5 * (1.0 + phys.restitution_agent) * rel);
                        world.agents[i].linear_velocity += impulse;
                        world.agents[j].linear_velocity -= impulse;
                    }
                }
            }
        }
        for (i, agent) in world.agents.iter_mut().enumerate() {
            if agent.active && clamp_to_walls(agent, &field, phys.restitution_wall) {
                any = true;
                flags[i] = true;
            }
        }
        if !any {
            break;
        }
    }

    resolve_ball_contacts(world, phys);
    flags
}

fn clamp_to_walls(agent: &mut super::state::AgentState, field: &FieldGeometry, restitution: f64) -> bool {
    let xmax = field.half_length() + field.wall_offset - field.agent_radius;
    let ymax = field.half_width() + field.wall_offset - field.agent_radius;
    let mut hit = false;
    if agent.position.x > xmax {
        agent.position.x = xmax;
        if agent.linear_velocity.x > 0.0 {
            agent.linear_velocity.x *= -restitution;
        }
        hit = true;
    } else if agent.position.x < -xmax {
        agent.position.x = -xmax;
        if agent.linear_velocity.x < 0.0 {
            agent.linear_velocity.x *= -restitution;
        }
        hit = true;
    }
    if agent.position.y > ymax {
        agent.position.y = ymax;
        if agent.linear_velocity.y > 0.0 {
            agent.linear_velocity.y *= -restitution;
        }
        hit = true;
    } else if agent.position.y < -ymax {
        agent.position.y = -ymax;
        if agent.linear_velocity.y < 0.0 {
            agent.linear_velocity.y *= -restitution;
        }
        hit = true;
    }
    hit
}

fn resolve_ball_contacts(world: &mut WorldState, phys: &PhysicsConfig) {
    let contact = world.field.agent_radius + world.field.ball_radius;
    let inv_a = 1.0 / phys.agent_mass;
    let inv_b = 1.0 / phys.ball_mass;
    for i in 0..world.agents.len() {
        if !world.agents[i].active {
            continue;
        }
        let delta = world.ball.position - world.agents[i].position;
        let dist = delta.norm();
        if dist >= contact {
            continue;
        }
        let normal = if dist > 1e-12 { delta * (1.0 / dist) } else { Vec2::new(1.0, 0.0) };
        let depth = contact - dist;
        let share_b = inv_b / (inv_a + inv_b);
        world.ball.position += normal * (depth * share_b);
        world.agents[i].position -= normal * (depth * (1.0 - share_b));
        let rel = (world.ball.velocity - world.agents[i].linear_velocity).dot(normal);
        if rel < 0.0 {
            let j = -(1.0 + phys.restitution_ball) * rel / (inv_a + inv_b);
            world.ball.velocity += normal * (j * inv_b);
            world.agents[i].linear_velocity -= normal * (j * inv_a);
        }
    }
}

/// Outcome of the episode so far, if it has ended.
pub fn check_termination(world: &WorldState, episode_limit: f64) -> Option<Outcome> {
    match world.score_event {
        Some(ScoreEvent::BlueGoal) => Some(Outcome::BlueWin),
        Some(ScoreEvent::RedGoal) => Some(Outcome::RedWin),
        None if world.sim_time >= episode_limit - 1e-9 => Some(Outcome::Timeout),
        None => None,
    }
}

enum BallExit {
    Goal(ScoreEvent),
    Out(Vec2),
}

/// Checks the ball segment `from -> to` against the field lines.
fn ball_exit(field: &FieldGeometry, from: Vec2, to: Vec2) -> Option<BallExit> {
    let hl = field.half_length();
    let hw = field.half_width();
    if to.x.abs() <= hl && to.y.abs() <= hw {
        return None;
    }
    // Parametric time of the first boundary crossing along the segment.
    let d = to - from;
    let mut t_exit = 1.0f64;
    let mut end_line = false;
    if to.x.abs() > hl && d.x != 0.0 {
        let line = hl * to.x.signum();
        let t = ((line - from.x) / d.x).clamp(0.0, 1.0);
        if t <= t_exit {
            t_exit = t;
            end_line = true;
        }
    }
    if to.y.abs() > hw && d.y != 0.0 {
        let line = hw * to.y.signum();
        let t = ((line - from.y) / d.y).clamp(0.0, 1.0);
        if t < t_exit {
            t_exit = t;
            end_line = false;
        }
    }
    let cross = from + d * t_exit;
    if end_line && cross.y.abs() <= 0.5 * field.goal_width {
        let ev = if to.x > 0.0 { ScoreEvent::BlueGoal } else { ScoreEvent::RedGoal };
        return Some(BallExit::Goal(ev));
    }
    Some(BallExit::Out(Vec2::new(cross.x.clamp(-hl, hl), cross.y.clamp(-hw, hw))))
}

/// Advances one control step. `actions` holds one command per active agent,
/// in agent-index order.
pub fn step_world(
    world: &WorldState,
    actions: &[ActionCommand],
    dt: f64,
    phys: &PhysicsConfig,
) -> Result<(WorldState, StepEvents)> {
    let active: Vec<usize> = world.active_ids().collect();
    if actions.len() != active.len() {
        return Err(SoccerError::ActionCountMismatch { expected: active.len(), got: actions.len() });
    }
    if !(dt > 0.0) {
        return Err(SoccerError::Config(format!("dt must be positive, got {dt}")));
    }

    let mut next = world.clone();
    let mut events = StepEvents { collisions: vec![false; world.agents.len()], ..Default::default() };

    if next.score_event.is_some() {
        // Terminal world: only the clock moves.
        advance_clock(&mut next, dt);
        return Ok((next, events));
    }

    // Commands in world frame, saturated at the configured limits.
    let mut commands = vec![Twist::default(); world.agents.len()];
    for (&id, action) in active.iter().zip(actions) {
        let agent = &world.agents[id];
        let linear = action.base_velocity().rotate(agent.heading) * phys.max_speed;
        commands[id] = Twist {
            linear: linear.clamp_norm(phys.max_speed),
            angular: action.turn() * phys.max_angular_speed,
        };
    }

    if let Some(kicker) = kicking_agent(&next) {
        let slot = active.iter().position(|&id| id == kicker).expect("kicker is active");
        apply_kick(&mut next, kicker, actions[slot].kick(), phys.max_kick_speed);
        events.kicker = Some(kicker);
    }

    let h = dt / phys.substeps as f64;
    let inertia = phys.agent_inertia(&world.field);
    let ball_decay = 0.5f64.powf(h / phys.ball_friction_half_life);

    for _ in 0..phys.substeps {
        for &id in &active {
            let agent = &mut next.agents[id];
            let wrench = pd_track(
                commands[id],
                Twist { linear: agent.linear_velocity, angular: agent.angular_velocity },
                Twist { linear: agent.linear_acceleration, angular: agent.angular_acceleration },
                &phys.gains,
            );
            let acc = wrench.force * (1.0 / phys.agent_mass);
            let alpha = wrench.torque / inertia;
            agent.linear_velocity += acc * h;
            agent.angular_velocity += alpha * h;
            agent.position += agent.linear_velocity * h;
            agent.heading = wrap_angle(agent.heading + agent.angular_velocity * h);
            agent.linear_acceleration = acc;
            agent.angular_acceleration = alpha;
        }

        let ball_from = next.ball.position;
        next.ball.velocity = next.ball.velocity * ball_decay;
        next.ball.position += next.ball.velocity * h;

        let flags = resolve_collisions(&mut next, phys);
        for (acc, f) in events.collisions.iter_mut().zip(flags) {
            *acc |= f;
        }

        match ball_exit(&next.field, ball_from, next.ball.position) {
            Some(BallExit::Goal(ev)) => {
                next.score_event = Some(ev);
                events.goal = Some(ev);
                break;
            }
            Some(BallExit::Out(at)) => {
                next.ball.position = at;
                next.ball.velocity = Vec2::ZERO;
                events.ball_out = true;
            }
            None => {}
        }
    }

    advance_clock(&mut next, dt);
    Ok((next, events))
}

fn advance_clock(world: &mut WorldState, dt: f64) {
    world.episode_step += 1;
    world.sim_time = world.episode_step as f64 * dt;
}

/// Steps many independent instances. Equivalent to calling [`step_world`]
/// on each element.
pub fn step_batch(
    worlds: &[WorldState],
    actions: &[Vec<ActionCommand>],
    dt: f64,
    phys: &PhysicsConfig,
) -> Result<Vec<(WorldState, StepEvents)>> {
    use rayon::prelude::*;
    if worlds.len() != actions.len() {
        return Err(SoccerError::LengthMismatch(format!(
            "{} worlds but {} action sets",
            worlds.len(),
            actions.len()
        )));
    }
    worlds.par_iter().zip(actions.par_iter()).map(|(w, a)| step_world(w, a, dt, phys)).collect()
}

/// Team of the agent with the given id.
pub fn team_of(world: &WorldState, id: usize) -> Team {
    world.agents[id].team
}
