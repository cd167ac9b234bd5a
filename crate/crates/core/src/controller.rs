//! Who drives a team: the scripted bot or a (frozen) learned policy.

use std::sync::Arc;

use crate::config::Config;
use crate::game::GameInstance;
use crate::neural::ActorCritic;
use crate::opponents::bot_act;
use crate::perception::Role;
use crate::sim::{ActionCommand, Team};

#[derive(Debug, Clone)]
pub enum Controller {
    Bot,
    Policy { net: Arc<ActorCritic<f32>>, deterministic: bool },
}

impl Controller {
    pub fn policy(net: Arc<ActorCritic<f32>>, deterministic: bool) -> Self {
        Controller::Policy { net, deterministic }
    }

    /// Command for one agent. Learned policies see their actor observation
    /// (with noise) and either sample or take the mode.
    pub fn act(&self, inst: &mut GameInstance, agent: usize, cfg: &Config) -> ActionCommand {
        match self {
            Controller::Bot => bot_act(&inst.world, agent, &cfg.physics, &cfg.bot),
            Controller::Policy { net, deterministic } => {
                let obs = inst.observe(agent, Role::Actor, cfg);
                let head = net.policy_forward(&obs);
                let a = if *deterministic { head.mode() } else { head.sample(&mut inst.rng).0 };
                ActionCommand::from_slice(&a)
            }
        }
    }
}

/// Commands for every active agent in index order, each team driven by its
/// controller.
pub fn joint_actions(inst: &mut GameInstance, blue: &Controller, red: &Controller, cfg: &Config) -> Vec<ActionCommand> {
    let ids: Vec<usize> = inst.world.active_ids().collect();
    ids.into_iter()
        .map(|id| match inst.world.agents[id].team {
            Team::Blue => blue.act(inst, id, cfg),
            Team::Red => red.act(inst, id, cfg),
        })
        .collect()
}
