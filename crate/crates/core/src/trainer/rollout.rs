//! Vectorised experience collection. Blue agents act with the trainee
//! policy and contribute samples; the red team is driven by the adversary
//! assigned to its environment for the whole episode.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::curriculum::{update_levels, AdversaryId, CurriculumConfig, CurriculumState, EnvLevels};
use super::gae::{compute_gae, normalize_advantages};
use super::ppo::Sample;
use crate::config::Config;
use crate::controller::Controller;
use crate::error::Result;
use crate::game::GameInstance;
use crate::neural::{ActorCritic, N_ACTIONS};
use crate::perception::{ObservationBundle, Role};
use crate::rewards::RewardConfig;
use crate::rules::{EpisodeStats, GameResult, SpawnSpec};
use crate::sim::{ActionCommand, Outcome, Team};

/// Spawn parameters for the next episode of an environment. Team sizes are
/// drawn from the curriculum distribution with the environment's stream.
pub fn episode_spec(cfg: &Config, levels: EnvLevels, inst_rng: &mut impl rand::Rng, stream: u64) -> SpawnSpec {
    let cur: &CurriculumConfig = &cfg.curriculum;
    let (n_blue, n_red) = cur.sample_team_size(inst_rng);
    SpawnSpec {
        field: cur.field_for_level(&cfg.field, levels.field),
        n_blue,
        n_red,
        ball_band: cur.ball_band_for_level(levels.init_pos),
        curriculum_level: levels.init_pos,
        rng_stream: stream,
    }
}

/// One training environment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnvSlot {
    pub index: u64,
    pub inst: GameInstance,
    pub adversary: AdversaryId,
}

impl EnvSlot {
    pub fn new(index: u64, cfg: &Config, levels: EnvLevels, curriculum: &CurriculumState) -> Result<Self> {
        let mut rng = crate::game::instance_rng(cfg.seed, index);
        let spec = episode_spec(cfg, levels, &mut rng, index);
        let adversary = curriculum.sample_adversary(&cfg.curriculum, &mut rng);
        let inst = GameInstance::spawn(&spec, cfg, rng)?;
        Ok(Self { index, inst, adversary })
    }

    fn restart(&mut self, cfg: &Config, levels: EnvLevels, curriculum: &CurriculumState) -> Result<()> {
        let spec = episode_spec(cfg, levels, &mut self.inst.rng, self.index);
        self.adversary = curriculum.sample_adversary(&cfg.curriculum, &mut self.inst.rng);
        self.inst.respawn(&spec, cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub actor_obs: ObservationBundle,
    pub critic_obs: ObservationBundle,
    pub action: [f64; N_ACTIONS],
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
}

/// Consecutive transitions of one agent within one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub env: u64,
    pub agent: usize,
    pub transitions: Vec<Transition>,
    /// Value of the state after the last transition (used when not done or
    /// when bootstrapping a time-limit end).
    pub next_value: f64,
    pub done: bool,
    pub bootstrap: bool,
}

impl Track {
    fn new(env: u64, agent: usize) -> Self {
        Self { env, agent, transitions: Vec::new(), next_value: 0.0, done: false, bootstrap: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinishedEpisode {
    pub env: u64,
    pub adversary: AdversaryId,
    pub stats: EpisodeStats,
    pub levels: EnvLevels,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub tracks: Vec<Track>,
    pub finished: Vec<FinishedEpisode>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.tracks.iter().map(|t| t.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_reward(&self) -> f64 {
        self.tracks.iter().flat_map(|t| &t.transitions).map(|t| t.reward).sum()
    }

    /// Advantages and returns for every transition, with the advantages
    /// normalised over the whole batch.
    pub fn into_samples(self, gamma: f64, lambda: f64) -> Result<Vec<Sample>> {
        let mut samples = Vec::with_capacity(self.len());
        for track in self.tracks {
            let n = track.transitions.len();
            if n == 0 {
                continue;
            }
            let rewards: Vec<f64> = track.transitions.iter().map(|t| t.reward).collect();
            let mut values: Vec<f64> = track.transitions.iter().map(|t| t.value).collect();
            values.push(track.next_value);
            let mut dones = vec![false; n];
            let mut boots = vec![false; n];
            dones[n - 1] = track.done;
            boots[n - 1] = track.bootstrap;
            let (adv, ret) = compute_gae(&rewards, &values, &dones, &boots, gamma, lambda)?;
            for ((t, a), r) in track.transitions.into_iter().zip(adv).zip(ret) {
                samples.push(Sample {
                    actor_obs: t.actor_obs,
                    critic_obs: t.critic_obs,
                    action: t.action,
                    log_prob: t.log_prob,
                    value: t.value,
                    advantage: a,
                    ret: r,
                });
            }
        }
        let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
        normalize_advantages(&mut adv);
        for (s, a) in samples.iter_mut().zip(adv) {
            s.advantage = a;
        }
        Ok(samples)
    }
}

/// Frozen red-team policies, keyed by snapshot id.
pub type AdversaryNets = BTreeMap<u64, Arc<ActorCritic<f32>>>;

fn red_controller(adv: AdversaryId, nets: &AdversaryNets) -> Controller {
    match adv {
        AdversaryId::Bot => Controller::Bot,
        AdversaryId::Snapshot(id) => match nets.get(&id) {
            Some(net) => Controller::policy(net.clone(), false),
            None => Controller::Bot,
        },
    }
}

struct EnvRollout {
    tracks: Vec<Track>,
    finished: Vec<FinishedEpisode>,
}

fn collect_env(
    slot: &mut EnvSlot,
    levels: &mut EnvLevels,
    trainee: &ActorCritic<f32>,
    nets: &AdversaryNets,
    curriculum: &CurriculumState,
    cfg: &Config,
    reward: &RewardConfig,
    horizon: usize,
) -> Result<EnvRollout> {
    let scale = cfg.trainer.reward_scale;
    let mut tracks = Vec::new();
    let mut finished = Vec::new();
    let mut open: Vec<Track> = slot.inst.blue_ids().into_iter().map(|id| Track::new(slot.index, id)).collect();
    let mut red = red_controller(slot.adversary, nets);

    for _ in 0..horizon {
        let inst = &mut slot.inst;
        let mut actions = vec![ActionCommand::default(); inst.world.agents.len()];
        let mut pending = Vec::with_capacity(open.len());
        for track in &open {
            let id = track.agent;
            let actor_obs = inst.observe(id, Role::Actor, cfg);
            let critic_obs = inst.observe(id, Role::Critic, cfg);
            let head = trainee.policy_forward(&actor_obs);
            let (action, log_prob) = head.sample(&mut inst.rng);
            let value = trainee.value_forward(&critic_obs);
            actions[id] = ActionCommand::from_slice(&action);
            pending.push((actor_obs, critic_obs, action, log_prob, value));
        }
        let red_ids: Vec<usize> = inst.world.team_ids(Team::Red).collect();
        for id in red_ids {
            actions[id] = red.act(inst, id, cfg);
        }
        let active: Vec<ActionCommand> = inst.world.active_ids().map(|id| actions[id]).collect();
        let report = inst.step(&active, cfg, reward)?;

        for ((track, p), (id, terms)) in open.iter_mut().zip(pending).zip(&report.rewards) {
            debug_assert_eq!(track.agent, *id);
            let (actor_obs, critic_obs, action, log_prob, value) = p;
            track.transitions.push(Transition { actor_obs, critic_obs, action, log_prob, value, reward: scale * terms.total() });
        }

        if let (Some(outcome), Some(stats)) = (report.outcome, report.episode) {
            let timeout = outcome == Outcome::Timeout;
            for mut track in open.drain(..) {
                track.done = true;
                track.bootstrap = timeout;
                if timeout {
                    let obs = slot.inst.observe(track.agent, Role::Critic, cfg);
                    track.next_value = trainee.value_forward(&obs);
                }
                tracks.push(track);
            }
            let result = GameResult::from(outcome);
            finished.push(FinishedEpisode { env: slot.index, adversary: slot.adversary, stats, levels: *levels });
            *levels = update_levels(result, *levels, &cfg.curriculum);
            slot.restart(cfg, *levels, curriculum)?;
            red = red_controller(slot.adversary, nets);
            open = slot.inst.blue_ids().into_iter().map(|id| Track::new(slot.index, id)).collect();
        }
    }
    for mut track in open {
        if track.transitions.is_empty() {
            continue;
        }
        let obs = slot.inst.observe(track.agent, Role::Critic, cfg);
        track.next_value = trainee.value_forward(&obs);
        tracks.push(track);
    }
    Ok(EnvRollout { tracks, finished })
}

/// Steps every environment `horizon` control steps. Environments that
/// finish an episode move their levels, draw a new team composition and
/// adversary, and keep filling the buffer.
pub fn collect_rollouts(
    envs: &mut [EnvSlot],
    trainee: &ActorCritic<f32>,
    nets: &AdversaryNets,
    curriculum: &mut CurriculumState,
    cfg: &Config,
    horizon: usize,
) -> Result<RolloutBuffer> {
    let reward = RewardConfig { dense_active: curriculum.dense_active, ..cfg.reward };
    let mut levels = curriculum.levels.clone();
    let frozen: &CurriculumState = curriculum;
    let parts: Vec<Result<EnvRollout>> = envs
        .par_iter_mut()
        .zip(levels.par_iter_mut())
        .map(|(slot, lv)| collect_env(slot, lv, trainee, nets, frozen, cfg, &reward, horizon))
        .collect();
    curriculum.levels = levels;
    let mut buffer = RolloutBuffer::default();
    for part in parts {
        let part = part?;
        buffer.tracks.extend(part.tracks);
        buffer.finished.extend(part.finished);
    }
    Ok(buffer)
}
