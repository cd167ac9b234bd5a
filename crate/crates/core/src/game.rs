//! One game instance: world state plus the per-episode bookkeeping needed
//! for observations, events, rewards and statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::perception::{build_observation, HistoryBuffer, ObservationBundle, Role};
use crate::rewards::{compute_rewards, RewardConfig, RewardTerms};
use crate::rules::{
    assign_ownership, detect_events, spawn_episode, EpisodeStats, GameEvent, OwnershipState, PossessionTracker,
    SpawnSpec, StatsAccumulator,
};
use crate::sim::{check_termination, step_world, ActionCommand, Outcome, StepEvents, Team, WorldState};

/// Deterministic per-instance random stream.
pub fn instance_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInstance {
    pub world: WorldState,
    pub history: HistoryBuffer,
    pub tracker: PossessionTracker,
    pub ownership: OwnershipState,
    pub stats: StatsAccumulator,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub physics: StepEvents,
    pub events: Vec<GameEvent>,
    /// Rewards of the active blue agents.
    pub rewards: Vec<(usize, RewardTerms)>,
    pub outcome: Option<Outcome>,
    pub episode: Option<EpisodeStats>,
}

impl GameInstance {
    pub fn spawn(spec: &SpawnSpec, cfg: &Config, mut rng: ChaCha8Rng) -> Result<Self> {
        let world = spawn_episode(spec, &mut rng)?;
        Ok(Self::from_world(world, cfg, rng))
    }

    pub fn from_world(world: WorldState, cfg: &Config, rng: ChaCha8Rng) -> Self {
        let history = HistoryBuffer::new(&world, cfg.observation.history_len);
        let ownership = assign_ownership(&world);
        let tracker = PossessionTracker {
            last_owner: ownership.owner_agent.zip(ownership.owner_team),
        };
        Self { world, history, tracker, ownership, stats: StatsAccumulator::default(), rng }
    }

    /// Starts a new episode in place, keeping the random stream.
    pub fn respawn(&mut self, spec: &SpawnSpec, cfg: &Config) -> Result<()> {
        let world = spawn_episode(spec, &mut self.rng)?;
        let rng = self.rng.clone();
        *self = Self::from_world(world, cfg, rng);
        Ok(())
    }

    pub fn observe(&mut self, agent: usize, role: Role, cfg: &Config) -> ObservationBundle {
        build_observation(&self.world, agent, &self.history, &cfg.observation, role, &mut self.rng)
    }

    pub fn blue_ids(&self) -> Vec<usize> {
        self.world.team_ids(Team::Blue).collect()
    }

    /// True when some blue agent has the ball in its kickable area.
    pub fn blue_touch(&self) -> bool {
        let w = &self.world;
        w.team_ids(Team::Blue)
            .any(|id| (w.agents[id].position - w.ball.position).norm() <= w.field.kickable_radius)
    }

    /// Advances one control step with one command per active agent.
    pub fn step(&mut self, actions: &[ActionCommand], cfg: &Config, reward: &RewardConfig) -> Result<StepReport> {
        let dt = cfg.physics.control_dt;
        let (next, physics) = step_world(&self.world, actions, dt, &cfg.physics)?;
        self.history.push(&self.world);
        self.world = next;
        self.ownership = assign_ownership(&self.world);
        let teams: Vec<Team> = self.world.agents.iter().map(|a| a.team).collect();
        let (tracker, events) = detect_events(&self.tracker, &self.ownership, &physics, &teams, self.world.sim_time);
        self.tracker = tracker;
        let touch = self.blue_touch();
        self.stats.record_step(dt, &self.ownership, &events, touch);
        let rewards = compute_rewards(&self.world, &physics, &self.ownership, reward);
        let outcome = check_termination(&self.world, cfg.physics.episode_limit);
        let episode = outcome.map(|o| self.stats.finish(o, self.world.sim_time));
        Ok(StepReport { physics, events, rewards, outcome, episode })
    }
}
