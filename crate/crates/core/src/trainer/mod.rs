//! PPO training loop with curricula and self-play.

pub mod curriculum;
pub mod gae;
pub mod ppo;
pub mod rollout;

use std::io::Write;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use curriculum::{
    update_levels, update_selfplay, AdversaryId, CurriculumConfig, CurriculumState, EnvLevels, SelfPlayBuffer,
    SelfPlayUpdate, Snapshot, TeamSizeWeight, WinRateTracker,
};
pub use gae::{compute_gae, normalize_advantages};
pub use ppo::{ppo_update, sample_loss, PpoMetrics, Sample, SampleLoss, TrainerConfig};
pub use rollout::{collect_rollouts, episode_spec, AdversaryNets, EnvSlot, FinishedEpisode, RolloutBuffer, Track, Transition};

use crate::config::Config;
use crate::error::{Result, SoccerError};
use crate::game::instance_rng;
use crate::neural::{ActorCritic, Adam, InputDims, NetworkLayout};
use crate::rules::GameResult;

/// Stream id of the trainer's own generator (minibatch shuffling and
/// initialisation); environment streams use their index.
pub const TRAINER_STREAM: u64 = u64::MAX;

/// One row of the metrics log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: u64,
    pub samples: usize,
    pub episodes: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub touch_rate: f64,
    pub mean_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub avg_win_rate: Option<f64>,
    pub mean_init_level: f64,
    pub mean_field_level: f64,
    pub dense_active: bool,
    pub buffer_size: usize,
    pub promoted: bool,
    pub aborted: bool,
}

pub struct Trainer {
    pub cfg: Config,
    pub net: ActorCritic<f32>,
    pub adam: Adam<f32>,
    pub curriculum: CurriculumState,
    pub envs: Vec<EnvSlot>,
    pub rng: ChaCha8Rng,
    pub epoch: u64,
}

pub fn layout_for(cfg: &Config) -> NetworkLayout {
    NetworkLayout::new(InputDims::from_observation(&cfg.observation), &cfg.network)
}

impl Trainer {
    pub fn new(cfg: Config) -> Result<Self> {
        cfg.validate()?;
        let mut rng = instance_rng(cfg.seed, TRAINER_STREAM);
        let net = ActorCritic::new(layout_for(&cfg), &mut rng);
        let adam = Adam::new(net.params.len());
        let curriculum = CurriculumState::new(cfg.trainer.num_envs, &cfg.curriculum, cfg.reward.dense_active);
        let envs = (0..cfg.trainer.num_envs)
            .map(|i| EnvSlot::new(i as u64, &cfg, curriculum.levels[i], &curriculum))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, net, adam, curriculum, envs, rng, epoch: 0 })
    }

    fn adversary_nets(&self) -> AdversaryNets {
        self.curriculum
            .selfplay
            .snapshots
            .iter()
            .map(|s| {
                let net = ActorCritic::from_params(self.net.layout.clone(), s.params.as_ref().clone())
                    .expect("snapshots share the trainee layout");
                (s.id, Arc::new(net))
            })
            .collect()
    }

    /// One collect-and-update iteration.
    pub fn iteration(&mut self) -> Result<EpochMetrics> {
        let nets = self.adversary_nets();
        let dense_active = self.curriculum.dense_active;
        let buffer = collect_rollouts(&mut self.envs, &self.net, &nets, &mut self.curriculum, &self.cfg, self.cfg.trainer.horizon)?;

        let mut m = EpochMetrics { epoch: self.epoch, dense_active, ..Default::default() };
        let mut touch_steps = 0u64;
        let mut steps = 0u64;
        for f in &buffer.finished {
            match f.stats.outcome {
                GameResult::Win => m.wins += 1,
                GameResult::Draw => m.draws += 1,
                GameResult::Loss => m.losses += 1,
            }
            touch_steps += u64::from(f.stats.blue_touch_steps);
            steps += u64::from(f.stats.steps);
            self.curriculum.winrates.record(f.adversary, f.stats.outcome, self.cfg.curriculum.winrate_window);
        }
        m.episodes = buffer.finished.len();
        m.touch_rate = if steps > 0 { touch_steps as f64 / steps as f64 } else { 0.0 };
        m.samples = buffer.len();
        m.mean_reward = if m.samples > 0 { buffer.total_reward() / m.samples as f64 } else { 0.0 };

        let tc = &self.cfg.trainer;
        let samples = buffer.into_samples(tc.gamma, tc.lambda)?;
        match ppo_update(&mut self.net, &mut self.adam, &samples, tc, &mut self.rng) {
            Ok(p) => {
                m.policy_loss = p.policy_loss;
                m.value_loss = p.value_loss;
                m.entropy = p.entropy;
                m.approx_kl = p.approx_kl;
                m.clip_fraction = p.clip_fraction;
                m.grad_norm = p.grad_norm;
            }
            Err(e @ SoccerError::NonFiniteLoss { .. }) => {
                log::warn!("iteration {}: update skipped: {e}", self.epoch);
                m.aborted = true;
            }
            Err(e) => return Err(e),
        }

        let sp = update_selfplay(&mut self.curriculum, &self.net.params, &self.cfg.curriculum);
        m.promoted = sp.promoted;
        m.avg_win_rate = self.curriculum.average_win_rate(&self.cfg.curriculum);
        let n = self.curriculum.levels.len().max(1) as f64;
        m.mean_init_level = self.curriculum.levels.iter().map(|l| l.init_pos as f64).sum::<f64>() / n;
        m.mean_field_level = self.curriculum.levels.iter().map(|l| l.field as f64).sum::<f64>() / n;
        m.buffer_size = self.curriculum.selfplay.len();
        self.epoch += 1;
        Ok(m)
    }

    /// Runs iterations until `total_epochs`, writing one CSV row per
    /// iteration to `metrics` and calling `checkpoint` every
    /// `checkpoint_every` iterations and at the end.
    pub fn train<W: Write>(
        &mut self,
        metrics: Option<&mut csv::Writer<W>>,
        mut checkpoint: impl FnMut(&Trainer) -> Result<()>,
    ) -> Result<Vec<EpochMetrics>> {
        let mut metrics = metrics;
        let mut all = Vec::new();
        while self.epoch < self.cfg.trainer.total_epochs {
            let m = self.iteration()?;
            log::info!(
                "epoch {} episodes {} W/D/L {}/{}/{} reward {:.4} dense {}",
                m.epoch, m.episodes, m.wins, m.draws, m.losses, m.mean_reward, m.dense_active
            );
            if let Some(w) = metrics.as_deref_mut() {
                w.serialize(&m)?;
                w.flush()?;
            }
            all.push(m);
            let every = self.cfg.trainer.checkpoint_every;
            if every > 0 && self.epoch % every == 0 {
                checkpoint(self)?;
            }
        }
        checkpoint(self)?;
        Ok(all)
    }
}
