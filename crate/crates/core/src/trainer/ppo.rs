//! Clipped-surrogate policy optimisation over a collected batch.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::neural::{ActorCritic, Adam, AdamConfig, BetaHead, N_ACTIONS, N_RAW};
use crate::perception::ObservationBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub adam: AdamConfig,
    pub epochs_per_batch: usize,
    pub minibatches: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Control steps collected per environment per iteration.
    pub horizon: usize,
    pub num_envs: usize,
    /// Collect-and-update iterations.
    pub total_epochs: u64,
    /// Global gradient-norm limit; 0 disables clipping.
    pub max_grad_norm: f64,
    /// Multiplies every reward before it enters the buffer.
    pub reward_scale: f64,
    /// Samples per parallel gradient chunk. Results do not depend on the
    /// thread count, only on this value.
    pub grad_chunk: usize,
    /// Checkpoint every this many iterations (0: only at the end).
    pub checkpoint_every: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            adam: AdamConfig::default(),
            epochs_per_batch: 5,
            minibatches: 4,
            entropy_coef: 0.005,
            value_coef: 0.5,
            horizon: 24,
            num_envs: 16,
            total_epochs: 1000,
            max_grad_norm: 1.0,
            reward_scale: 0.1,
            grad_chunk: 32,
            checkpoint_every: 100,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !unit(self.gamma) || !unit(self.lambda) {
            return Err(SoccerError::Config("gamma and lambda must lie in (0, 1]".into()));
        }
        if !(self.clip > 0.0) {
            return Err(SoccerError::Config("clip must be positive".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(SoccerError::Config("learning_rate must be positive".into()));
        }
        if self.epochs_per_batch == 0 || self.minibatches == 0 || self.horizon == 0 || self.num_envs == 0 {
            return Err(SoccerError::Config("epochs, minibatches, horizon and num_envs must be positive".into()));
        }
        if self.grad_chunk == 0 || !(self.max_grad_norm >= 0.0) || !(self.reward_scale > 0.0) {
            return Err(SoccerError::Config("grad_chunk, max_grad_norm or reward_scale out of range".into()));
        }
        Ok(())
    }
}

/// One training sample with its advantage and return already computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub actor_obs: ObservationBundle,
    pub critic_obs: ObservationBundle,
    pub action: [f64; N_ACTIONS],
    pub log_prob: f64,
    pub value: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Loss pieces of one sample, unweighted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleLoss {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub ratio: f64,
    pub clipped: bool,
}

impl SampleLoss {
    pub fn total(&self, cfg: &TrainerConfig) -> f64 {
        self.policy + cfg.value_coef * self.value - cfg.entropy_coef * self.entropy
    }
}

/// Loss of one sample and its gradients at the raw policy outputs and at
/// the value output.
pub fn sample_loss(raw: &[f64], value: f64, s: &Sample, cfg: &TrainerConfig) -> (SampleLoss, [f64; 10], f64) {
    let head = BetaHead::from_raw(raw);
    let logp = head.log_prob(&s.action);
    let ratio = (logp - s.log_prob).exp();
    let clipped_ratio = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
    let a = s.advantage;
    let unclipped_active = ratio * a <= clipped_ratio * a;
    let policy = -(ratio * a).min(clipped_ratio * a);
    let w_logp = if unclipped_active { -ratio * a } else { 0.0 };
    let entropy = head.entropy();
    let d_raw = head.raw_grad(raw, &s.action, w_logp, -cfg.entropy_coef);
    let err = value - s.ret;
    let loss = SampleLoss {
        policy,
        value: 0.5 * err * err,
        entropy,
        ratio,
        clipped: (ratio - 1.0).abs() > cfg.clip,
    };
    (loss, d_raw, cfg.value_coef * err)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoMetrics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub minibatch_updates: u64,
}

#[derive(Default)]
struct Accum {
    grad: Vec<f64>,
    policy: f64,
    value: f64,
    entropy: f64,
    kl: f64,
    clipped: f64,
    finite: bool,
}

impl Accum {
    fn new(n: usize) -> Self {
        Self { grad: vec![0.0; n], finite: true, ..Default::default() }
    }

    fn merge(&mut self, other: Accum) {
        for (g, o) in self.grad.iter_mut().zip(other.grad) {
            *g += o;
        }
        self.policy += other.policy;
        self.value += other.value;
        self.entropy += other.entropy;
        self.kl += other.kl;
        self.clipped += other.clipped;
        self.finite &= other.finite;
    }
}

fn chunk_gradient(net: &ActorCritic<f32>, samples: &[&Sample], cfg: &TrainerConfig) -> Accum {
    let mut grad = vec![0f32; net.params.len()];
    let mut acc = Accum::new(0);
    let actor_obs: Vec<&ObservationBundle> = samples.iter().map(|s| &s.actor_obs).collect();
    let critic_obs: Vec<&ObservationBundle> = samples.iter().map(|s| &s.critic_obs).collect();
    let actor = net.actor_batch(&actor_obs);
    let critic = net.critic_batch(&critic_obs);
    let mut d_raw = vec![0.0; samples.len() * N_RAW];
    let mut d_value = vec![0.0; samples.len()];
    for (b, s) in samples.iter().enumerate() {
        let raw: Vec<f64> = actor.output()[b * N_RAW..(b + 1) * N_RAW].iter().map(|&v| v as f64).collect();
        let value = critic.output()[b] as f64;
        let (loss, dr, dv) = sample_loss(&raw, value, s, cfg);
        if !loss.total(cfg).is_finite() {
            // Leave this sample's output gradients at zero.
            acc.finite = false;
            continue;
        }
        d_raw[b * N_RAW..(b + 1) * N_RAW].copy_from_slice(&dr);
        d_value[b] = dv;
        acc.policy += loss.policy;
        acc.value += loss.value;
        acc.entropy += loss.entropy;
        acc.kl += (loss.ratio - 1.0) - loss.ratio.ln();
        acc.clipped += f64::from(u8::from(loss.clipped));
    }
    net.backward_batch(&actor, &critic, &d_raw, &d_value, &mut grad);
    acc.grad = grad.into_iter().map(f64::from).collect();
    acc
}

/// Mean loss gradient over `samples`, evaluated in fixed-size chunks and
/// reduced in chunk order.
fn minibatch_gradient(net: &ActorCritic<f32>, samples: &[&Sample], cfg: &TrainerConfig) -> Accum {
    let parts: Vec<Accum> =
        samples.par_chunks(cfg.grad_chunk).map(|chunk| chunk_gradient(net, chunk, cfg)).collect();
    let mut total = Accum::new(net.params.len());
    for p in parts {
        total.merge(p);
    }
    let inv = 1.0 / samples.len().max(1) as f64;
    total.grad.iter_mut().for_each(|g| *g *= inv);
    total
}

/// Runs `epochs_per_batch` passes of shuffled minibatch updates. A
/// non-finite loss or gradient restores the parameters and optimiser state
/// from before the call and reports the failing minibatch.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut ActorCritic<f32>,
    adam: &mut Adam<f32>,
    samples: &[Sample],
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<PpoMetrics> {
    let mut metrics = PpoMetrics::default();
    if samples.is_empty() {
        return Ok(metrics);
    }
    let backup_params = net.params.clone();
    let backup_adam = adam.clone();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mb_size = samples.len().div_ceil(cfg.minibatches);
    let mut counted = 0.0;
    for epoch in 0..cfg.epochs_per_batch {
        order.shuffle(rng);
        for (mb, idx) in order.chunks(mb_size).enumerate() {
            let batch: Vec<&Sample> = idx.iter().map(|&i| &samples[i]).collect();
            let acc = minibatch_gradient(net, &batch, cfg);
            let norm = acc.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !acc.finite || !norm.is_finite() {
                net.params = backup_params;
                *adam = backup_adam;
                return Err(SoccerError::NonFiniteLoss { epoch, minibatch: mb });
            }
            let scale = if cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm { cfg.max_grad_norm / norm } else { 1.0 };
            let grad: Vec<f32> = acc.grad.iter().map(|g| (g * scale) as f32).collect();
            adam.update(&mut net.params, &grad, &cfg.adam);
            let n = batch.len() as f64;
            metrics.policy_loss += acc.policy;
            metrics.value_loss += acc.value;
            metrics.entropy += acc.entropy;
            metrics.approx_kl += acc.kl;
            metrics.clip_fraction += acc.clipped;
            metrics.grad_norm += norm;
            metrics.minibatch_updates += 1;
            counted += n;
        }
    }
    if !net.is_finite() {
        net.params = backup_params;
        *adam = backup_adam;
        return Err(SoccerError::NonFiniteLoss { epoch: cfg.epochs_per_batch, minibatch: 0 });
    }
    metrics.policy_loss /= counted;
    metrics.value_loss /= counted;
    metrics.entropy /= counted;
    metrics.approx_kl /= counted;
    metrics.clip_fraction /= counted;
    metrics.grad_norm /= metrics.minibatch_updates as f64;
    Ok(metrics)
}
