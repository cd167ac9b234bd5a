//! Actor and critic built from entity encoders and MLP heads.
//!
//! Each branch (actor, critic) owns two encoders, one for teammates and one
//! for opponents. Every valid neighbour row is concatenated with the full
//! local vector, encoded by the shared per-type MLP, and the encodings are
//! max-pooled feature-wise. The head consumes `[local, pooled_teammates,
//! pooled_opponents]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::beta::{BetaHead, N_RAW};
use super::mlp::{Mlp, MlpBatchCache, MlpCache};
use super::scalar::Real;
use crate::error::{Result, SoccerError};
use crate::perception::{ObservationBundle, ObservationConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub encoder_hidden: Vec<usize>,
    pub encoder_out: usize,
    pub head_hidden: Vec<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { encoder_hidden: vec![64, 32], encoder_out: 16, head_hidden: vec![128, 128, 128] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDims {
    pub local: usize,
    pub entity: usize,
}

impl InputDims {
    pub fn from_observation(cfg: &ObservationConfig) -> Self {
        Self { local: cfg.local_dim(), entity: cfg.entity_dim() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub teammate_encoder: Mlp,
    pub opponent_encoder: Mlp,
    pub head: Mlp,
}

/// Named parameter block as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub inputs: InputDims,
    pub config: NetworkConfig,
    pub actor: Branch,
    pub critic: Branch,
    pub n_params: usize,
}

impl NetworkLayout {
    pub fn new(inputs: InputDims, config: &NetworkConfig) -> Self {
        let mut offset = 0;
        let branch = |out: usize, offset: &mut usize| {
            let enc_sizes: Vec<usize> = std::iter::once(inputs.local + inputs.entity)
                .chain(config.encoder_hidden.iter().copied())
                .chain(std::iter::once(config.encoder_out))
                .collect();
            let teammate_encoder = Mlp::new(&enc_sizes, true, offset);
            let opponent_encoder = Mlp::new(&enc_sizes, true, offset);
            let head_sizes: Vec<usize> = std::iter::once(inputs.local + 2 * config.encoder_out)
                .chain(config.head_hidden.iter().copied())
                .chain(std::iter::once(out))
                .collect();
            let head = Mlp::new(&head_sizes, false, offset);
            Branch { teammate_encoder, opponent_encoder, head }
        };
        let actor = branch(N_RAW, &mut offset);
        let critic = branch(1, &mut offset);
        Self { inputs, config: config.clone(), actor, critic, n_params: offset }
    }

    /// Weight and bias blocks in storage order.
    pub fn blocks(&self) -> Vec<ParamBlock> {
        let mut out = Vec::new();
        for (bname, branch) in [("actor", &self.actor), ("critic", &self.critic)] {
            for (mname, mlp) in [
                ("teammate_encoder", &branch.teammate_encoder),
                ("opponent_encoder", &branch.opponent_encoder),
                ("head", &branch.head),
            ] {
                for (k, l) in mlp.layers.iter().enumerate() {
                    out.push(ParamBlock {
                        name: format!("{bname}.{mname}.{k}.weight"),
                        rows: l.n_in,
                        cols: l.n_out,
                        offset: l.w_offset,
                    });
                    out.push(ParamBlock {
                        name: format!("{bname}.{mname}.{k}.bias"),
                        rows: 1,
                        cols: l.n_out,
                        offset: l.b_offset,
                    });
                }
            }
        }
        out
    }
}

/// Encodings of one entity set plus the pooling bookkeeping for backward.
#[derive(Debug, Clone, Default)]
pub struct EncoderCache<T> {
    pub rows: Vec<MlpCache<T>>,
    /// For each pooled feature, the row that supplied the maximum.
    pub argmax: Vec<usize>,
    pub pooled: Vec<T>,
}

#[derive(Debug, Clone, Default)]
pub struct BranchCache<T> {
    pub teammates: EncoderCache<T>,
    pub opponents: EncoderCache<T>,
    pub head: MlpCache<T>,
}

impl<T: Real> BranchCache<T> {
    pub fn output(&self) -> &[T] {
        self.head.output()
    }
}

fn to_real<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::from_f64(x)).collect()
}

/// Shared-weight encoding of every row (each concatenated with `local`)
/// followed by an element-wise max. No rows gives the zero vector.
pub fn encode_entities<'a, T: Real>(
    local: &[T],
    rows: impl Iterator<Item = &'a [f64]>,
    encoder: &Mlp,
    params: &[T],
) -> EncoderCache<T> {
    let n_out = encoder.n_out();
    let mut caches = Vec::new();
    for row in rows {
        let mut input = Vec::with_capacity(local.len() + row.len());
        input.extend_from_slice(local);
        input.extend(row.iter().map(|&x| T::from_f64(x)));
        caches.push(encoder.forward(params, input));
    }
    let mut pooled = vec![T::zero(); n_out];
    let mut argmax = vec![0usize; n_out];
    if let Some(first) = caches.first() {
        pooled.copy_from_slice(first.output());
        for (r, c) in caches.iter().enumerate().skip(1) {
            for (f, &v) in c.output().iter().enumerate() {
                // Strict comparison: ties stay with the lowest row.
                if v > pooled[f] {
                    pooled[f] = v;
                    argmax[f] = r;
                }
            }
        }
    }
    EncoderCache { rows: caches, argmax, pooled }
}

fn backward_encoder<T: Real>(encoder: &Mlp, params: &[T], cache: &EncoderCache<T>, d_pooled: &[T], grad: &mut [T]) {
    if cache.rows.is_empty() {
        return;
    }
    let n_out = encoder.n_out();
    let mut d_rows = vec![vec![T::zero(); n_out]; cache.rows.len()];
    let mut touched = vec![false; cache.rows.len()];
    for (f, &d) in d_pooled.iter().enumerate() {
        let r = cache.argmax[f];
        d_rows[r][f] += d;
        touched[r] = true;
    }
    for ((rc, d), t) in cache.rows.iter().zip(&d_rows).zip(touched) {
        if t {
            encoder.backward(params, rc, d, grad, false);
        }
    }
}

impl Branch {
    pub fn forward<T: Real>(&self, params: &[T], obs: &ObservationBundle) -> BranchCache<T> {
        let local: Vec<T> = to_real(&obs.local);
        let teammates = encode_entities(&local, obs.teammate_rows(), &self.teammate_encoder, params);
        let opponents = encode_entities(&local, obs.opponent_rows(), &self.opponent_encoder, params);
        let mut input = local;
        input.extend_from_slice(&teammates.pooled);
        input.extend_from_slice(&opponents.pooled);
        let head = self.head.forward(params, input);
        BranchCache { teammates, opponents, head }
    }

    pub fn backward<T: Real>(&self, params: &[T], cache: &BranchCache<T>, d_out: &[T], grad: &mut [T]) {
        let d_in = self.head.backward(params, &cache.head, d_out, grad, true).expect("input gradient requested");
        let local = cache.head.acts[0].len() - 2 * self.teammate_encoder.n_out();
        let enc = self.teammate_encoder.n_out();
        backward_encoder(&self.teammate_encoder, params, &cache.teammates, &d_in[local..local + enc], grad);
        backward_encoder(&self.opponent_encoder, params, &cache.opponents, &d_in[local + enc..], grad);
    }
}

/// Batched encodings: every valid row of every sample stacked into one
/// encoder batch, pooled per sample.
#[derive(Debug, Clone, Default)]
pub struct EncoderBatchCache<T> {
    pub rows: MlpBatchCache<T>,
    /// `batch x n_out`: stacked row that supplied each pooled feature, or
    /// `usize::MAX` for an empty set.
    pub argmax: Vec<usize>,
    /// `batch x n_out`.
    pub pooled: Vec<T>,
}

#[derive(Debug, Clone, Default)]
pub struct BranchBatchCache<T> {
    pub teammates: EncoderBatchCache<T>,
    pub opponents: EncoderBatchCache<T>,
    pub head: MlpBatchCache<T>,
}

impl<T: Real> BranchBatchCache<T> {
    /// `batch x n_out` head outputs.
    pub fn output(&self) -> &[T] {
        self.head.output()
    }
}

#[derive(Clone, Copy)]
enum EntitySet {
    Teammates,
    Opponents,
}

fn encode_entities_batch<T: Real>(
    locals: &[T],
    obs: &[&ObservationBundle],
    set: EntitySet,
    encoder: &Mlp,
    params: &[T],
) -> EncoderBatchCache<T> {
    let n_local = if obs.is_empty() { 0 } else { locals.len() / obs.len() };
    let n_out = encoder.n_out();
    let mut input = Vec::new();
    let mut counts = Vec::with_capacity(obs.len());
    for (b, o) in obs.iter().enumerate() {
        let local = &locals[b * n_local..(b + 1) * n_local];
        let rows: Vec<&[f64]> = match set {
            EntitySet::Teammates => o.teammate_rows().collect(),
            EntitySet::Opponents => o.opponent_rows().collect(),
        };
        counts.push(rows.len());
        for row in rows {
            input.extend_from_slice(local);
            input.extend(row.iter().map(|&x| T::from_f64(x)));
        }
    }
    let total: usize = counts.iter().sum();
    let rows = encoder.forward_batch(params, input, total);
    let out = rows.output();
    let mut pooled = vec![T::zero(); obs.len() * n_out];
    let mut argmax = vec![usize::MAX; obs.len() * n_out];
    let mut start = 0;
    for (b, &n) in counts.iter().enumerate() {
        let (p, a) = (&mut pooled[b * n_out..(b + 1) * n_out], &mut argmax[b * n_out..(b + 1) * n_out]);
        for r in start..start + n {
            for f in 0..n_out {
                let v = out[r * n_out + f];
                // Strict comparison: ties stay with the lowest row.
                if r == start || v > p[f] {
                    p[f] = v;
                    a[f] = r;
                }
            }
        }
        start += n;
    }
    EncoderBatchCache { rows, argmax, pooled }
}

fn backward_encoder_batch<T: Real>(
    encoder: &Mlp,
    params: &[T],
    cache: &EncoderBatchCache<T>,
    d_pooled: &[T],
    grad: &mut [T],
) {
    if cache.rows.batch == 0 {
        return;
    }
    let n_out = encoder.n_out();
    let mut d_rows = vec![T::zero(); cache.rows.batch * n_out];
    for (i, (&r, &d)) in cache.argmax.iter().zip(d_pooled).enumerate() {
        if r != usize::MAX {
            d_rows[r * n_out + i % n_out] += d;
        }
    }
    encoder.backward_batch(params, &cache.rows, d_rows, grad, false);
}

impl Branch {
    /// Batched forward pass; numerically equivalent to per-sample
    /// [`Branch::forward`] up to summation order.
    pub fn forward_batch<T: Real>(&self, params: &[T], obs: &[&ObservationBundle]) -> BranchBatchCache<T> {
        let locals: Vec<T> = obs.iter().flat_map(|o| o.local.iter().map(|&x| T::from_f64(x))).collect();
        let teammates = encode_entities_batch(&locals, obs, EntitySet::Teammates, &self.teammate_encoder, params);
        let opponents = encode_entities_batch(&locals, obs, EntitySet::Opponents, &self.opponent_encoder, params);
        let n_local = if obs.is_empty() { 0 } else { locals.len() / obs.len() };
        let enc = self.teammate_encoder.n_out();
        let mut input = Vec::with_capacity(obs.len() * self.head.n_in());
        for b in 0..obs.len() {
            input.extend_from_slice(&locals[b * n_local..(b + 1) * n_local]);
            input.extend_from_slice(&teammates.pooled[b * enc..(b + 1) * enc]);
            input.extend_from_slice(&opponents.pooled[b * enc..(b + 1) * enc]);
        }
        let head = self.head.forward_batch(params, input, obs.len());
        BranchBatchCache { teammates, opponents, head }
    }

    /// Accumulates gradients summed over the batch; `d_out` is
    /// `batch x n_out`.
    pub fn backward_batch<T: Real>(&self, params: &[T], cache: &BranchBatchCache<T>, d_out: Vec<T>, grad: &mut [T]) {
        let batch = cache.head.batch;
        let d_in = self.head.backward_batch(params, &cache.head, d_out, grad, true).expect("input gradient requested");
        let n_in = self.head.n_in();
        let enc = self.teammate_encoder.n_out();
        let local = n_in - 2 * enc;
        let mut d_tm = Vec::with_capacity(batch * enc);
        let mut d_op = Vec::with_capacity(batch * enc);
        for row in d_in.chunks_exact(n_in) {
            d_tm.extend_from_slice(&row[local..local + enc]);
            d_op.extend_from_slice(&row[local + enc..]);
        }
        backward_encoder_batch(&self.teammate_encoder, params, &cache.teammates, &d_tm, grad);
        backward_encoder_batch(&self.opponent_encoder, params, &cache.opponents, &d_op, grad);
    }
}

/// Parameters of actor and critic in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic<T> {
    pub layout: NetworkLayout,
    pub params: Vec<T>,
}

impl<T: Real> ActorCritic<T> {
    pub fn zeros(layout: NetworkLayout) -> Self {
        let params = vec![T::zero(); layout.n_params];
        Self { layout, params }
    }

    pub fn new<R: Rng + ?Sized>(layout: NetworkLayout, rng: &mut R) -> Self {
        let mut net = Self::zeros(layout);
        let gain = 2f64.sqrt();
        let l = &net.layout;
        for (branch, out_gain) in [(&l.actor, 0.01), (&l.critic, 1.0)] {
            branch.teammate_encoder.init(&mut net.params, gain, gain, rng);
            branch.opponent_encoder.init(&mut net.params, gain, gain, rng);
            branch.head.init(&mut net.params, gain, out_gain, rng);
        }
        net
    }

    pub fn from_params(layout: NetworkLayout, params: Vec<T>) -> Result<Self> {
        if params.len() != layout.n_params {
            return Err(SoccerError::LengthMismatch(format!(
                "layout needs {} parameters, got {}",
                layout.n_params,
                params.len()
            )));
        }
        Ok(Self { layout, params })
    }

    pub fn cast<U: Real>(&self) -> ActorCritic<U> {
        ActorCritic { layout: self.layout.clone(), params: self.params.iter().map(|p| U::from_f64(p.as_f64())).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Raw policy outputs: `(a_raw, b_raw)` per action.
    pub fn policy_raw(&self, obs: &ObservationBundle) -> [f64; N_RAW] {
        let cache = self.layout.actor.forward(&self.params, obs);
        let mut raw = [0.0; N_RAW];
        for (r, v) in raw.iter_mut().zip(cache.output()) {
            *r = v.as_f64();
        }
        raw
    }

    pub fn policy_forward(&self, obs: &ObservationBundle) -> BetaHead {
        BetaHead::from_raw(&self.policy_raw(obs))
    }

    pub fn value_forward(&self, obs: &ObservationBundle) -> f64 {
        self.layout.critic.forward(&self.params, obs).output()[0].as_f64()
    }

    pub fn actor_cache(&self, obs: &ObservationBundle) -> BranchCache<T> {
        self.layout.actor.forward(&self.params, obs)
    }

    pub fn critic_cache(&self, obs: &ObservationBundle) -> BranchCache<T> {
        self.layout.critic.forward(&self.params, obs)
    }

    pub fn actor_batch(&self, obs: &[&ObservationBundle]) -> BranchBatchCache<T> {
        self.layout.actor.forward_batch(&self.params, obs)
    }

    pub fn critic_batch(&self, obs: &[&ObservationBundle]) -> BranchBatchCache<T> {
        self.layout.critic.forward_batch(&self.params, obs)
    }

    /// Batched [`ActorCritic::backward`]: `d_raw` is `batch x N_RAW`,
    /// `d_value` has one entry per sample.
    pub fn backward_batch(
        &self,
        actor: &BranchBatchCache<T>,
        critic: &BranchBatchCache<T>,
        d_raw: &[f64],
        d_value: &[f64],
        grad: &mut [T],
    ) {
        self.layout.actor.backward_batch(&self.params, actor, to_real(d_raw), grad);
        self.layout.critic.backward_batch(&self.params, critic, to_real(d_value), grad);
    }

    /// Accumulates gradients for both branches given loss gradients at the
    /// raw policy outputs and at the value output.
    pub fn backward(
        &self,
        actor: &BranchCache<T>,
        critic: &BranchCache<T>,
        d_raw: &[f64],
        d_value: f64,
        grad: &mut [T],
    ) {
        let d_raw: Vec<T> = to_real(d_raw);
        self.layout.actor.backward(&self.params, actor, &d_raw, grad);
        self.layout.critic.backward(&self.params, critic, &[T::from_f64(d_value)], grad);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_layout() -> NetworkLayout {
        NetworkLayout::new(
            InputDims { local: 18, entity: 8 },
            &NetworkConfig { encoder_hidden: vec![64, 32], encoder_out: 16, head_hidden: vec![128, 128, 128] },
        )
    }

    fn obs(n_tm: usize, n_op: usize, rng: &mut ChaCha8Rng) -> ObservationBundle {
        let mut r = || rng.random_range(-1.0..1.0);
        let n_max = 3;
        let mut teammates = vec![0.0; n_max * 8];
        let mut opponents = vec![0.0; n_max * 8];
        for v in teammates.iter_mut().take(n_tm * 8) {
            *v = r();
        }
        for v in opponents.iter_mut().take(n_op * 8) {
            *v = r();
        }
        ObservationBundle {
            local: (0..18).map(|_| r()).collect(),
            teammates,
            opponents,
            teammate_mask: (0..n_max).map(|k| k < n_tm).collect(),
            opponent_mask: (0..n_max).map(|k| k < n_op).collect(),
            entity_dim: 8,
        }
    }

    #[test]
    fn table_sizes() {
        let l = small_layout();
        assert_eq!(l.actor.teammate_encoder.n_in(), 26);
        assert_eq!(l.actor.head.n_in(), 18 + 32);
        assert_eq!(l.actor.head.n_out(), 10);
        assert_eq!(l.critic.head.n_out(), 1);
        let blocks = l.blocks();
        let total: usize = blocks.iter().map(|b| b.rows * b.cols).sum();
        assert_eq!(total, l.n_params);
    }

    #[test]
    fn zero_network_outputs() {
        let net = ActorCritic::<f64>::zeros(small_layout());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = obs(2, 1, &mut rng);
        let h = net.policy_forward(&o);
        for i in 0..5 {
            assert!((h.alpha[i] - 1.693_147_180_559_945).abs() < 1e-12);
        }
        assert_eq!(net.value_forward(&o), 0.0);
    }

    #[test]
    fn single_entity_pool_is_its_encoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ActorCritic::<f64>::new(small_layout(), &mut rng);
        let o = obs(1, 0, &mut rng);
        let local: Vec<f64> = o.local.clone();
        let enc = &net.layout.actor.teammate_encoder;
        let pooled = encode_entities(&local, o.teammate_rows(), enc, &net.params);
        let mut input = local.clone();
        input.extend_from_slice(&o.teammates[..8]);
        let direct = enc.forward(&net.params, input);
        assert_eq!(pooled.pooled, direct.output());
        // duplicate row: same pooled feature
        let row = o.teammates[..8].to_vec();
        let dup = encode_entities(&local, [row.as_slice(), row.as_slice()].into_iter(), enc, &net.params);
        assert_eq!(dup.pooled, pooled.pooled);
        // empty set: zero sentinel
        let empty = encode_entities(&local, std::iter::empty(), enc, &net.params);
        assert!(empty.pooled.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn masked_rows_get_no_gradient_and_do_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = ActorCritic::<f64>::new(small_layout(), &mut rng);
        let mut o = obs(1, 1, &mut rng);
        let base = net.policy_raw(&o);
        // Garbage in a masked row must not change anything.
        o.teammates[8..16].iter_mut().for_each(|v| *v = 123.0);
        assert_eq!(net.policy_raw(&o), base);
    }

    #[test]
    fn batched_branch_matches_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = ActorCritic::<f64>::new(small_layout(), &mut rng);
        let batch: Vec<ObservationBundle> =
            [(0, 0), (2, 1), (1, 3), (3, 2), (0, 1)].iter().map(|&(t, o)| obs(t, o, &mut rng)).collect();
        let refs: Vec<&ObservationBundle> = batch.iter().collect();
        let d_raw: Vec<f64> = (0..refs.len() * N_RAW).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d_val: Vec<f64> = (0..refs.len()).map(|_| rng.random_range(-1.0..1.0)).collect();

        let a = net.actor_batch(&refs);
        let c = net.critic_batch(&refs);
        let mut g_batch = vec![0.0; net.params.len()];
        net.backward_batch(&a, &c, &d_raw, &d_val, &mut g_batch);

        let mut g_single = vec![0.0; net.params.len()];
        for (b, o) in batch.iter().enumerate() {
            let a1 = net.actor_cache(o);
            let c1 = net.critic_cache(o);
            for (u, v) in a1.output().iter().zip(&a.output()[b * N_RAW..(b + 1) * N_RAW]) {
                assert!((u - v).abs() < 1e-12);
            }
            assert!((c1.output()[0] - c.output()[b]).abs() < 1e-12);
            net.backward(&a1, &c1, &d_raw[b * N_RAW..(b + 1) * N_RAW], d_val[b], &mut g_single);
        }
        for (u, v) in g_single.iter().zip(&g_batch) {
            assert!((u - v).abs() < 1e-10 * (1.0 + u.abs()), "{u} vs {v}");
        }
    }
}
