//! Beta-distribution action heads.
//!
//! Each of the five action dimensions gets a `Beta(alpha, beta)` with
//! `alpha = 1 + softplus(a_raw)` and `beta = 1 + softplus(b_raw)`, so both
//! parameters exceed one and the density is unimodal. A sample `u` in (0, 1)
//! becomes the command `2u - 1`; densities and entropies below are those of
//! the command, i.e. they include the `ln 2` of the affine map.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::gamma::ln_gamma;

use crate::sim::ActionCommand;

pub const N_ACTIONS: usize = ActionCommand::DIM;
pub const N_RAW: usize = 2 * N_ACTIONS;

const LN_2: f64 = std::f64::consts::LN_2;
/// Samples are kept this far from the interval ends so log-densities stay
/// finite.
const U_EPS: f64 = 1e-6;

#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Digamma via upward recurrence and the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + x.ln() - 0.5 * inv - series
}

/// Trigamma via upward recurrence and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0))));
    acc + series
}

pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Log-density of `Beta(a, b)` at `u` in (0, 1).
pub fn beta_log_pdf(u: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_beta_fn(a, b)
}

/// `(d/da, d/db)` of [`beta_log_pdf`].
pub fn beta_log_pdf_grad(u: f64, a: f64, b: f64) -> (f64, f64) {
    let psi_ab = digamma(a + b);
    (u.ln() - digamma(a) + psi_ab, (1.0 - u).ln() - digamma(b) + psi_ab)
}

/// Differential entropy of `Beta(a, b)` on (0, 1).
pub fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta_fn(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
}

/// `(d/da, d/db)` of [`beta_entropy`].
pub fn beta_entropy_grad(a: f64, b: f64) -> (f64, f64) {
    let t_ab = (a + b - 2.0) * trigamma(a + b);
    (t_ab - (a - 1.0) * trigamma(a), t_ab - (b - 1.0) * trigamma(b))
}

/// Maps a command in (-1, 1) to the beta support, away from the ends.
#[inline]
pub fn command_to_unit(a: f64) -> f64 {
    (0.5 * (a + 1.0)).clamp(U_EPS, 1.0 - U_EPS)
}

/// Log-density of the command `2u - 1` when `u ~ Beta(a, b)`.
pub fn command_log_pdf(command: f64, a: f64, b: f64) -> f64 {
    beta_log_pdf(command_to_unit(command), a, b) - LN_2
}

/// Entropy of the command `2u - 1` when `u ~ Beta(a, b)`.
pub fn command_entropy(a: f64, b: f64) -> f64 {
    beta_entropy(a, b) + LN_2
}

/// Transformed policy outputs for all action dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaHead {
    pub alpha: [f64; N_ACTIONS],
    pub beta: [f64; N_ACTIONS],
}

impl BetaHead {
    /// `raw` holds `(a_raw, b_raw)` pairs per action.
    pub fn from_raw(raw: &[f64]) -> Self {
        debug_assert_eq!(raw.len(), N_RAW);
        let mut alpha = [0.0; N_ACTIONS];
        let mut beta = [0.0; N_ACTIONS];
        for i in 0..N_ACTIONS {
            alpha[i] = 1.0 + softplus(raw[2 * i]);
            beta[i] = 1.0 + softplus(raw[2 * i + 1]);
        }
        Self { alpha, beta }
    }

    /// Joint log-density of a command vector.
    pub fn log_prob(&self, action: &[f64]) -> f64 {
        (0..N_ACTIONS).map(|i| command_log_pdf(action[i], self.alpha[i], self.beta[i])).sum()
    }

    pub fn entropy(&self) -> f64 {
        (0..N_ACTIONS).map(|i| command_entropy(self.alpha[i], self.beta[i])).sum()
    }

    /// Draws a command vector and returns it with its log-density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ([f64; N_ACTIONS], f64) {
        let mut action = [0.0; N_ACTIONS];
        for (i, a) in action.iter_mut().enumerate() {
            let dist = Beta::new(self.alpha[i], self.beta[i]).expect("alpha, beta > 1");
            let u: f64 = dist.sample(rng);
            *a = 2.0 * command_to_unit(2.0 * u - 1.0) - 1.0;
        }
        let lp = self.log_prob(&action);
        (action, lp)
    }

    /// Per-dimension mode mapped to (-1, 1).
    pub fn mode(&self) -> [f64; N_ACTIONS] {
        let mut m = [0.0; N_ACTIONS];
        for i in 0..N_ACTIONS {
            let (a, b) = (self.alpha[i], self.beta[i]);
            m[i] = 2.0 * (a - 1.0) / (a + b - 2.0) - 1.0;
        }
        m
    }

    /// Gradients of `w_logp * log_prob(action) + w_ent * entropy()` with
    /// respect to the raw head outputs.
    pub fn raw_grad(&self, raw: &[f64], action: &[f64], w_logp: f64, w_ent: f64) -> [f64; N_RAW] {
        let mut g = [0.0; N_RAW];
        for i in 0..N_ACTIONS {
            let (a, b) = (self.alpha[i], self.beta[i]);
            let u = command_to_unit(action[i]);
            let (la, lb) = beta_log_pdf_grad(u, a, b);
            let (ea, eb) = beta_entropy_grad(a, b);
            g[2 * i] = (w_logp * la + w_ent * ea) * sigmoid(raw[2 * i]);
            g[2 * i + 1] = (w_logp * lb + w_ent * eb) * sigmoid(raw[2 * i + 1]);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn special_functions_known_values() {
        // psi(1) = -gamma, psi'(1) = pi^2/6, psi(0.5) = -gamma - 2 ln 2
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + euler).abs() < 1e-13);
        assert!((digamma(0.5) + euler + 2.0 * LN_2).abs() < 1e-13);
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_raw_gives_one_plus_ln2() {
        let h = BetaHead::from_raw(&[0.0; N_RAW]);
        for i in 0..N_ACTIONS {
            assert!((h.alpha[i] - (1.0 + LN_2)).abs() < 1e-15);
            assert_eq!(h.alpha[i], h.beta[i]);
        }
        assert!(h.mode().iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn log_prob_at_centre() {
        // Beta(2, 2) density at 0.5 is 1.5; the command density halves it.
        let v = command_log_pdf(0.0, 2.0, 2.0);
        assert!((v - (1.5f64.ln() - LN_2)).abs() < 1e-12);
        assert!((v + 0.287_682).abs() < 1e-6);
    }

    #[test]
    fn symmetric_samples_centred() {
        let h = BetaHead::from_raw(&[0.0; N_RAW]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n / N_ACTIONS {
            let (a, _) = h.sample(&mut rng);
            sum += a.iter().sum::<f64>();
        }
        assert!((sum / n as f64).abs() < 0.02);
    }

    #[test]
    fn entropy_grad_matches_finite_difference() {
        let h = 1e-5;
        for &(a, b) in &[(2.0, 2.0), (1.1, 5.0), (3.3, 1.7)] {
            let (ga, gb) = beta_entropy_grad(a, b);
            let fa = (beta_entropy(a + h, b) - beta_entropy(a - h, b)) / (2.0 * h);
            let fb = (beta_entropy(a, b + h) - beta_entropy(a, b - h)) / (2.0 * h);
            assert!((ga - fa).abs() < 1e-6, "{ga} {fa}");
            assert!((gb - fb).abs() < 1e-6, "{gb} {fb}");
        }
    }
}
