//! Critic value maps over the field for a frozen game state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::neural::{ActorCritic, Real};
use crate::perception::{build_observation, HistoryBuffer, ObservationConfig, Role};
use crate::sim::{Vec2, WorldState};

/// What is moved across the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapSubject {
    Ball,
    Agent(usize),
}

impl std::str::FromStr for HeatmapSubject {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "ball" {
            return Ok(HeatmapSubject::Ball);
        }
        s.strip_prefix("agent:")
            .and_then(|k| k.parse().ok())
            .map(HeatmapSubject::Agent)
            .ok_or_else(|| format!("expected `ball` or `agent:<index>`, got `{s}`"))
    }
}

/// Cell centre of grid index `(row, col)`; rows run along +y, columns
/// along +x.
pub fn cell_center(world: &WorldState, resolution: usize, row: usize, col: usize) -> Vec2 {
    let f = &world.field;
    let x = -f.half_length() + (col as f64 + 0.5) * f.field_length / resolution as f64;
    let y = -f.half_width() + (row as f64 + 0.5) * f.field_width / resolution as f64;
    Vec2::new(x, y)
}

/// Value of `perspective`'s critic with `subject` placed at every cell
/// centre, row-major. Everything else stays as in `world`, and all
/// position histories are the current poses.
pub fn export_value_heatmap<T: Real>(
    net: &ActorCritic<T>,
    world: &WorldState,
    perspective: usize,
    subject: HeatmapSubject,
    resolution: usize,
    obs_cfg: &ObservationConfig,
) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(SoccerError::Config(format!("heat-map resolution must be at least 2, got {resolution}")));
    }
    let valid = |id: usize| world.agents.get(id).is_some_and(|a| a.active);
    if !valid(perspective) {
        return Err(SoccerError::Config(format!("perspective agent {perspective} is not active")));
    }
    if let HeatmapSubject::Agent(k) = subject {
        if !valid(k) {
            return Err(SoccerError::Config(format!("subject agent {k} is not active")));
        }
    }
    let rows: Vec<Vec<f64>> = (0..resolution)
        .into_par_iter()
        .map(|row| {
            let mut w = world.clone();
            // Critic observations are noise-free; the generator is never drawn from.
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
            (0..resolution)
                .map(|col| {
                    let p = cell_center(world, resolution, row, col);
                    match subject {
                        HeatmapSubject::Ball => w.ball.position = p,
                        HeatmapSubject::Agent(k) => w.agents[k].position = p,
                    }
                    let history = HistoryBuffer::new(&w, obs_cfg.history_len);
                    let obs = build_observation(&w, perspective, &history, obs_cfg, Role::Critic, &mut rng);
                    net.value_forward(&obs)
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::rules::{spawn_episode, BallBand, SpawnSpec};
    use crate::trainer::layout_for;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world() -> WorldState {
        let cfg = Config::default();
        let spec = SpawnSpec {
            field: cfg.field,
            n_blue: 2,
            n_red: 2,
            ball_band: BallBand::FULL,
            curriculum_level: 0,
            rng_stream: 0,
        };
        spawn_episode(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
    }

    #[test]
    fn zero_value_head_gives_constant_grid() {
        let cfg = Config::default();
        let net = ActorCritic::<f32>::zeros(layout_for(&cfg));
        let g = export_value_heatmap(&net, &world(), 0, HeatmapSubject::Ball, 5, &cfg.observation).unwrap();
        assert_eq!(g.len(), 25);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn world_untouched_and_values_vary() {
        let cfg = Config::default();
        let net = ActorCritic::<f32>::new(layout_for(&cfg), &mut ChaCha8Rng::seed_from_u64(1));
        let w = world();
        let before = w.clone();
        let g = export_value_heatmap(&net, &w, 1, HeatmapSubject::Agent(0), 8, &cfg.observation).unwrap();
        assert_eq!(w, before);
        assert!(g.iter().all(|v| v.is_finite()));
        assert!(g.iter().any(|&v| v != g[0]));
    }

    #[test]
    fn bad_arguments() {
        let cfg = Config::default();
        let net = ActorCritic::<f32>::zeros(layout_for(&cfg));
        assert!(export_value_heatmap(&net, &world(), 0, HeatmapSubject::Ball, 1, &cfg.observation).is_err());
        assert!(export_value_heatmap(&net, &world(), 9, HeatmapSubject::Ball, 4, &cfg.observation).is_err());
        assert_eq!("agent:3".parse::<HeatmapSubject>().unwrap(), HeatmapSubject::Agent(3));
        assert!("wall".parse::<HeatmapSubject>().is_err());
    }

    #[test]
    fn rank_correlation_oracle() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((rank_correlation(&a, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-12);
        assert!((rank_correlation(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // 1 - 6 Σd² / (n(n²-1)) with d = (0, 0, 1, -1): 1 - 12/60
        assert!((rank_correlation(&a, &[1.0, 2.0, 4.0, 3.0]) - 0.8).abs() < 1e-12);
    }
}
