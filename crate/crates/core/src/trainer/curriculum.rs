//! Field-size and initial-position levels, team-size resampling, the
//! self-play adversary buffer and the win-rate bookkeeping behind promotion.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::rules::{BallBand, GameResult};
use crate::sim::FieldGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamSizeWeight {
    pub blue: usize,
    pub red: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    /// Highest initial-position level (levels run 0..=max).
    pub init_pos_max_level: u32,
    pub init_pos_start_level: u32,
    /// Number of field-size levels; 1 pins the field to `field_scale_min`.
    pub field_levels: u32,
    pub field_start_level: u32,
    pub field_scale_min: f64,
    pub field_scale_max: f64,
    pub team_sizes: Vec<TeamSizeWeight>,
    pub selfplay: bool,
    pub selfplay_capacity: usize,
    /// Keep the scripted bot in the adversary pool once snapshots exist.
    pub include_bot: bool,
    pub promotion_threshold: f64,
    pub winrate_window: usize,
    /// Promotion is only considered once every adversary in the pool has
    /// this many recorded games.
    pub min_games_per_adversary: usize,
    /// Remove the shaping rewards at the first promotion-level win rate.
    pub dense_gate: bool,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        let mut team_sizes = Vec::new();
        for blue in 1..=3 {
            for red in 1..=3 {
                team_sizes.push(TeamSizeWeight { blue, red, weight: 1.0 });
            }
        }
        Self {
            init_pos_max_level: 4,
            init_pos_start_level: 0,
            field_levels: 5,
            field_start_level: 0,
            field_scale_min: 0.6,
            field_scale_max: 1.0,
            team_sizes,
            selfplay: true,
            selfplay_capacity: 8,
            include_bot: true,
            promotion_threshold: 0.75,
            winrate_window: 100,
            min_games_per_adversary: 20,
            dense_gate: true,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.field_levels == 0 {
            return Err(SoccerError::Config("field_levels must be at least 1".into()));
        }
        if !(self.field_scale_min > 0.0 && self.field_scale_min <= self.field_scale_max) {
            return Err(SoccerError::Config("field scales must satisfy 0 < min <= max".into()));
        }
        if self.team_sizes.is_empty() || self.team_sizes.iter().any(|t| t.blue == 0 || t.red == 0 || !(t.weight >= 0.0)) {
            return Err(SoccerError::Config("team_sizes needs entries with at least one agent per team".into()));
        }
        if self.team_sizes.iter().map(|t| t.weight).sum::<f64>() <= 0.0 {
            return Err(SoccerError::Config("team size weights must not all be zero".into()));
        }
        if self.selfplay_capacity == 0 || self.winrate_window == 0 {
            return Err(SoccerError::Config("selfplay_capacity and winrate_window must be positive".into()));
        }
        Ok(())
    }

    /// Field geometry of a field-size level.
    pub fn field_for_level(&self, base: &FieldGeometry, level: u32) -> FieldGeometry {
        let scale = if self.field_levels <= 1 {
            self.field_scale_min
        } else {
            let t = level.min(self.field_levels - 1) as f64 / (self.field_levels - 1) as f64;
            self.field_scale_min + (self.field_scale_max - self.field_scale_min) * t
        };
        base.scaled(scale)
    }

    pub fn ball_band_for_level(&self, level: u32) -> BallBand {
        BallBand::for_level(level, self.init_pos_max_level)
    }

    pub fn sample_team_size<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let total: f64 = self.team_sizes.iter().map(|t| t.weight).sum();
        let mut x = rng.random::<f64>() * total;
        for t in &self.team_sizes {
            if x < t.weight {
                return (t.blue, t.red);
            }
            x -= t.weight;
        }
        let last = self.team_sizes.iter().rev().find(|t| t.weight > 0.0).expect("validated");
        (last.blue, last.red)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvLevels {
    pub init_pos: u32,
    pub field: u32,
}

/// Win: both levels up (capped). Loss: both down (floored). Draw: unchanged.
pub fn update_levels(result: GameResult, levels: EnvLevels, cfg: &CurriculumConfig) -> EnvLevels {
    let field_max = cfg.field_levels - 1;
    match result {
        GameResult::Win => EnvLevels {
            init_pos: (levels.init_pos + 1).min(cfg.init_pos_max_level),
            field: (levels.field + 1).min(field_max),
        },
        GameResult::Loss => EnvLevels {
            init_pos: levels.init_pos.saturating_sub(1),
            field: levels.field.saturating_sub(1),
        },
        GameResult::Draw => levels,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryId {
    Bot,
    Snapshot(u64),
}

/// Frozen trainee parameters used as an adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub id: u64,
    pub params: Arc<Vec<f32>>,
}

/// FIFO pool of at most `capacity` snapshots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelfPlayBuffer {
    pub snapshots: VecDeque<Snapshot>,
    pub next_id: u64,
}

impl SelfPlayBuffer {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Stores a copy of `params`; returns the evicted snapshot id, if any.
    pub fn push(&mut self, params: &[f32], capacity: usize) -> Option<u64> {
        let id = self.next_id;
        self.next_id += 1;
        self.snapshots.push_back(Snapshot { id, params: Arc::new(params.to_vec()) });
        if self.snapshots.len() > capacity {
            self.snapshots.pop_front().map(|s| s.id)
        } else {
            None
        }
    }

    pub fn get(&self, id: u64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.id == id)
    }
}

/// Rolling window of recent results per adversary.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WinRateTracker {
    pub windows: BTreeMap<AdversaryId, VecDeque<GameResult>>,
}

impl WinRateTracker {
    pub fn record(&mut self, adversary: AdversaryId, result: GameResult, window: usize) {
        let w = self.windows.entry(adversary).or_default();
        w.push_back(result);
        while w.len() > window {
            w.pop_front();
        }
    }

    pub fn games(&self, adversary: AdversaryId) -> usize {
        self.windows.get(&adversary).map_or(0, VecDeque::len)
    }

    pub fn win_rate(&self, adversary: AdversaryId) -> Option<f64> {
        let w = self.windows.get(&adversary)?;
        if w.is_empty() {
            return None;
        }
        Some(w.iter().filter(|r| **r == GameResult::Win).count() as f64 / w.len() as f64)
    }

    /// Mean of the per-adversary win rates over `pool`, provided each has at
    /// least `min_games` results.
    pub fn average(&self, pool: &[AdversaryId], min_games: usize) -> Option<f64> {
        if pool.is_empty() || pool.iter().any(|&a| self.games(a) < min_games.max(1)) {
            return None;
        }
        Some(pool.iter().map(|&a| self.win_rate(a).expect("has games")).sum::<f64>() / pool.len() as f64)
    }

    pub fn forget(&mut self, adversary: AdversaryId) {
        self.windows.remove(&adversary);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumState {
    pub levels: Vec<EnvLevels>,
    pub selfplay: SelfPlayBuffer,
    pub dense_active: bool,
    pub winrates: WinRateTracker,
    /// Set once the first promotion-level win rate has been reached.
    pub milestone_reached: bool,
}

/// Result of [`update_selfplay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SelfPlayUpdate {
    pub promoted: bool,
    pub evicted: Option<u64>,
    pub dense_removed: bool,
}

impl CurriculumState {
    pub fn new(n_envs: usize, cfg: &CurriculumConfig, dense_active: bool) -> Self {
        let start = EnvLevels {
            init_pos: cfg.init_pos_start_level.min(cfg.init_pos_max_level),
            field: cfg.field_start_level.min(cfg.field_levels - 1),
        };
        Self {
            levels: vec![start; n_envs],
            selfplay: SelfPlayBuffer::default(),
            dense_active,
            winrates: WinRateTracker::default(),
            milestone_reached: false,
        }
    }

    /// Adversaries the trainee currently faces.
    pub fn adversary_pool(&self, cfg: &CurriculumConfig) -> Vec<AdversaryId> {
        let mut pool = Vec::new();
        if cfg.include_bot || self.selfplay.is_empty() || !cfg.selfplay {
            pool.push(AdversaryId::Bot);
        }
        if cfg.selfplay {
            pool.extend(self.selfplay.snapshots.iter().map(|s| AdversaryId::Snapshot(s.id)));
        }
        pool
    }

    pub fn sample_adversary<R: Rng + ?Sized>(&self, cfg: &CurriculumConfig, rng: &mut R) -> AdversaryId {
        let pool = self.adversary_pool(cfg);
        pool[rng.random_range(0..pool.len())]
    }

    pub fn average_win_rate(&self, cfg: &CurriculumConfig) -> Option<f64> {
        self.winrates.average(&self.adversary_pool(cfg), cfg.min_games_per_adversary)
    }
}

/// Promotes the trainee into the adversary buffer once its average win rate
/// over the current pool reaches the threshold. The first time that happens
/// the shaping rewards are switched off for good (when gating is enabled).
pub fn update_selfplay(state: &mut CurriculumState, trainee: &[f32], cfg: &CurriculumConfig) -> SelfPlayUpdate {
    let mut out = SelfPlayUpdate::default();
    let Some(avg) = state.average_win_rate(cfg) else {
        return out;
    };
    if avg < cfg.promotion_threshold {
        return out;
    }
    if !state.milestone_reached {
        state.milestone_reached = true;
        if cfg.dense_gate && state.dense_active {
            state.dense_active = false;
            out.dense_removed = true;
        }
    }
    if cfg.selfplay {
        out.promoted = true;
        out.evicted = state.selfplay.push(trainee, cfg.selfplay_capacity);
        if let Some(id) = out.evicted {
            state.winrates.forget(AdversaryId::Snapshot(id));
        }
    }
    out
}
