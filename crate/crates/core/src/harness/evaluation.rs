//! Evaluation matches and their aggregate statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::trajectory::{TrajectoryRecord, TrajectorySink};
use crate::config::Config;
use crate::controller::{joint_actions, Controller};
use crate::error::{Result, SoccerError};
use crate::game::{instance_rng, GameInstance};
use crate::rules::{BallBand, EpisodeStats, GameResult, SpawnSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Ball deep in the blue half.
    Offensive,
    /// Ball around the centre line.
    Equal,
    /// Ball deep in the red half.
    Defensive,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::Offensive, ScenarioKind::Equal, ScenarioKind::Defensive];

    pub fn ball_band(self) -> BallBand {
        match self {
            ScenarioKind::Offensive => BallBand { near: 0.05, far: 0.3 },
            ScenarioKind::Equal => BallBand { near: 0.45, far: 0.55 },
            ScenarioKind::Defensive => BallBand { near: 0.7, far: 0.95 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub ball_band: BallBand,
    pub n_blue: usize,
    pub n_red: usize,
    /// Simulated seconds; episodes run to completion until this is reached.
    pub duration: f64,
    /// Multiplies the configured field and goal dimensions.
    pub field_scale: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, n_blue: usize, n_red: usize, duration: f64) -> Self {
        Self { kind, ball_band: kind.ball_band(), n_blue, n_red, duration, field_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blue == 0 || self.n_red == 0 {
            return Err(SoccerError::Config(format!(
                "scenario needs at least one agent per team, got {}v{}",
                self.n_blue, self.n_red
            )));
        }
        if !(self.duration > 0.0) || !(self.field_scale > 0.0) {
            return Err(SoccerError::Config("scenario duration and field scale must be positive".into()));
        }
        self.ball_band.validate()
    }

    pub fn spawn_spec(&self, cfg: &Config, stream: u64) -> SpawnSpec {
        SpawnSpec {
            field: cfg.field.scaled(self.field_scale),
            n_blue: self.n_blue,
            n_red: self.n_red,
            ball_band: self.ball_band,
            curriculum_level: 0,
            rng_stream: stream,
        }
    }
}

/// How long a match lasts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchBudget {
    /// Play whole episodes until the simulated time reaches the scenario
    /// duration.
    Duration,
    Episodes(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub scenario: ScenarioKind,
    pub win_pct: f64,
    pub draw_pct: f64,
    pub loss_pct: f64,
    pub ownership_blue_pct: f64,
    pub ownership_red_pct: f64,
    pub mean_passes_blue: f64,
    pub mean_passes_red: f64,
    pub mean_losses_blue: f64,
    pub mean_losses_red: f64,
    pub mean_duration: f64,
    /// Fraction of control steps with the ball in a blue kickable area.
    pub touch_rate: f64,
    pub episodes: Vec<EpisodeStats>,
}

impl MatchReport {
    pub fn from_episodes(scenario: ScenarioKind, episodes: Vec<EpisodeStats>) -> Self {
        let n = episodes.len().max(1) as f64;
        let pct = |r: GameResult| 100.0 * episodes.iter().filter(|e| e.outcome == r).count() as f64 / n;
        let total_time: f64 = episodes.iter().map(|e| e.duration).sum();
        let time_pct = |f: fn(&EpisodeStats) -> f64| {
            if total_time > 0.0 {
                100.0 * episodes.iter().map(f).sum::<f64>() / total_time
            } else {
                0.0
            }
        };
        let mean = |f: fn(&EpisodeStats) -> f64| episodes.iter().map(f).sum::<f64>() / n;
        let steps: u64 = episodes.iter().map(|e| u64::from(e.steps)).sum();
        let touches: u64 = episodes.iter().map(|e| u64::from(e.blue_touch_steps)).sum();
        Self {
            scenario,
            win_pct: pct(GameResult::Win),
            draw_pct: pct(GameResult::Draw),
            loss_pct: pct(GameResult::Loss),
            ownership_blue_pct: time_pct(|e| e.ownership_time_blue),
            ownership_red_pct: time_pct(|e| e.ownership_time_red),
            mean_passes_blue: mean(|e| e.passes_blue as f64),
            mean_passes_red: mean(|e| e.passes_red as f64),
            mean_losses_blue: mean(|e| e.ownership_losses_blue as f64),
            mean_losses_red: mean(|e| e.ownership_losses_red as f64),
            mean_duration: mean(|e| e.duration),
            touch_rate: if steps > 0 { touches as f64 / steps as f64 } else { 0.0 },
            episodes,
        }
    }

    /// One row per episode followed by a summary row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            episode: String,
            outcome: String,
            win_pct: f64,
            draw_pct: f64,
            loss_pct: f64,
            ownership_blue_pct: f64,
            ownership_red_pct: f64,
            passes_blue: f64,
            passes_red: f64,
            ownership_losses_blue: f64,
            ownership_losses_red: f64,
            duration: f64,
            touch_rate: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (k, e) in self.episodes.iter().enumerate() {
            let one = |r: GameResult| if e.outcome == r { 100.0 } else { 0.0 };
            let share = |t: f64| if e.duration > 0.0 { 100.0 * t / e.duration } else { 0.0 };
            w.serialize(Row {
                episode: k.to_string(),
                outcome: format!("{:?}", e.outcome).to_lowercase(),
                win_pct: one(GameResult::Win),
                draw_pct: one(GameResult::Draw),
                loss_pct: one(GameResult::Loss),
                ownership_blue_pct: share(e.ownership_time_blue),
                ownership_red_pct: share(e.ownership_time_red),
                passes_blue: e.passes_blue as f64,
                passes_red: e.passes_red as f64,
                ownership_losses_blue: e.ownership_losses_blue as f64,
                ownership_losses_red: e.ownership_losses_red as f64,
                duration: e.duration,
                touch_rate: if e.steps > 0 { e.blue_touch_steps as f64 / e.steps as f64 } else { 0.0 },
            })?;
        }
        w.serialize(Row {
            episode: "summary".into(),
            outcome: String::new(),
            win_pct: self.win_pct,
            draw_pct: self.draw_pct,
            loss_pct: self.loss_pct,
            ownership_blue_pct: self.ownership_blue_pct,
            ownership_red_pct: self.ownership_red_pct,
            passes_blue: self.mean_passes_blue,
            passes_red: self.mean_passes_red,
            ownership_losses_blue: self.mean_losses_blue,
            ownership_losses_red: self.mean_losses_red,
            duration: self.mean_duration,
            touch_rate: self.touch_rate,
        })?;
        w.flush()?;
        Ok(())
    }
}

/// Plays consecutive episodes of `scenario` between two controllers. Each
/// episode draws from its own stream of `seed`, so the report depends only
/// on the seed, the controllers and the configuration.
pub fn run_match(
    blue: &Controller,
    red: &Controller,
    scenario: &Scenario,
    budget: MatchBudget,
    cfg: &Config,
    seed: u64,
    mut sink: Option<&mut dyn TrajectorySink>,
) -> Result<MatchReport> {
    scenario.validate()?;
    let mut episodes = Vec::new();
    let mut elapsed = 0.0;
    let mut index = 0u64;
    loop {
        let done = match budget {
            MatchBudget::Duration => elapsed >= scenario.duration,
            MatchBudget::Episodes(n) => episodes.len() >= n,
        };
        if done {
            break;
        }
        let spec = scenario.spawn_spec(cfg, index);
        let mut inst = GameInstance::spawn(&spec, cfg, instance_rng(seed, index))?;
        if let Some(s) = sink.as_deref_mut() {
            s.record(&TrajectoryRecord::start(index, &inst))?;
        }
        loop {
            let actions = joint_actions(&mut inst, blue, red, cfg);
            let report = inst.step(&actions, cfg, &cfg.reward)?;
            if let Some(s) = sink.as_deref_mut() {
                s.record(&TrajectoryRecord::step(index, &inst, actions, &report))?;
            }
            if let Some(stats) = report.episode {
                elapsed += stats.duration;
                episodes.push(stats);
                break;
            }
        }
        index += 1;
    }
    Ok(MatchReport::from_episodes(scenario.kind, episodes))
}
