//! Pipeline configuration, read from a single TOML file. Every section and
//! field is optional; missing values take the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SoccerError};
use crate::neural::NetworkConfig;
use crate::opponents::BotConfig;
use crate::perception::ObservationConfig;
use crate::rewards::RewardConfig;
use crate::sim::{FieldGeometry, PhysicsConfig};
use crate::trainer::{CurriculumConfig, TrainerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Simulated seconds per match.
    pub duration: f64,
    /// Use the distribution mode instead of sampling for learned policies.
    pub deterministic: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { duration: 600.0, deterministic: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub field: FieldGeometry,
    pub physics: PhysicsConfig,
    pub observation: ObservationConfig,
    pub reward: RewardConfig,
    pub network: NetworkConfig,
    pub trainer: TrainerConfig,
    pub curriculum: CurriculumConfig,
    pub bot: BotConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.physics.validate()?;
        self.observation.validate()?;
        self.trainer.validate()?;
        self.curriculum.validate()?;
        if self.reward.direction_sigma <= 0.0 {
            return Err(SoccerError::Config("direction_sigma must be positive".into()));
        }
        if !(self.eval.duration > 0.0) {
            return Err(SoccerError::Config("eval duration must be positive".into()));
        }
        Ok(())
    }
}
