//! Multi-agent soccer simulation and PPO self-play training.

pub mod config;
pub mod controller;
pub mod error;
pub mod game;
pub mod harness;
pub mod neural;
pub mod opponents;
pub mod perception;
pub mod rewards;
pub mod rules;
pub mod sim;
pub mod trainer;

pub use config::Config;
pub use error::{Result, SoccerError};
