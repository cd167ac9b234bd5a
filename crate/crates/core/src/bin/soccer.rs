use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use soccer_core::controller::Controller;
use soccer_core::game::instance_rng;
use soccer_core::harness::{
    export_value_heatmap, read_trajectories, replay, run_match, Checkpoint, HeatmapSubject, JsonlWriter, MatchBudget,
    Scenario, ScenarioKind, TrajectorySink,
};
use soccer_core::rules::spawn_episode;
use soccer_core::trainer::Trainer;
use soccer_core::{Config, Result};

#[derive(Parser)]
#[command(name = "soccer", version, about = "Multi-agent soccer training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "equal")]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 3)]
    n_blue: usize,
    #[arg(long, default_value_t = 3)]
    n_red: usize,
    /// Scale of the configured field and goal dimensions.
    #[arg(long, default_value_t = 1.0)]
    field_scale: f64,
}

impl ScenarioArgs {
    fn build(&self, duration: f64) -> Scenario {
        let mut s = Scenario::new(self.scenario, self.n_blue, self.n_red, duration);
        s.field_scale = self.field_scale;
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy with PPO, curricula and self-play.
    Train {
        #[command(flatten)]
        common: Common,
        /// Where to write checkpoints.
        #[arg(long, default_value = "policy.ckpt")]
        checkpoint: PathBuf,
        /// Resume from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Per-iteration metrics CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Overrides the configured number of iterations.
        #[arg(long)]
        epochs: Option<u64>,
    },
    /// Play a policy against the bot or another policy and report statistics.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Blue team checkpoint.
        #[arg(long)]
        blue: PathBuf,
        /// Red team: a checkpoint path or `bot`.
        #[arg(long, default_value = "bot")]
        red: String,
        /// Simulated seconds; defaults to the configured evaluation duration.
        #[arg(long)]
        duration: Option<f64>,
        /// Play exactly this many episodes instead of a time budget.
        #[arg(long)]
        episodes: Option<usize>,
        /// Sample actions instead of taking the distribution mode.
        #[arg(long)]
        stochastic: bool,
        /// Per-episode statistics CSV (with a summary row).
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Line-delimited JSON trajectory log.
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Export a critic value map over the field for a spawned frozen state.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Agent whose critic is evaluated.
        #[arg(long, default_value_t = 0)]
        perspective: usize,
        /// `ball` or `agent:<index>`.
        #[arg(long, default_value = "ball")]
        subject: HeatmapSubject,
        #[arg(long, default_value_t = 80)]
        resolution: usize,
        /// CSV grid output, one line per row.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-simulate a trajectory log and check it reproduces exactly.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectories: PathBuf,
    },
    /// Print the configuration in effect as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_policy(path: &Path, cfg: &Config, deterministic: bool) -> Result<Controller> {
    let ckpt = Checkpoint::load(path)?;
    let expected = soccer_core::trainer::layout_for(cfg);
    if ckpt.net.layout != expected {
        log::warn!("{}: network layout differs from the configuration; using the checkpoint's", path.display());
    }
    Ok(Controller::policy(Arc::new(ckpt.net), deterministic))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, checkpoint, resume, metrics, epochs } => {
            let mut trainer = match resume {
                Some(p) => {
                    let t = Checkpoint::load(&p)?.into_trainer()?;
                    log::info!("resuming at iteration {}", t.epoch);
                    t
                }
                None => Trainer::new(common.load()?)?,
            };
            if let Some(e) = epochs {
                trainer.cfg.trainer.total_epochs = e;
            }
            let mut writer = metrics.as_deref().map(|p| create(p).map(csv::Writer::from_writer)).transpose()?;
            let save = |t: &Trainer| Checkpoint::from_trainer(t).save(&checkpoint);
            let history = trainer.train(writer.as_mut(), save)?;
            if let Some(last) = history.last() {
                println!(
                    "trained to iteration {}: dense_active {}, adversary buffer {}, average win rate {}",
                    trainer.epoch,
                    last.dense_active,
                    last.buffer_size,
                    last.avg_win_rate.map_or("n/a".into(), |w| format!("{:.3}", w))
                );
            }
            println!("checkpoint written to {}", checkpoint.display());
        }
        Command::Eval { common, scenario, blue, red, duration, episodes, stochastic, stats, trajectories } => {
            let cfg = common.load()?;
            let scenario = scenario.build(duration.unwrap_or(cfg.eval.duration));
            let deterministic = cfg.eval.deterministic && !stochastic;
            let blue = load_policy(&blue, &cfg, deterministic)?;
            let red = if red == "bot" { Controller::Bot } else { load_policy(Path::new(&red), &cfg, deterministic)? };
            let budget = episodes.map_or(MatchBudget::Duration, MatchBudget::Episodes);
            let mut sink = trajectories.as_deref().map(|p| create(p).map(JsonlWriter::new)).transpose()?;
            let report = run_match(
                &blue,
                &red,
                &scenario,
                budget,
                &cfg,
                cfg.seed,
                sink.as_mut().map(|s| s as &mut dyn TrajectorySink),
            )?;
            if let Some(s) = sink {
                s.into_inner().flush()?;
            }
            if let Some(p) = stats {
                report.write_csv(create(&p)?)?;
            }
            println!(
                "{:?}: {} episodes, win {:.1}% draw {:.1}% loss {:.1}%, ownership {:.1}% / {:.1}%, passes {:.2} / {:.2}, losses {:.2} / {:.2}, mean duration {:.2} s",
                report.scenario,
                report.episodes.len(),
                report.win_pct,
                report.draw_pct,
                report.loss_pct,
                report.ownership_blue_pct,
                report.ownership_red_pct,
                report.mean_passes_blue,
                report.mean_passes_red,
                report.mean_losses_blue,
                report.mean_losses_red,
                report.mean_duration
            );
        }
        Command::Heatmap { common, scenario, checkpoint, perspective, subject, resolution, out } => {
            let cfg = common.load()?;
            let net = Checkpoint::load(&checkpoint)?.net;
            let spec = scenario.build(cfg.eval.duration).spawn_spec(&cfg, 0);
            let world = spawn_episode(&spec, &mut instance_rng(cfg.seed, 0))?;
            let grid = export_value_heatmap(&net, &world, perspective, subject, resolution, &cfg.observation)?;
            let mut w = create(&out)?;
            for row in grid.chunks(resolution) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", line.join(","))?;
            }
            w.flush()?;
            println!("{resolution}x{resolution} value grid written to {}", out.display());
        }
        Command::Replay { common, trajectories } => {
            let cfg = common.load()?;
            let records = read_trajectories(BufReader::new(File::open(&trajectories)?))?;
            let s = replay(&records, &cfg)?;
            println!("replayed {} episodes, {} steps: identical", s.episodes, s.steps);
        }
        Command::Config { common } => {
            print!("{}", common.load()?.to_toml_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
