//! Command-line interface: reproducible runs over the library surface.

mod analyze;
mod cache;
mod envs;
mod eval;
mod fit;
mod oracle;
mod sensitivity;
mod train;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::batch::EngineConfig;
use crate::cache_io;
use ddtune_core::spectral::{FrequencyGrid, QuadratureConfig, TransformCache};

#[derive(Parser)]
#[command(
    name = "ddtune",
    version,
    about = "Discover and evaluate dynamical-decoupling pulse sequences under parametric noise"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override config-file values, which override built-in defaults.
#[derive(Args, Clone, Debug)]
pub struct GlobalArgs {
    /// Base RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Frequency grid as `min,max,points` (rad/us, rad/us, count).
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<FrequencyGrid>,
    /// Segment duration in microseconds.
    #[arg(long, global = true)]
    pub delta_t: Option<f64>,
    /// Pi pulses per CPMG/UDD segment.
    #[arg(long, global = true)]
    pub pulses_per_segment: Option<u32>,
    /// Trapezoid nodes per 4 us of integrated interval.
    #[arg(long, global = true)]
    pub points_per_segment: Option<u32>,
}

fn parse_grid(s: &str) -> Result<FrequencyGrid, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected min,max,points".into());
    }
    let min: f64 = parts[0].trim().parse().map_err(|e| format!("min: {e}"))?;
    let max: f64 = parts[1].trim().parse().map_err(|e| format!("max: {e}"))?;
    let n: usize = parts[2].trim().parse().map_err(|e| format!("points: {e}"))?;
    FrequencyGrid::new(min, max, n).map_err(|e| e.to_string())
}

impl GlobalArgs {
    pub fn engine(&self) -> EngineConfig {
        let mut engine = EngineConfig::default();
        if let Some(grid) = self.grid {
            engine.grid = grid;
        }
        if let Some(dt) = self.delta_t {
            engine.delta_t = dt;
        }
        if let Some(p) = self.pulses_per_segment {
            engine.pulses_per_segment = p;
        }
        if let Some(p) = self.points_per_segment {
            engine.quad = QuadratureConfig::new(p);
        }
        engine
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Sample randomized noise environments to a JSON file.
    SampleEnvs(envs::SampleEnvsArgs),
    /// Evaluate a strategy's coherence across environments (CSV out).
    Eval(eval::EvalArgs),
    /// Q-learning training ladder per environment (JSON out).
    Train(train::TrainArgs),
    /// Brute-force reference search per environment (JSON out).
    Oracle(oracle::OracleArgs),
    /// AC-magnetometry sensitivity metric per strategy and environment.
    Sensitivity(sensitivity::SensitivityArgs),
    /// Fit a three-component noise spectrum to decay curves.
    FitNsd(fit::FitNsdArgs),
    /// Summarize learned sequences (proportions, autocorrelation, ...).
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCommand),
    /// Report entries and counters of a transform-cache file.
    CacheStats(cache::CacheStatsArgs),
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::SampleEnvs(args) => envs::run(&cli.global, &args),
        Command::Eval(args) => eval::run(&cli.global, &args),
        Command::Train(args) => train::run(&cli.global, &args),
        Command::Oracle(args) => oracle::run(&cli.global, &args),
        Command::Sensitivity(args) => sensitivity::run(&cli.global, &args),
        Command::FitNsd(args) => fit::run(&cli.global, &args),
        Command::Analyze(args) => analyze::run(&cli.global, &args),
        Command::CacheStats(args) => cache::run(&args),
    }
}

/// Segment count for a total time that must be a positive multiple of Δt.
pub(crate) fn segments_for(total_time: f64, delta_t: f64) -> Result<usize> {
    if !(total_time > 0.0) {
        bail!("total time must be positive (got {total_time})");
    }
    let n = (total_time / delta_t).round();
    if (n * delta_t - total_time).abs() > 1e-9 || n < 1.0 {
        bail!("total time {total_time} us is not a positive multiple of delta_t = {delta_t} us");
    }
    Ok(n as usize)
}

pub(crate) fn load_cache(path: Option<&PathBuf>) -> Result<TransformCache> {
    match path {
        Some(p) => cache_io::cache_load(p, true)
            .with_context(|| format!("loading cache {}", p.display())),
        None => Ok(TransformCache::new()),
    }
}

pub(crate) fn save_cache(path: Option<&PathBuf>, cache: &TransformCache) -> Result<()> {
    if let Some(p) = path {
        cache_io::cache_save(cache, p).with_context(|| format!("saving cache {}", p.display()))?;
    }
    Ok(())
}

pub(crate) fn print_cache_stats(cache: &TransformCache) {
    println!(
        r#"cache-stats {{"entries":{},"hits":{},"misses":{}}}"#,
        cache.len(),
        cache.hits(),
        cache.misses()
    );
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".to_string())
}
