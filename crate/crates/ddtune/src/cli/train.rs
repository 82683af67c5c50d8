use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use super::{segments_for, GlobalArgs};
use crate::batch;
use crate::formats::{self, TrainConfigJson, TrainResultJson};
use ddtune_core::agent::TrainConfig;

#[derive(Args)]
pub struct TrainArgs {
    /// Environments JSON (from sample-envs).
    #[arg(long)]
    pub envs: PathBuf,
    /// Largest total evolution time in microseconds; the ladder trains every
    /// multiple of delta_t up to this.
    #[arg(long)]
    pub t_max: f64,
    /// Training hyperparameters JSON (flags override file values).
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Worker count (0 = all cores). Outputs are identical for any value.
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    #[arg(long, default_value = "train_results.json")]
    pub out: PathBuf,
    /// Optional per-episode CSV log (env_id,T,episode,epsilon,reward).
    #[arg(long)]
    pub episode_log: Option<PathBuf>,
    /// Transform-cache file (loaded if present, saved on completion).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

pub fn run(global: &GlobalArgs, args: &TrainArgs) -> Result<()> {
    let config = build_config(global, args)?;
    let mut engine = global.engine();
    engine.delta_t = config.delta_t;
    engine.pulses_per_segment = config.pulses_per_segment;
    let n_max = segments_for(args.t_max, config.delta_t)?;

    let environments = formats::read_environments(&args.envs)?;
    if environments.is_empty() {
        bail!("no environments in {}", args.envs.display());
    }

    let mut cache = super::load_cache(args.cache.as_ref())?;
    let ladders = batch::with_pool(args.parallel, || -> Result<_> {
        let transforms = batch::warm_transforms(&engine, n_max, &mut cache);
        let tables = batch::spectrum_tables(&environments, engine.grid)?;
        Ok(batch::train_environments(&config, &tables, &transforms, n_max)?)
    })??;

    let mut records = Vec::new();
    for (env_id, ladder) in ladders.iter().enumerate() {
        for result in ladder {
            records.push(TrainResultJson {
                env_id: env_id as u64,
                t: result.best_sequence.total_time(),
                actions: result.best_sequence.codes(),
                coherence: result.best_reward,
                episodes: result.episodes.len(),
                final_epsilon: result.final_epsilon,
            });
        }
    }
    formats::write_json(&args.out, &records)?;

    if let Some(log_path) = &args.episode_log {
        let mut text = String::from("env_id,T,episode,epsilon,reward\n");
        for (env_id, ladder) in ladders.iter().enumerate() {
            for result in ladder {
                let t = result.best_sequence.total_time();
                for rec in &result.episodes {
                    writeln!(
                        text,
                        "{},{},{},{},{}",
                        env_id,
                        formats::fmt17(t),
                        rec.episode,
                        formats::fmt17(rec.epsilon),
                        formats::fmt17(rec.reward)
                    )?;
                }
            }
        }
        formats::write_atomic(log_path, text.as_bytes())?;
    }

    super::save_cache(args.cache.as_ref(), &cache)?;

    let finals: Vec<f64> = ladders
        .iter()
        .filter_map(|ladder| ladder.last().map(|r| r.best_reward))
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    println!(
        "trained {} environments to T = {} us ({} rungs, {} episodes each): mean final W {:.6} -> {}",
        ladders.len(),
        args.t_max,
        n_max,
        config.n_episodes,
        mean,
        args.out.display()
    );
    super::print_cache_stats(&cache);
    Ok(())
}

fn build_config(global: &GlobalArgs, args: &TrainArgs) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = &args.train_config {
        let json: TrainConfigJson = formats::read_json(path)?;
        config = json.apply(config);
    }
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(dt) = global.delta_t {
        config.delta_t = dt;
    }
    if let Some(p) = global.pulses_per_segment {
        config.pulses_per_segment = p;
    }
    config.validate()?;
    Ok(config)
}
