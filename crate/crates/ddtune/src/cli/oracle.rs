use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};

use super::{segments_for, GlobalArgs};
use crate::batch;
use crate::formats::{self, OracleResultJson};
use ddtune_core::oracle::{DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_INCREMENTAL_DEPTH};
use ddtune_core::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    /// Exhaustive when N fits the limit, incremental otherwise.
    Auto,
    Exhaustive,
    Incremental,
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub envs: PathBuf,
    /// Largest total evolution time in microseconds.
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
    /// Lookahead depth for incremental mode.
    #[arg(long, default_value_t = DEFAULT_INCREMENTAL_DEPTH)]
    pub depth: usize,
    /// Largest N exhaustive mode accepts (4^N evaluations).
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_LIMIT)]
    pub limit: usize,
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    #[arg(long, default_value = "oracle_results.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

pub fn run(global: &GlobalArgs, args: &OracleArgs) -> Result<()> {
    let engine = global.engine();
    let n_max = segments_for(args.t_max, engine.delta_t)?;
    let exhaustive = match args.mode {
        Mode::Auto => n_max <= args.limit,
        Mode::Exhaustive => {
            if n_max > args.limit {
                return Err(Error::OracleLimit { n: n_max, limit: args.limit }.into());
            }
            true
        }
        Mode::Incremental => false,
    };

    let environments = formats::read_environments(&args.envs)?;
    if environments.is_empty() {
        bail!("no environments in {}", args.envs.display());
    }

    let mut cache = super::load_cache(args.cache.as_ref())?;
    let traces = batch::with_pool(args.parallel, || -> Result<_> {
        let transforms = batch::warm_transforms(&engine, n_max, &mut cache);
        let tables = batch::spectrum_tables(&environments, engine.grid)?;
        Ok(batch::oracle_environments(
            &tables,
            &transforms,
            n_max,
            exhaustive,
            args.depth,
            Some(args.limit),
        )?)
    })??;

    let mut records = Vec::new();
    for (env_id, trace) in traces.iter().enumerate() {
        for result in trace {
            records.push(OracleResultJson::from_result(env_id as u64, result));
        }
    }
    formats::write_json(&args.out, &records)?;
    super::save_cache(args.cache.as_ref(), &cache)?;

    let finals: Vec<f64> = traces
        .iter()
        .filter_map(|t| t.last().map(|r| r.best_coherence))
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    println!(
        "oracle ({}) over {} environments to T = {} us: mean final W {:.6} -> {}",
        if exhaustive { "exhaustive".to_string() } else { format!("incremental d={}", args.depth) },
        traces.len(),
        args.t_max,
        mean,
        args.out.display()
    );
    super::print_cache_stats(&cache);
    Ok(())
}
