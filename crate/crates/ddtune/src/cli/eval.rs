use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use super::{segments_for, GlobalArgs};
use crate::batch::{self, EngineConfig};
use crate::formats::{self, EvalRow, SequenceJson};
use ddtune_core::{DdSequence, SegmentKind};

#[derive(Args)]
pub struct EvalArgs {
    /// Pure strategy name: FID, Hahn, CPMG, or UDD.
    #[arg(long, conflicts_with = "sequence_file")]
    pub strategy: Option<String>,
    /// Sequence JSON file ({delta_t, actions}).
    #[arg(long)]
    pub sequence_file: Option<PathBuf>,
    /// Environments JSON (from sample-envs).
    #[arg(long)]
    pub envs: PathBuf,
    /// Total evolution time in microseconds (multiple of delta_t).
    #[arg(long)]
    pub total_time: Option<f64>,
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Transform-cache file (loaded if present, saved on completion).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
}

pub fn run(global: &GlobalArgs, args: &EvalArgs) -> Result<()> {
    let engine = global.engine();
    let (label, sequence) = resolve_sequence(global, &engine, args)?;
    let environments = formats::read_environments(&args.envs)?;
    if environments.is_empty() {
        bail!("no environments in {}", args.envs.display());
    }

    let mut cache = super::load_cache(args.cache.as_ref())?;
    let rows = batch::with_pool(args.parallel, || -> Result<Vec<EvalRow>> {
        let transforms = batch::warm_transforms(&engine, sequence.len(), &mut cache);
        let tables = batch::spectrum_tables(&environments, engine.grid)?;
        let results = batch::evaluate_fixed(&transforms, &tables, &sequence);
        Ok(results
            .iter()
            .enumerate()
            .map(|(i, r)| EvalRow {
                sequence_id: label.clone(),
                nsd_id: i as u64,
                t: r.total_time,
                chi: r.chi,
                w: r.w,
            })
            .collect())
    })??;

    formats::write_eval_csv(&args.out, &rows)?;
    super::save_cache(args.cache.as_ref(), &cache)?;

    let ws: Vec<f64> = rows.iter().map(|r| r.w).collect();
    let mean = ws.iter().sum::<f64>() / ws.len() as f64;
    let min = ws.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "{} over {} environments at T = {} us: mean W {:.6}, min {:.6}, max {:.6} -> {}",
        label,
        rows.len(),
        sequence.total_time(),
        mean,
        min,
        max,
        args.out.display()
    );
    super::print_cache_stats(&cache);
    Ok(())
}

fn resolve_sequence(
    global: &GlobalArgs,
    engine: &EngineConfig,
    args: &EvalArgs,
) -> Result<(String, DdSequence)> {
    if let Some(path) = &args.sequence_file {
        let json: SequenceJson = formats::read_json(path)?;
        let sequence = json.to_sequence(engine.pulses_per_segment)?;
        if let Some(dt) = global.delta_t {
            if (sequence.delta_t() - dt).abs() > 1e-12 {
                bail!(
                    "sequence file delta_t {} conflicts with --delta-t {}",
                    sequence.delta_t(),
                    dt
                );
            }
        }
        if let Some(t) = args.total_time {
            if (sequence.total_time() - t).abs() > 1e-9 {
                bail!(
                    "sequence file spans {} us but --total-time is {} us",
                    sequence.total_time(),
                    t
                );
            }
        }
        return Ok((super::file_stem(path), sequence));
    }
    let Some(name) = &args.strategy else {
        bail!("one of --strategy or --sequence-file is required");
    };
    let kind = SegmentKind::from_name(name)?;
    let Some(t) = args.total_time else {
        bail!("--total-time is required with --strategy");
    };
    let n = segments_for(t, engine.delta_t)?;
    Ok((
        name.clone(),
        DdSequence::uniform(kind, n, engine.delta_t, engine.pulses_per_segment)?,
    ))
}
