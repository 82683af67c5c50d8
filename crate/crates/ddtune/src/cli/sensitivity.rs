use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use super::{segments_for, GlobalArgs};
use crate::batch;
use crate::formats::{self, SensitivityRow, StrategySummaryJson};
use ddtune_core::{DdSequence, Error, SegmentKind};

/// Default target: ω_s = 2π · 1.0 rad/µs (a 1.0 MHz AC signal).
fn default_omega_s() -> f64 {
    2.0 * std::f64::consts::PI
}

#[derive(Args)]
pub struct SensitivityArgs {
    #[arg(long)]
    pub envs: PathBuf,
    /// Total evolution time in microseconds.
    #[arg(long)]
    pub total_time: f64,
    /// Target AC angular frequency, rad/us.
    #[arg(long, default_value_t = default_omega_s())]
    pub omega_s: f64,
    /// Comma-separated pure strategies to include.
    #[arg(long, default_value = "FID,Hahn,CPMG,UDD", value_delimiter = ',')]
    pub strategies: Vec<String>,
    /// Train/oracle results JSON; adds per-environment learned sequences as
    /// the `trained` strategy at the matching T.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// |Y(omega_s)| floor below which a sequence is filter-blind.
    #[arg(long, default_value_t = ddtune_core::sensing::DEFAULT_Y_MAG_FLOOR)]
    pub y_mag_floor: f64,
    #[arg(long, default_value = "sensitivity.csv")]
    pub out: PathBuf,
    /// Per-strategy aggregate JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
struct RecordJson {
    env_id: u64,
    #[serde(rename = "T")]
    t: f64,
    actions: Vec<u8>,
}

pub fn run(global: &GlobalArgs, args: &SensitivityArgs) -> Result<()> {
    let engine = global.engine();
    let n = segments_for(args.total_time, engine.delta_t)?;
    let environments = formats::read_environments(&args.envs)?;
    if environments.is_empty() {
        bail!("no environments in {}", args.envs.display());
    }

    // (strategy name, per-env sequence) in output order
    let mut plans: Vec<(String, Vec<DdSequence>)> = Vec::new();
    for name in &args.strategies {
        let kind = SegmentKind::from_name(name)?;
        let seq = DdSequence::uniform(kind, n, engine.delta_t, engine.pulses_per_segment)?;
        plans.push((name.clone(), vec![seq; environments.len()]));
    }
    if let Some(path) = &args.results {
        let records: Vec<RecordJson> = formats::read_json(path)?;
        let mut by_env: BTreeMap<u64, Vec<u8>> = BTreeMap::new();
        for r in records {
            if (r.t - args.total_time).abs() < 1e-9 {
                by_env.insert(r.env_id, r.actions);
            }
        }
        let sequences = (0..environments.len() as u64)
            .map(|env_id| {
                let actions = by_env.get(&env_id).with_context(|| {
                    format!(
                        "{}: no sequence for environment {env_id} at T = {}",
                        path.display(),
                        args.total_time
                    )
                })?;
                Ok(DdSequence::from_codes(
                    actions,
                    engine.delta_t,
                    engine.pulses_per_segment,
                )?)
            })
            .collect::<Result<Vec<_>>>()?;
        plans.push(("trained".to_string(), sequences));
    }

    let mut cache = super::load_cache(args.cache.as_ref())?;
    let tables = batch::spectrum_tables(&environments, engine.grid)?;
    let transforms = batch::warm_transforms(&engine, n, &mut cache);

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (name, sequences) in &plans {
        let mut log_sum = 0.0;
        let mut sum = 0.0;
        for (env_id, (sequence, table)) in sequences.iter().zip(&tables).enumerate() {
            let res = batch::coherence_of(&transforms, table, sequence.actions());
            let y_mag = batch::y_magnitude(sequence, args.omega_s, &mut cache, &engine.quad);
            if y_mag < args.y_mag_floor {
                return Err(Error::FilterBlind { y_mag, floor: args.y_mag_floor })
                    .with_context(|| format!("strategy {name}, environment {env_id}"));
            }
            let m = args.total_time.sqrt() / (res.w * y_mag);
            log_sum += m.ln();
            sum += m;
            rows.push(SensitivityRow {
                strategy: name.clone(),
                env_id: env_id as u64,
                t: args.total_time,
                omega_s: args.omega_s,
                w: res.w,
                y_mag,
                metric_m: m,
            });
        }
        let count = sequences.len() as f64;
        summaries.push(StrategySummaryJson {
            strategy: name.clone(),
            geo_mean_m: (log_sum / count).exp(),
            arith_mean_m: sum / count,
            ratio_to_best: f64::NAN,
        });
    }
    let best = summaries
        .iter()
        .map(|s| s.geo_mean_m)
        .fold(f64::INFINITY, f64::min);
    for s in &mut summaries {
        s.ratio_to_best = s.geo_mean_m / best;
    }

    formats::write_sensitivity_csv(&args.out, &rows)?;
    if let Some(path) = &args.summary {
        formats::write_json(path, &summaries)?;
    }
    super::save_cache(args.cache.as_ref(), &cache)?;

    for s in &summaries {
        println!(
            "{}: geometric mean M {:.6e} (x{:.3} of best), arithmetic mean {:.6e}",
            s.strategy, s.geo_mean_m, s.ratio_to_best, s.arith_mean_m
        );
    }
    super::print_cache_stats(&cache);
    Ok(())
}
