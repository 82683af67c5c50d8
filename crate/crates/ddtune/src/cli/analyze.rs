use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};

use super::GlobalArgs;
use crate::formats;
use ddtune_core::analysis::{
    coherence_cdf, normalized_coherence, sequence_autocorrelation, subsequence_proportions,
    CoherenceRecord,
};
use ddtune_core::{DdSequence, SegmentKind};

#[derive(Subcommand)]
pub enum AnalyzeCommand {
    /// Per-T fractions of each segment kind across learned sequences.
    Proportions(ProportionsArgs),
    /// Mean Pearson autocorrelation of action codes per lag.
    Autocorr(AutocorrArgs),
    /// Mean strategy coherence divided by mean Oracle coherence per T.
    Normalized(NormalizedArgs),
    /// Empirical coherence CDF at one T.
    Cdf(CdfArgs),
}

#[derive(Args)]
pub struct ProportionsArgs {
    /// Train or oracle results JSON.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value = "proportions.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct AutocorrArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub max_lag: usize,
    /// Restrict to sequences at this T (default: the largest T present).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "autocorrelation.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct NormalizedArgs {
    /// Strategy results (train/oracle JSON or eval CSV).
    #[arg(long)]
    pub results: PathBuf,
    /// Oracle results (train/oracle JSON or eval CSV).
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long, default_value = "normalized.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CdfArgs {
    /// Results file (train/oracle JSON or eval CSV).
    #[arg(long)]
    pub results: PathBuf,
    /// Total time to slice at, microseconds.
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value = "cdf.csv")]
    pub out: PathBuf,
}

/// Minimal shape shared by train and oracle result records.
#[derive(serde::Deserialize)]
struct RecordJson {
    env_id: u64,
    #[serde(rename = "T")]
    t: f64,
    actions: Vec<u8>,
    coherence: f64,
}

fn read_records(path: &Path) -> Result<Vec<RecordJson>> {
    formats::read_json(path).with_context(|| format!("results file {}", path.display()))
}

/// (env, T, w) triples from either a results JSON or an eval CSV.
fn read_coherence_records(path: &Path) -> Result<Vec<CoherenceRecord>> {
    if path.extension().is_some_and(|e| e == "csv") {
        return formats::read_eval_csv(path);
    }
    Ok(read_records(path)?
        .into_iter()
        .map(|r| CoherenceRecord { env_id: r.env_id, t: r.t, w: r.coherence })
        .collect())
}

fn sequences_of(records: &[RecordJson], delta_t: f64, pulses: u32) -> Result<Vec<DdSequence>> {
    records
        .iter()
        .map(|r| Ok(DdSequence::from_codes(&r.actions, delta_t, pulses)?))
        .collect()
}

fn t_key(t: f64) -> i64 {
    (t * 1e9).round() as i64
}

pub fn run(global: &GlobalArgs, command: &AnalyzeCommand) -> Result<()> {
    match command {
        AnalyzeCommand::Proportions(args) => proportions(global, args),
        AnalyzeCommand::Autocorr(args) => autocorr(global, args),
        AnalyzeCommand::Normalized(args) => normalized(args),
        AnalyzeCommand::Cdf(args) => cdf(args),
    }
}

fn proportions(global: &GlobalArgs, args: &ProportionsArgs) -> Result<()> {
    let engine = global.engine();
    let records = read_records(&args.results)?;
    if records.is_empty() {
        bail!("no records in {}", args.results.display());
    }
    let mut by_t: BTreeMap<i64, (f64, Vec<&RecordJson>)> = BTreeMap::new();
    for r in &records {
        by_t.entry(t_key(r.t)).or_insert((r.t, Vec::new())).1.push(r);
    }
    let mut out = String::from("T,fid,hahn,cpmg,udd\n");
    for (_, (t, group)) in by_t {
        let seqs = group
            .iter()
            .map(|r| Ok(DdSequence::from_codes(&r.actions, engine.delta_t, engine.pulses_per_segment)?))
            .collect::<Result<Vec<_>>>()?;
        let f = subsequence_proportions(&seqs)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            formats::fmt17(t),
            formats::fmt17(f.of(SegmentKind::Fid)),
            formats::fmt17(f.of(SegmentKind::Hahn)),
            formats::fmt17(f.of(SegmentKind::Cpmg)),
            formats::fmt17(f.of(SegmentKind::Udd))
        )?;
    }
    formats::write_atomic(&args.out, out.as_bytes())?;
    println!("proportions -> {}", args.out.display());
    Ok(())
}

fn autocorr(global: &GlobalArgs, args: &AutocorrArgs) -> Result<()> {
    let engine = global.engine();
    let records = read_records(&args.results)?;
    if records.is_empty() {
        bail!("no records in {}", args.results.display());
    }
    let t = args.t.unwrap_or_else(|| {
        records.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max)
    });
    let slice: Vec<RecordJson> = records
        .into_iter()
        .filter(|r| t_key(r.t) == t_key(t))
        .collect();
    if slice.is_empty() {
        bail!("no records at T = {t}");
    }
    let seqs = sequences_of(&slice, engine.delta_t, engine.pulses_per_segment)?;
    let corr = sequence_autocorrelation(&seqs, args.max_lag)?;
    let mut out = String::from("lag,mean_pearson\n");
    for (lag, r) in corr.iter().enumerate() {
        writeln!(out, "{},{}", lag, formats::fmt17(*r))?;
    }
    formats::write_atomic(&args.out, out.as_bytes())?;
    println!(
        "autocorrelation of {} sequences at T = {} us -> {}",
        seqs.len(),
        t,
        args.out.display()
    );
    Ok(())
}

fn normalized(args: &NormalizedArgs) -> Result<()> {
    let strategy = read_coherence_records(&args.results)?;
    let oracle = read_coherence_records(&args.oracle)?;
    let rows = normalized_coherence(&strategy, &oracle)?;
    let mut out = String::from("T,ratio\n");
    for (t, ratio) in &rows {
        writeln!(out, "{},{}", formats::fmt17(*t), formats::fmt17(*ratio))?;
    }
    formats::write_atomic(&args.out, out.as_bytes())?;
    println!("normalized coherence at {} time points -> {}", rows.len(), args.out.display());
    Ok(())
}

fn cdf(args: &CdfArgs) -> Result<()> {
    let records = read_coherence_records(&args.results)?;
    let points = coherence_cdf(&records, args.t)?;
    let mut out = String::from("coherence,cum_fraction\n");
    for (w, frac) in &points {
        writeln!(out, "{},{}", formats::fmt17(*w), formats::fmt17(*frac))?;
    }
    formats::write_atomic(&args.out, out.as_bytes())?;
    println!("CDF with {} points at T = {} us -> {}", points.len(), args.t, args.out.display());
    Ok(())
}
