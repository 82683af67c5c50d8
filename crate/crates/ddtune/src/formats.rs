//! Wire formats: JSON schemas and CSV layouts for configs, environments,
//! sequences, results, and decay datasets.
//!
//! CSV floats are printed with 17 significant digits so round-trips are
//! lossless; JSON numbers use serde_json's shortest round-trip encoding,
//! which is also lossless.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ddtune_core::agent::TrainConfig;
use ddtune_core::fitting::{DecayDataset, FitResult, SequenceLabel};
use ddtune_core::noise::{EnvironmentSampler, ParamRange, SampledEnvironment};
use ddtune_core::oracle::{OracleMode, OracleResult};
use ddtune_core::sensing::StrategyRow;
use ddtune_core::{DdSequence, GaussianNsd};

/// Lossless float formatting: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// sampler config + environments

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RangesJson {
    pub y0: [f64; 2],
    pub a: [f64; 2],
    #[serde(rename = "B")]
    pub b_field: [f64; 2],
    pub w1: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfigJson {
    pub ranges: RangesJson,
    pub count: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Include the 2π factor in B → v_L (default true).
    #[serde(default = "default_true")]
    pub two_pi: bool,
}

fn default_true() -> bool {
    true
}

impl SamplerConfigJson {
    pub fn to_sampler(&self) -> Result<EnvironmentSampler> {
        let range = |name: &'static str, pair: [f64; 2]| {
            ParamRange::new(pair[0], pair[1])
                .with_context(|| format!("invalid range for `{name}`"))
        };
        Ok(EnvironmentSampler {
            count: self.count,
            seed: self.seed,
            y0: range("y0", self.ranges.y0)?,
            a: range("a", self.ranges.a)?,
            b_field: range("B", self.ranges.b_field)?,
            w1: range("w1", self.ranges.w1)?,
            gamma: self.gamma,
            two_pi: self.two_pi,
        })
    }

    pub fn evaluation_family(count: usize, seed: u64) -> Self {
        Self {
            ranges: RangesJson {
                y0: [0.002, 0.008],
                a: [0.3, 0.7],
                b_field: [520.0, 538.0],
                w1: [0.004, 0.009],
            },
            count,
            seed,
            gamma: ddtune_core::noise::CARBON13_GAMMA,
            two_pi: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentJson {
    pub y0: f64,
    pub a: f64,
    #[serde(rename = "v_L")]
    pub v_l: f64,
    pub w1: f64,
    #[serde(rename = "source_B")]
    pub source_b: f64,
}

impl EnvironmentJson {
    pub fn from_sampled(env: &SampledEnvironment) -> Self {
        Self {
            y0: env.nsd.y0,
            a: env.nsd.a,
            v_l: env.nsd.v_l,
            w1: env.nsd.w1,
            source_b: env.source_b,
        }
    }

    pub fn to_nsd(&self) -> Result<GaussianNsd> {
        GaussianNsd::new(self.y0, self.a, self.v_l, self.w1).context("invalid environment entry")
    }
}

pub fn write_environments(path: &Path, envs: &[SampledEnvironment]) -> Result<()> {
    let rows: Vec<EnvironmentJson> = envs.iter().map(EnvironmentJson::from_sampled).collect();
    write_json(path, &rows)
}

pub fn read_environments(path: &Path) -> Result<Vec<GaussianNsd>> {
    let rows: Vec<EnvironmentJson> = read_json(path)?;
    rows.iter().map(|r| r.to_nsd()).collect()
}

// ---------------------------------------------------------------------------
// sequences

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceJson {
    pub delta_t: f64,
    pub actions: Vec<u8>,
}

impl SequenceJson {
    pub fn from_sequence(seq: &DdSequence) -> Self {
        Self { delta_t: seq.delta_t(), actions: seq.codes() }
    }

    pub fn to_sequence(&self, pulses_per_segment: u32) -> Result<DdSequence> {
        DdSequence::from_codes(&self.actions, self.delta_t, pulses_per_segment)
            .context("invalid sequence file")
    }
}

// ---------------------------------------------------------------------------
// training

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrainConfigJson {
    pub delta_t: Option<f64>,
    pub pulses_per_segment: Option<u32>,
    pub m: Option<usize>,
    pub alpha: Option<f64>,
    pub eps_start: Option<f64>,
    pub eps_decay: Option<f64>,
    pub eps_end: Option<f64>,
    pub n_episodes: Option<usize>,
    pub seed: Option<u64>,
    pub greedy_only: Option<bool>,
}

impl TrainConfigJson {
    /// Fill a [`TrainConfig`], file values overriding defaults.
    pub fn apply(&self, mut config: TrainConfig) -> TrainConfig {
        if let Some(v) = self.delta_t {
            config.delta_t = v;
        }
        if let Some(v) = self.pulses_per_segment {
            config.pulses_per_segment = v;
        }
        if let Some(v) = self.m {
            config.m = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.eps_start {
            config.eps_start = v;
        }
        if let Some(v) = self.eps_decay {
            config.eps_decay = v;
        }
        if let Some(v) = self.eps_end {
            config.eps_end = v;
        }
        if let Some(v) = self.n_episodes {
            config.n_episodes = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.greedy_only {
            config.greedy_only = v;
        }
        config
    }
}

/// One learned sequence for one (environment, target time).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainResultJson {
    pub env_id: u64,
    #[serde(rename = "T")]
    pub t: f64,
    pub actions: Vec<u8>,
    pub coherence: f64,
    /// Episode count used for this target time.
    pub episodes: usize,
    pub final_epsilon: f64,
}

/// Oracle schema: the training schema plus mode and evaluation count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResultJson {
    pub env_id: u64,
    #[serde(rename = "T")]
    pub t: f64,
    pub actions: Vec<u8>,
    pub coherence: f64,
    pub mode: String,
    pub evaluated_count: u64,
}

impl OracleResultJson {
    pub fn from_result(env_id: u64, result: &OracleResult) -> Self {
        let mode = match result.mode {
            OracleMode::Exhaustive => "exhaustive".to_string(),
            OracleMode::Incremental { depth } => format!("incremental(d={depth})"),
        };
        Self {
            env_id,
            t: result.best_sequence.total_time(),
            actions: result.best_sequence.codes(),
            coherence: result.best_coherence,
            mode,
            evaluated_count: result.evaluated_count,
        }
    }
}

// ---------------------------------------------------------------------------
// CSV layouts

/// Rows of the eval output: sequence_id,nsd_id,T,chi,w.
pub struct EvalRow {
    pub sequence_id: String,
    pub nsd_id: u64,
    pub t: f64,
    pub chi: f64,
    pub w: f64,
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut out = String::from("sequence_id,nsd_id,T,chi,w\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.sequence_id,
            r.nsd_id,
            fmt17(r.t),
            fmt17(r.chi),
            fmt17(r.w)
        )?;
    }
    write_atomic(path, out.as_bytes())
}

/// Parse an eval CSV back into (env, T, w) records.
pub fn read_eval_csv(path: &Path) -> Result<Vec<ddtune_core::analysis::CoherenceRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("{}: line {} has {} fields, expected 5", path.display(), i + 1, fields.len());
        }
        out.push(ddtune_core::analysis::CoherenceRecord {
            env_id: fields[1].parse().with_context(|| format!("line {}", i + 1))?,
            t: fields[2].parse().with_context(|| format!("line {}", i + 1))?,
            w: fields[4].parse().with_context(|| format!("line {}", i + 1))?,
        });
    }
    Ok(out)
}

/// Rows of the sensitivity output: strategy,env_id,T,omega_s,w,y_mag,M.
pub struct SensitivityRow {
    pub strategy: String,
    pub env_id: u64,
    pub t: f64,
    pub omega_s: f64,
    pub w: f64,
    pub y_mag: f64,
    pub metric_m: f64,
}

pub fn write_sensitivity_csv(path: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut out = String::from("strategy,env_id,T,omega_s,w,y_mag,M\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.strategy,
            r.env_id,
            fmt17(r.t),
            fmt17(r.omega_s),
            fmt17(r.w),
            fmt17(r.y_mag),
            fmt17(r.metric_m)
        )?;
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummaryJson {
    pub strategy: String,
    pub geo_mean_m: f64,
    pub arith_mean_m: f64,
    pub ratio_to_best: f64,
}

impl StrategySummaryJson {
    pub fn from_row(row: &StrategyRow) -> Self {
        Self {
            strategy: row.name.clone(),
            geo_mean_m: row.geo_mean_m,
            arith_mean_m: row.arith_mean_m,
            ratio_to_best: row.ratio_to_best,
        }
    }
}

// ---------------------------------------------------------------------------
// decay datasets + fits

/// CSV columns: label,time_us,coherence[,weight]; labels are `Ramsey` or
/// `CPMG-n`. Rows group into datasets by label in first-appearance order.
pub fn read_decay_csv(path: &Path) -> Result<Vec<DecayDataset>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, (Vec<(f64, f64)>, Vec<f64>, bool)> =
        std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("label")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 || fields.len() > 4 {
            bail!("{}: line {}: expected 3 or 4 columns", path.display(), i + 1);
        }
        let label = fields[0].trim().to_string();
        let t: f64 = fields[1].trim().parse().with_context(|| format!("line {}", i + 1))?;
        let c: f64 = fields[2].trim().parse().with_context(|| format!("line {}", i + 1))?;
        let entry = groups.entry(label.clone()).or_insert_with(|| {
            order.push(label.clone());
            (Vec::new(), Vec::new(), false)
        });
        entry.0.push((t, c));
        if let Some(w) = fields.get(3) {
            entry.1.push(w.trim().parse().with_context(|| format!("line {}", i + 1))?);
            entry.2 = true;
        }
    }
    order
        .into_iter()
        .map(|label| {
            let (points, weights, weighted) = groups.remove(&label).expect("grouped");
            let parsed = parse_label(&label)?;
            if weighted && weights.len() != points.len() {
                bail!("dataset `{label}`: weight column must be present on every row or none");
            }
            DecayDataset::new(parsed, points, weighted.then_some(weights))
                .with_context(|| format!("dataset `{label}`"))
        })
        .collect()
}

pub fn parse_label(label: &str) -> Result<SequenceLabel> {
    if label.eq_ignore_ascii_case("ramsey") {
        return Ok(SequenceLabel::Ramsey);
    }
    if let Some(n) = label
        .strip_prefix("CPMG-")
        .or_else(|| label.strip_prefix("cpmg-"))
    {
        let n_pulses: u32 = n.parse().with_context(|| format!("bad CPMG pulse count in `{label}`"))?;
        return Ok(SequenceLabel::Cpmg { n_pulses });
    }
    bail!("unknown decay label `{label}` (expected `Ramsey` or `CPMG-n`)")
}

pub fn label_name(label: SequenceLabel) -> String {
    match label {
        SequenceLabel::Ramsey => "Ramsey".to_string(),
        SequenceLabel::Cpmg { n_pulses } => format!("CPMG-{n_pulses}"),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitParamsJson {
    pub y0: f64,
    pub a_g: f64,
    pub v_g: f64,
    pub w_g: f64,
    pub a_1f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResultJson {
    pub params: FitParamsJson,
    pub sse: f64,
    pub converged: bool,
    pub iterations: u64,
    pub residuals: Vec<FitResidualsJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResidualsJson {
    pub label: String,
    pub values: Vec<f64>,
}

impl FitResultJson {
    pub fn from_result(fit: &FitResult, labels: &[SequenceLabel]) -> Self {
        Self {
            params: FitParamsJson {
                y0: fit.params.y0,
                a_g: fit.params.a_g,
                v_g: fit.params.v_g,
                w_g: fit.params.w_g,
                a_1f: fit.params.a_1f,
            },
            sse: fit.sse,
            converged: fit.converged,
            iterations: fit.iterations,
            residuals: labels
                .iter()
                .zip(&fit.residuals)
                .map(|(&label, values)| FitResidualsJson {
                    label: label_name(label),
                    values: values.clone(),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// generic JSON + atomic file helpers

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Write via a sibling temp file and rename, so partial outputs never appear.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move into place: {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddtune_core::SegmentKind;

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1.0705e-3, 2.0 * std::f64::consts::PI, 1e-300] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn sampler_config_round_trip() {
        let cfg = SamplerConfigJson::evaluation_family(100, 7);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SamplerConfigJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.count, 100);
        assert!(back.two_pi);
        let sampler = back.to_sampler().unwrap();
        assert_eq!(sampler.b_field.lo, 520.0);
    }

    #[test]
    fn missing_ranges_named_in_error() {
        let err = serde_json::from_str::<SamplerConfigJson>(r#"{"count":1,"seed":0,"gamma":1.0}"#)
            .unwrap_err();
        assert!(err.to_string().contains("ranges"), "{err}");
    }

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label("Ramsey").unwrap(), SequenceLabel::Ramsey);
        assert_eq!(
            parse_label("CPMG-8").unwrap(),
            SequenceLabel::Cpmg { n_pulses: 8 }
        );
        assert!(parse_label("XY8").is_err());
    }

    #[test]
    fn sequence_json_round_trip() {
        let seq = DdSequence::with_defaults(vec![
            SegmentKind::Udd,
            SegmentKind::Cpmg,
            SegmentKind::Cpmg,
        ])
        .unwrap();
        let json = SequenceJson::from_sequence(&seq);
        let back = json.to_sequence(4).unwrap();
        assert_eq!(back, seq);
    }
}
