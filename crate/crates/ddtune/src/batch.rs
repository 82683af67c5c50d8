//! Batch evaluation across environments with deterministic parallelism.
//!
//! Workers never mutate shared state: the transform cache is warmed up front
//! for every (kind, position, frequency) key a run can touch, materialized
//! into read-only [`GridTransforms`] rows, and each environment's work is a
//! pure function of those rows plus its own seed. Results collect in input
//! order, so output files are byte-identical for any worker count.

use anyhow::{Context, Result};
use rayon::prelude::*;

use ddtune_core::agent::{train_ladder, TrainConfig, TrainResult};
use ddtune_core::oracle::{
    oracle_exhaustive, oracle_incremental_trace, OracleResult, DEFAULT_EXHAUSTIVE_LIMIT,
};
use ddtune_core::spectral::{
    Complex64, FrequencyGrid, GridTransforms, QuadratureConfig, TransformCache, TransformKey,
};
use ddtune_core::{
    CoherenceResult, DdSequence, GaussianNsd, Segment, SegmentKind, SpectrumTable,
};

/// Shared engine settings for a batch run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub grid: FrequencyGrid,
    pub quad: QuadratureConfig,
    pub delta_t: f64,
    pub pulses_per_segment: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            quad: QuadratureConfig::default(),
            delta_t: ddtune_core::DEFAULT_DELTA_T,
            pulses_per_segment: ddtune_core::DEFAULT_PULSES_PER_SEGMENT,
        }
    }
}

/// Run `f` on a rayon pool with `threads` workers (0 = rayon default).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot build worker pool")?;
    Ok(pool.install(f))
}

/// Precompute segment transforms for positions 0..n_positions into `cache`
/// and materialize the dense rows.
///
/// Missing keys are integrated in parallel (each value is a pure function of
/// its key) and inserted in deterministic order; the subsequent row build
/// then runs entirely on cache hits.
pub fn warm_transforms(
    engine: &EngineConfig,
    n_positions: usize,
    cache: &mut TransformCache,
) -> GridTransforms {
    let jobs: Vec<(SegmentKind, usize)> = (0..n_positions)
        .flat_map(|pos| SegmentKind::ALL.into_iter().map(move |kind| (kind, pos)))
        .collect();
    let computed: Vec<Vec<(TransformKey, Complex64)>> = jobs
        .par_iter()
        .map(|&(kind, position)| {
            let segment = Segment {
                kind,
                n_pulses: kind.pulse_count(engine.pulses_per_segment),
                t_start: position as f64 * engine.delta_t,
                t_end: (position + 1) as f64 * engine.delta_t,
            };
            engine
                .grid
                .points()
                .filter_map(|omega| {
                    let key = TransformKey::from_segment(&segment, omega);
                    if cache.get(&key).is_some() {
                        None
                    } else {
                        Some((
                            key,
                            ddtune_core::spectral::segment_transform_quadrature(
                                &key.canonical_segment(),
                                omega,
                                &engine.quad,
                            ),
                        ))
                    }
                })
                .collect()
        })
        .collect();
    for batch in computed {
        for (key, value) in batch {
            cache.get_or_compute(key, move || value);
        }
    }
    GridTransforms::build(
        engine.grid,
        engine.delta_t,
        engine.pulses_per_segment,
        n_positions,
        cache,
        &engine.quad,
    )
}

/// S(ω)/ω² tables for every environment, in input order.
pub fn spectrum_tables(envs: &[GaussianNsd], grid: FrequencyGrid) -> Result<Vec<SpectrumTable>> {
    envs.par_iter()
        .map(|nsd| SpectrumTable::new(nsd, grid).context("environment spectrum"))
        .collect()
}

/// χ and W of an action list through the shared rows.
pub fn coherence_of(
    transforms: &GridTransforms,
    table: &SpectrumTable,
    actions: &[SegmentKind],
) -> CoherenceResult {
    let mut acc = ddtune_core::spectral::TransformAccumulator::new(transforms);
    for &kind in actions {
        acc.push(kind);
    }
    let chi = table.chi_from_accumulator(&acc);
    CoherenceResult {
        chi,
        w: (-chi).exp(),
        total_time: actions.len() as f64 * transforms.delta_t(),
        sequence_id: None,
        nsd_id: None,
    }
}

/// Train a warm-started ladder per environment; environment i draws from
/// seed base_seed + i.
pub fn train_environments(
    base: &TrainConfig,
    tables: &[SpectrumTable],
    transforms: &GridTransforms,
    n_max: usize,
) -> Result<Vec<Vec<TrainResult>>> {
    tables
        .par_iter()
        .enumerate()
        .map(|(i, table)| {
            let config = TrainConfig {
                seed: base.seed.wrapping_add(i as u64),
                ..base.clone()
            };
            train_ladder(&config, table, transforms, n_max)
                .with_context(|| format!("training environment {i}"))
        })
        .collect()
}

/// Oracle ladder per environment: exhaustive per length when it fits the
/// limit, otherwise the incremental trace.
pub fn oracle_environments(
    tables: &[SpectrumTable],
    transforms: &GridTransforms,
    n_max: usize,
    exhaustive: bool,
    depth: usize,
    limit: Option<usize>,
) -> Result<Vec<Vec<OracleResult>>> {
    let limit = limit.unwrap_or(DEFAULT_EXHAUSTIVE_LIMIT);
    tables
        .par_iter()
        .enumerate()
        .map(|(i, table)| {
            let trace = if exhaustive {
                (1..=n_max)
                    .map(|n| oracle_exhaustive(table, transforms, n, limit))
                    .collect::<Result<Vec<_>, _>>()
            } else {
                oracle_incremental_trace(table, transforms, n_max, depth)
            };
            trace.with_context(|| format!("oracle for environment {i}"))
        })
        .collect()
}

/// Evaluate one fixed sequence against every environment.
pub fn evaluate_fixed(
    transforms: &GridTransforms,
    tables: &[SpectrumTable],
    sequence: &DdSequence,
) -> Vec<CoherenceResult> {
    tables
        .par_iter()
        .map(|table| coherence_of(transforms, table, sequence.actions()))
        .collect()
}

/// |Y(ω_s, T)| of a sequence, through the scalar cached path.
pub fn y_magnitude(
    sequence: &DdSequence,
    omega_s: f64,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> f64 {
    ddtune_core::spectral::sequence_fourier(sequence, omega_s, cache, quad).norm()
}
