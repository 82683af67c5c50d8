//! Brute-force reference optimizers.
//!
//! Exhaustive mode enumerates all 4^N action lists; incremental mode commits
//! one segment per step after evaluating every depth-d extension of the
//! current prefix. Exhaustive search is the true upper bound used to
//! normalize learned-sequence coherence; incremental keeps that role
//! computable for long sequences.

use alloc::vec::Vec;

use crate::coherence::SpectrumTable;
use crate::error::Error;
use crate::sequence::{DdSequence, SegmentKind};
use crate::spectral::{GridTransforms, TransformAccumulator};

/// Default exhaustive-mode segment limit (4^8 = 65536 evaluations).
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 8;

/// Default lookahead depth for incremental mode.
pub const DEFAULT_INCREMENTAL_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Exhaustive,
    /// Lookahead depth for the one-segment-per-step extension search.
    Incremental { depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_sequence: DdSequence,
    pub best_coherence: f64,
    pub evaluated_count: u64,
    pub mode: OracleMode,
}

fn decode_lex(code: u64, len: usize) -> Vec<SegmentKind> {
    // most-significant digit first: ascending code is lexicographic order
    (0..len)
        .map(|i| {
            let shift = 2 * (len - 1 - i);
            SegmentKind::from_code(((code >> shift) & 0b11) as u8).expect("2-bit code")
        })
        .collect()
}

/// Evaluate every length-N sequence; ties keep the lexicographically
/// smallest action list.
pub fn oracle_exhaustive(
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    n_segments: usize,
    limit: usize,
) -> Result<OracleResult, Error> {
    if n_segments == 0 {
        return Err(Error::invalid("n_segments", "must be >= 1"));
    }
    if n_segments > limit {
        return Err(Error::OracleLimit { n: n_segments, limit });
    }
    let total = 1u64 << (2 * n_segments);
    let mut best_w = f64::NEG_INFINITY;
    let mut best_actions = Vec::new();
    for code in 0..total {
        let actions = decode_lex(code, n_segments);
        let w = spectrum.coherence_of(transforms, &actions);
        if w > best_w {
            best_w = w;
            best_actions = actions;
        }
    }
    Ok(OracleResult {
        best_sequence: DdSequence::new(
            best_actions,
            transforms.delta_t(),
            transforms.pulses_per_segment(),
        )?,
        best_coherence: best_w,
        evaluated_count: total,
        mode: OracleMode::Exhaustive,
    })
}

/// Greedy prefix extension with depth-d lookahead, reporting every step.
///
/// At step k the current best prefix is extended by every action list of
/// length min(d, N−k); the full extended prefix is scored as a complete
/// sequence at its own total time, and only the first segment of the best
/// extension is committed. Ties keep the lexicographically smallest
/// extension. Entry k of the trace is the committed length-(k+1) prefix with
/// its own coherence and the cumulative evaluation count.
pub fn oracle_incremental_trace(
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    n_segments: usize,
    depth: usize,
) -> Result<Vec<OracleResult>, Error> {
    if n_segments == 0 {
        return Err(Error::invalid("n_segments", "must be >= 1"));
    }
    if depth == 0 {
        return Err(Error::invalid("depth", "must be >= 1"));
    }
    let mut prefix_acc = TransformAccumulator::new(transforms);
    let mut prefix: Vec<SegmentKind> = Vec::with_capacity(n_segments);
    let mut evaluated = 0u64;
    let mut trace = Vec::with_capacity(n_segments);

    for step in 0..n_segments {
        let d = depth.min(n_segments - step);
        let n_ext = 1u64 << (2 * d);
        let mut best_w = f64::NEG_INFINITY;
        let mut best_ext: Option<Vec<SegmentKind>> = None;
        for code in 0..n_ext {
            let ext = decode_lex(code, d);
            let mut acc = TransformAccumulator::new(transforms);
            acc.restore_state(prefix_acc.clone_state());
            for &kind in &ext {
                acc.push(kind);
            }
            let w = libm::exp(-spectrum.chi_from_accumulator(&acc));
            evaluated += 1;
            if w > best_w {
                best_w = w;
                best_ext = Some(ext);
            }
        }
        let first = best_ext.expect("non-empty extension set")[0];
        prefix.push(first);
        prefix_acc.push(first);
        let prefix_w = if d == 1 {
            best_w
        } else {
            // committed only one segment of a deeper extension; score the
            // actual prefix at its own length
            libm::exp(-spectrum.chi_from_accumulator(&prefix_acc))
        };
        trace.push(OracleResult {
            best_sequence: DdSequence::new(
                prefix.clone(),
                transforms.delta_t(),
                transforms.pulses_per_segment(),
            )?,
            best_coherence: prefix_w,
            evaluated_count: evaluated,
            mode: OracleMode::Incremental { depth },
        });
    }
    Ok(trace)
}

/// Final result of [`oracle_incremental_trace`].
pub fn oracle_incremental(
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    n_segments: usize,
    depth: usize,
) -> Result<OracleResult, Error> {
    Ok(oracle_incremental_trace(spectrum, transforms, n_segments, depth)?
        .pop()
        .expect("non-empty trace"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GaussianNsd;
    use crate::spectral::{FrequencyGrid, QuadratureConfig, TransformCache};

    fn setup(n: usize) -> (SpectrumTable, GridTransforms) {
        let grid = FrequencyGrid::new(0.001, 8.5, 400).unwrap();
        let quad = QuadratureConfig::new(400);
        let nsd = GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap();
        let table = SpectrumTable::new(&nsd, grid).unwrap();
        let mut cache = TransformCache::new();
        let gt = GridTransforms::build(grid, 4.0, 4, n, &mut cache, &quad);
        (table, gt)
    }

    #[test]
    fn n1_maximizes_over_four_segments() {
        let (table, gt) = setup(1);
        let result = oracle_exhaustive(&table, &gt, 1, 8).unwrap();
        assert_eq!(result.evaluated_count, 4);
        let best = SegmentKind::ALL
            .iter()
            .map(|&k| (table.coherence_of(&gt, &[k]), k))
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        assert_eq!(result.best_sequence.actions(), &[best.1]);
        assert_eq!(result.best_coherence, best.0);
    }

    #[test]
    fn exhaustive_dominates_pure_sequences() {
        let (table, gt) = setup(2);
        let result = oracle_exhaustive(&table, &gt, 2, 8).unwrap();
        assert_eq!(result.evaluated_count, 16);
        for kind in SegmentKind::ALL {
            let w = table.coherence_of(&gt, &[kind, kind]);
            assert!(result.best_coherence >= w);
        }
    }

    #[test]
    fn exhaustive_limit_guard() {
        let (table, gt) = setup(2);
        let err = oracle_exhaustive(&table, &gt, 9, 8).unwrap_err();
        assert!(matches!(err, Error::OracleLimit { n: 9, limit: 8 }));
    }

    #[test]
    fn incremental_full_depth_equals_exhaustive() {
        let (table, gt) = setup(3);
        let ex = oracle_exhaustive(&table, &gt, 3, 8).unwrap();
        let inc = oracle_incremental(&table, &gt, 3, 3).unwrap();
        assert_eq!(inc.best_sequence.actions(), ex.best_sequence.actions());
        assert_eq!(inc.best_coherence, ex.best_coherence);
    }

    #[test]
    fn shallow_incremental_no_better_than_exhaustive() {
        let (table, gt) = setup(2);
        let ex = oracle_exhaustive(&table, &gt, 2, 8).unwrap();
        let inc = oracle_incremental(&table, &gt, 2, 1).unwrap();
        assert!(inc.best_coherence <= ex.best_coherence + 1e-15);
    }

    #[test]
    fn incremental_evaluation_count() {
        let (table, gt) = setup(6);
        let inc = oracle_incremental(&table, &gt, 6, 2).unwrap();
        // steps 0..4 evaluate 16 depth-2 extensions, last step 4: 5*16 + 4
        assert_eq!(inc.evaluated_count, 5 * 16 + 4);
        assert_eq!(inc.best_sequence.len(), 6);
    }

    #[test]
    fn exhaustive_beats_random_sample() {
        use crate::rng;
        let (table, gt) = setup(4);
        let result = oracle_exhaustive(&table, &gt, 4, 8).unwrap();
        let mut rng = rng::seeded(31);
        for _ in 0..500 {
            let actions: alloc::vec::Vec<SegmentKind> = (0..4)
                .map(|_| SegmentKind::from_code(rng::uniform_action(&mut rng)).unwrap())
                .collect();
            assert!(table.coherence_of(&gt, &actions) <= result.best_coherence);
        }
    }
}
