//! Post-hoc summaries of learned sequences: composition, autocorrelation,
//! Oracle-normalized coherence, and empirical coherence CDFs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::sequence::{DdSequence, SegmentKind};

/// Per-kind segment fractions indexed by segment code. Sums to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindFractions(pub [f64; 4]);

impl KindFractions {
    pub fn of(&self, kind: SegmentKind) -> f64 {
        self.0[kind.code() as usize]
    }
}

/// Fraction of segments of each kind, averaged with equal weight per
/// sequence.
pub fn subsequence_proportions(sequences: &[DdSequence]) -> Result<KindFractions, Error> {
    if sequences.is_empty() {
        return Err(Error::invalid("sequences", "must be non-empty"));
    }
    let mut totals = [0.0f64; 4];
    for seq in sequences {
        let mut counts = [0usize; 4];
        for kind in seq.actions() {
            counts[kind.code() as usize] += 1;
        }
        let len = seq.len() as f64;
        for (t, &c) in totals.iter_mut().zip(&counts) {
            *t += c as f64 / len;
        }
    }
    let n = sequences.len() as f64;
    for t in &mut totals {
        *t /= n;
    }
    Ok(KindFractions(totals))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / libm::sqrt(sxx * syy))
    }
}

/// Mean Pearson correlation between action codes at positions p and p+k, per
/// lag k = 0..=max_lag, averaged over sequences.
///
/// Zero-variance series (constant sequences, or constant once shifted)
/// contribute 0 at lags >= 1; Pearson is undefined there.
pub fn sequence_autocorrelation(
    sequences: &[DdSequence],
    max_lag: usize,
) -> Result<Vec<f64>, Error> {
    if sequences.is_empty() {
        return Err(Error::invalid("sequences", "must be non-empty"));
    }
    for seq in sequences {
        if seq.len() <= max_lag {
            return Err(Error::invalid(
                "max_lag",
                "sequences must be longer than the maximum lag",
            ));
        }
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut sum = 0.0;
        for seq in sequences {
            let codes: Vec<f64> = seq.actions().iter().map(|k| k.code() as f64).collect();
            let a = &codes[..codes.len() - lag];
            let b = &codes[lag..];
            sum += pearson(a, b).unwrap_or(if lag == 0 { 1.0 } else { 0.0 });
        }
        out.push(sum / sequences.len() as f64);
    }
    Ok(out)
}

/// One coherence measurement keyed by (environment, total time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceRecord {
    pub env_id: u64,
    /// Total evolution time, µs.
    pub t: f64,
    pub w: f64,
}

fn t_key(t: f64) -> i64 {
    libm::round(t * 1e9) as i64
}

/// Mean strategy coherence divided by mean Oracle coherence, per T.
///
/// Every (env, T) key present in `results` must have an Oracle counterpart;
/// missing keys are reported in the error.
pub fn normalized_coherence(
    results: &[CoherenceRecord],
    oracle_results: &[CoherenceRecord],
) -> Result<Vec<(f64, f64)>, Error> {
    use alloc::collections::BTreeMap;

    let mut oracle: BTreeMap<(u64, i64), f64> = BTreeMap::new();
    for r in oracle_results {
        oracle.insert((r.env_id, t_key(r.t)), r.w);
    }
    let mut missing = String::new();
    for r in results {
        if !oracle.contains_key(&(r.env_id, t_key(r.t))) {
            if !missing.is_empty() {
                missing.push_str(", ");
            }
            missing.push_str(&alloc::format!("(env {}, T {})", r.env_id, r.t));
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingKeys { missing });
    }

    let mut per_t: BTreeMap<i64, (f64, f64, f64, usize)> = BTreeMap::new();
    for r in results {
        let key = t_key(r.t);
        let oracle_w = oracle[&(r.env_id, key)];
        let entry = per_t.entry(key).or_insert((r.t, 0.0, 0.0, 0));
        entry.1 += r.w;
        entry.2 += oracle_w;
        entry.3 += 1;
    }
    Ok(per_t
        .into_values()
        .map(|(t, w_sum, o_sum, _)| (t, w_sum / o_sum))
        .collect())
}

/// Sorted (coherence, cumulative fraction) pairs for all records at time T.
pub fn coherence_cdf(results: &[CoherenceRecord], t: f64) -> Result<Vec<(f64, f64)>, Error> {
    let mut values: Vec<f64> = results
        .iter()
        .filter(|r| t_key(r.t) == t_key(t))
        .map(|r| r.w)
        .collect();
    if values.is_empty() {
        return Err(Error::invalid("results", "no records at the requested T"));
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = values.len() as f64;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, (i + 1) as f64 / n))
        .collect())
}
