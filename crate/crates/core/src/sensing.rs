//! Relative AC-magnetometry sensitivity.
//!
//! For a sensing target at angular frequency ω_s the relative metric is
//! M(T, ω_s) = √T / (W(T) · |Y(ω_s, T)|); lower is better. Constant
//! prefactors of the underlying shot-noise sensitivity are dropped, so M
//! compares sequences rather than reporting field units.

use alloc::string::String;
use alloc::vec::Vec;

use crate::coherence::coherence;
use crate::error::Error;
use crate::noise::NoiseSpectrum;
use crate::sequence::DdSequence;
use crate::spectral::{sequence_fourier, FrequencyGrid, QuadratureConfig, TransformCache};

/// Magnitudes below this floor count as no response at ω_s.
pub const DEFAULT_Y_MAG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    /// √T / (w · y_mag); lower is better.
    pub metric_m: f64,
    /// Total evolution time, µs.
    pub t: f64,
    /// Target angular frequency, rad/µs.
    pub omega_s: f64,
    /// Coherence W(T).
    pub w: f64,
    /// |Y(ω_s, T)|, µs.
    pub y_mag: f64,
}

/// M(T, ω_s) for one sequence under one spectrum.
///
/// Fails with [`Error::FilterBlind`] when |Y(ω_s, T)| is below `y_mag_floor`:
/// the sequence has no usable response at the target frequency.
pub fn sensitivity_metric(
    sequence: &DdSequence,
    nsd: &impl NoiseSpectrum,
    omega_s: f64,
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
    y_mag_floor: f64,
) -> Result<SensitivityResult, Error> {
    if !(omega_s > 0.0) {
        return Err(Error::domain("sensitivity_metric", "omega_s must be > 0"));
    }
    let res = coherence(sequence, nsd, grid, cache, quad)?;
    let y_mag = sequence_fourier(sequence, omega_s, cache, quad).norm();
    if y_mag < y_mag_floor {
        return Err(Error::FilterBlind { y_mag, floor: y_mag_floor });
    }
    let t = sequence.total_time();
    Ok(SensitivityResult {
        metric_m: libm::sqrt(t) / (res.w * y_mag),
        t,
        omega_s,
        w: res.w,
        y_mag,
    })
}

/// One strategy's cross-environment aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub name: String,
    /// Geometric mean of M across environments (M spans decades).
    pub geo_mean_m: f64,
    pub arith_mean_m: f64,
    /// geo_mean_m divided by the best strategy's geo_mean_m (best = 1.0).
    pub ratio_to_best: f64,
    /// Per-environment results in input environment order.
    pub per_env: Vec<SensitivityResult>,
}

/// Evaluate named strategies across environments and rank by geometric-mean
/// M. Row order follows the input strategy order.
pub fn compare_strategies<N: NoiseSpectrum>(
    strategies: &[(String, DdSequence)],
    environments: &[N],
    omega_s: f64,
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
    y_mag_floor: f64,
) -> Result<Vec<StrategyRow>, Error> {
    if strategies.is_empty() {
        return Err(Error::invalid("strategies", "must be non-empty"));
    }
    if environments.is_empty() {
        return Err(Error::invalid("environments", "must be non-empty"));
    }
    let mut rows = Vec::with_capacity(strategies.len());
    for (name, sequence) in strategies {
        let mut per_env = Vec::with_capacity(environments.len());
        let mut log_sum = 0.0;
        let mut sum = 0.0;
        for nsd in environments {
            let r = sensitivity_metric(sequence, nsd, omega_s, grid, cache, quad, y_mag_floor)?;
            log_sum += libm::log(r.metric_m);
            sum += r.metric_m;
            per_env.push(r);
        }
        let n = environments.len() as f64;
        rows.push(StrategyRow {
            name: name.clone(),
            geo_mean_m: libm::exp(log_sum / n),
            arith_mean_m: sum / n,
            ratio_to_best: f64::NAN,
            per_env,
        });
    }
    let best = rows
        .iter()
        .map(|r| r.geo_mean_m)
        .fold(f64::INFINITY, libm::fmin);
    for row in &mut rows {
        row.ratio_to_best = row.geo_mean_m / best;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GaussianNsd;
    use crate::sequence::SegmentKind;
    use alloc::string::ToString;
    use alloc::vec;

    struct ZeroNsd;

    impl NoiseSpectrum for ZeroNsd {
        fn evaluate(&self, _omega: f64) -> Result<f64, Error> {
            Ok(0.0)
        }
    }

    #[test]
    fn metric_matches_definition_algebra() {
        // Zero noise gives w = 1 exactly; pick ω_s where a Hahn train
        // responds and check M = sqrt(T)/(w*y_mag) from the raw parts.
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 128).unwrap();
        let mut cache = TransformCache::new();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Hahn; 2]).unwrap();
        let omega_s = 0.9;
        let r = sensitivity_metric(
            &seq, &ZeroNsd, omega_s, &grid, &mut cache, &quad, DEFAULT_Y_MAG_FLOOR,
        )
        .unwrap();
        assert_eq!(r.w, 1.0);
        assert_eq!(r.metric_m, libm::sqrt(8.0) / r.y_mag);
        assert!(r.metric_m > 0.0);
    }

    #[test]
    fn doubling_time_scales_m_by_sqrt2_when_parts_fixed() {
        // pure definitional scaling: M(2T)/M(T) = sqrt(2) with w, y_mag held
        let m = |t: f64, w: f64, y: f64| libm::sqrt(t) / (w * y);
        let ratio = m(16.0, 0.8, 2.5) / m(8.0, 0.8, 2.5);
        assert!((ratio - libm::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn filter_blind_below_floor() {
        // a 4 µs CPMG-4 train has an exact null at ω_s = 2π (τ = 1 µs)
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 128).unwrap();
        let mut cache = TransformCache::new();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Cpmg; 2]).unwrap();
        let err = sensitivity_metric(
            &seq,
            &ZeroNsd,
            2.0 * core::f64::consts::PI,
            &grid,
            &mut cache,
            &quad,
            DEFAULT_Y_MAG_FLOOR,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FilterBlind { .. }));
    }

    #[test]
    fn y_mag_independent_of_nsd() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 128).unwrap();
        let mut cache = TransformCache::new();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Udd; 2]).unwrap();
        let omega_s = 1.0;
        let quiet = GaussianNsd::new(0.001, 0.1, 3.5, 0.006).unwrap();
        let loud = GaussianNsd::new(0.008, 0.7, 3.5, 0.006).unwrap();
        let a = sensitivity_metric(&seq, &quiet, omega_s, &grid, &mut cache, &quad, 1e-12).unwrap();
        let b = sensitivity_metric(&seq, &loud, omega_s, &grid, &mut cache, &quad, 1e-12).unwrap();
        assert_eq!(a.y_mag, b.y_mag);
        assert!(a.w > b.w);
        assert!(a.metric_m < b.metric_m);
    }

    #[test]
    fn single_strategy_ratio_is_one() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 128).unwrap();
        let mut cache = TransformCache::new();
        let envs = [GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap()];
        let strategies = vec![(
            "hahn".to_string(),
            DdSequence::with_defaults(vec![SegmentKind::Hahn; 2]).unwrap(),
        )];
        let rows =
            compare_strategies(&strategies, &envs, 0.9, &grid, &mut cache, &quad, 1e-12).unwrap();
        assert_eq!(rows[0].ratio_to_best, 1.0);
    }

    #[test]
    fn identical_strategies_identical_rows() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 128).unwrap();
        let mut cache = TransformCache::new();
        let envs = [
            GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap(),
            GaussianNsd::new(0.003, 0.4, 3.6, 0.008).unwrap(),
        ];
        let seq = DdSequence::with_defaults(vec![SegmentKind::Udd, SegmentKind::Hahn]).unwrap();
        let strategies = vec![("a".to_string(), seq.clone()), ("b".to_string(), seq)];
        let rows =
            compare_strategies(&strategies, &envs, 0.9, &grid, &mut cache, &quad, 1e-12).unwrap();
        assert_eq!(rows[0].geo_mean_m, rows[1].geo_mean_m);
        assert_eq!(rows[0].ratio_to_best, 1.0);
        assert_eq!(rows[1].ratio_to_best, 1.0);
    }
}
