//! Decoherence function χ(T) and coherence W(T) = exp(−χ).
//!
//! χ is the overlap integral (1/π) ∫ S(ω)/ω² · F(ω, T) dω over the frequency
//! grid, evaluated by the trapezoid rule. The grid's positive lower cutoff
//! keeps the 1/ω² weight finite.

use alloc::vec::Vec;

use crate::error::Error;
use crate::noise::NoiseSpectrum;
use crate::sequence::DdSequence;
use crate::spectral::{
    filter_function, FrequencyGrid, GridTransforms, QuadratureConfig, TransformAccumulator,
    TransformCache,
};

/// S(ω)/ω² pre-evaluated on a grid, reusable across many sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    grid: FrequencyGrid,
    s_over_w2: Vec<f64>,
}

impl SpectrumTable {
    pub fn new(nsd: &impl NoiseSpectrum, grid: FrequencyGrid) -> Result<Self, Error> {
        let s_over_w2 = grid
            .points()
            .map(|omega| nsd.evaluate(omega).map(|s| s / (omega * omega)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { grid, s_over_w2 })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn s_over_w2(&self) -> &[f64] {
        &self.s_over_w2
    }

    /// χ from a filter sampled on the same grid.
    pub fn chi_from_filter(&self, filter: &[f64]) -> f64 {
        debug_assert_eq!(filter.len(), self.s_over_w2.len());
        let h = self.grid.spacing();
        let n = filter.len();
        let mut sum = 0.5 * (self.s_over_w2[0] * filter[0] + self.s_over_w2[n - 1] * filter[n - 1]);
        for i in 1..n - 1 {
            sum += self.s_over_w2[i] * filter[i];
        }
        sum * h / core::f64::consts::PI
    }

    /// χ directly from an accumulated sequence transform.
    pub fn chi_from_accumulator(&self, acc: &TransformAccumulator<'_>) -> f64 {
        let y = acc.transform();
        debug_assert_eq!(y.len(), self.s_over_w2.len());
        let h = self.grid.spacing();
        let n = y.len();
        let mut sum = 0.5
            * (self.s_over_w2[0] * y[0].norm_sqr() + self.s_over_w2[n - 1] * y[n - 1].norm_sqr());
        for i in 1..n - 1 {
            sum += self.s_over_w2[i] * y[i].norm_sqr();
        }
        sum * h / core::f64::consts::PI
    }

    /// Coherence of an action list through materialized grid transforms.
    pub fn coherence_of(&self, transforms: &GridTransforms, actions: &[crate::SegmentKind]) -> f64 {
        let mut acc = TransformAccumulator::new(transforms);
        for &kind in actions {
            acc.push(kind);
        }
        libm::exp(-self.chi_from_accumulator(&acc))
    }
}

/// χ(T) and W(T) for one (sequence, spectrum) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceResult {
    pub chi: f64,
    pub w: f64,
    /// Total evolution time, µs.
    pub total_time: f64,
    pub sequence_id: Option<u64>,
    pub nsd_id: Option<u64>,
}

/// χ(T) = (1/π) ∫ S(ω)/ω² F(ω, T) dω over the grid.
pub fn decoherence_chi(
    sequence: &DdSequence,
    nsd: &impl NoiseSpectrum,
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Result<f64, Error> {
    let table = SpectrumTable::new(nsd, *grid)?;
    let filter = filter_function(sequence, grid, cache, quad);
    Ok(table.chi_from_filter(&filter))
}

/// W(T) = exp(−χ(T)), with χ attached.
pub fn coherence(
    sequence: &DdSequence,
    nsd: &impl NoiseSpectrum,
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Result<CoherenceResult, Error> {
    let chi = decoherence_chi(sequence, nsd, grid, cache, quad)?;
    Ok(CoherenceResult {
        chi,
        w: libm::exp(-chi),
        total_time: sequence.total_time(),
        sequence_id: None,
        nsd_id: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::GaussianNsd;
    use crate::sequence::SegmentKind;
    use alloc::vec;

    struct ConstantNsd(f64);

    impl NoiseSpectrum for ConstantNsd {
        fn evaluate(&self, _omega: f64) -> Result<f64, Error> {
            Ok(self.0)
        }
    }

    #[test]
    fn zero_noise_gives_unit_coherence() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::default();
        let mut cache = TransformCache::new();
        for kind in SegmentKind::ALL {
            let seq = DdSequence::with_defaults(vec![kind; 3]).unwrap();
            let res = coherence(&seq, &ConstantNsd(0.0), &grid, &mut cache, &quad).unwrap();
            assert_eq!(res.chi, 0.0);
            assert_eq!(res.w, 1.0);
        }
    }

    #[test]
    fn chi_scales_linearly_with_noise_amplitude() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 512).unwrap();
        let mut cache = TransformCache::new();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Cpmg, SegmentKind::Hahn]).unwrap();
        let chi1 = decoherence_chi(&seq, &ConstantNsd(0.01), &grid, &mut cache, &quad).unwrap();
        let chi3 = decoherence_chi(&seq, &ConstantNsd(0.03), &grid, &mut cache, &quad).unwrap();
        assert!((chi3 - 3.0 * chi1).abs() < 1e-12 * chi1.abs().max(1.0));
        assert!(chi1 > 0.0);
    }

    #[test]
    fn all_fid_chi_matches_analytic_filter_oracle() {
        // With S ≡ c the closed-form filter gives
        // χ = (c/π) ∫ 4 sin²(ωT/2)/ω² · (1/ω²) dω over the truncated grid.
        // Evaluating the oracle on the same ω samples isolates the
        // time-domain quadrature error of the engine's filter.
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::default();
        let mut cache = TransformCache::new();
        let c = 0.004;
        let t_total = 8.0;
        let seq = DdSequence::with_defaults(vec![SegmentKind::Fid; 2]).unwrap();
        let engine = decoherence_chi(&seq, &ConstantNsd(c), &grid, &mut cache, &quad).unwrap();

        let values: Vec<f64> = grid
            .points()
            .map(|w| {
                let s = libm::sin(0.5 * w * t_total);
                c / (w * w) * 4.0 * s * s / (w * w)
            })
            .collect();
        let oracle = grid.trapezoid(&values) / core::f64::consts::PI;
        let rel = (engine - oracle).abs() / oracle;
        assert!(rel < 1e-6, "engine {engine} oracle {oracle} rel {rel}");
    }

    #[test]
    fn hahn_beats_fid_at_short_time() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::default();
        let mut cache = TransformCache::new();
        let nsd = GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap();
        let fid = DdSequence::with_defaults(vec![SegmentKind::Fid]).unwrap();
        let hahn = DdSequence::with_defaults(vec![SegmentKind::Hahn]).unwrap();
        let chi_fid = decoherence_chi(&fid, &nsd, &grid, &mut cache, &quad).unwrap();
        let chi_hahn = decoherence_chi(&hahn, &nsd, &grid, &mut cache, &quad).unwrap();
        assert!(chi_hahn < chi_fid, "hahn {chi_hahn} vs fid {chi_fid}");
    }

    #[test]
    fn exact_exponential_relation() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 256).unwrap();
        let mut cache = TransformCache::new();
        let nsd = GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Hahn; 2]).unwrap();
        let res = coherence(&seq, &nsd, &grid, &mut cache, &quad).unwrap();
        assert_eq!(res.w, libm::exp(-res.chi));
        assert!(res.w > 0.0 && res.w <= 1.0);
    }

    #[test]
    fn grid_refinement_stability() {
        let quad = QuadratureConfig::default();
        let mut cache = TransformCache::new();
        let nsd = GaussianNsd::new(0.005, 0.5, 3.55, 0.0065).unwrap();
        let seq = DdSequence::with_defaults(vec![SegmentKind::Cpmg; 5]).unwrap();
        let g1 = FrequencyGrid::new(0.001, 8.5, 4000).unwrap();
        let g2 = FrequencyGrid::new(0.001, 8.5, 8000).unwrap();
        let c1 = decoherence_chi(&seq, &nsd, &g1, &mut cache, &quad).unwrap();
        let c2 = decoherence_chi(&seq, &nsd, &g2, &mut cache, &quad).unwrap();
        assert!((c1 - c2).abs() / c2 < 1e-3, "c1 {c1} c2 {c2}");
    }

    #[test]
    fn table_paths_agree_with_direct_chi() {
        let quad = QuadratureConfig::default();
        let grid = FrequencyGrid::new(0.001, 8.5, 300).unwrap();
        let nsd = GaussianNsd::new(0.004, 0.4, 3.5, 0.006).unwrap();
        let seq = DdSequence::with_defaults(vec![
            SegmentKind::Udd,
            SegmentKind::Cpmg,
            SegmentKind::Hahn,
        ])
        .unwrap();

        let mut cache = TransformCache::new();
        let direct = decoherence_chi(&seq, &nsd, &grid, &mut cache, &quad).unwrap();

        let table = SpectrumTable::new(&nsd, grid).unwrap();
        let mut cache2 = TransformCache::new();
        let gt = GridTransforms::build(grid, 4.0, 4, 3, &mut cache2, &quad);
        let w = table.coherence_of(&gt, seq.actions());
        assert_eq!(w, libm::exp(-direct));
    }
}
