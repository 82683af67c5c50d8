//! Property tests over sequence composition and analysis helpers.

use ddtune_core::analysis::{coherence_cdf, subsequence_proportions, CoherenceRecord};
use ddtune_core::spectral::{
    sequence_fourier, trapezoid_phase_integral, Complex64, QuadratureConfig, TransformCache,
};
use ddtune_core::{DdSequence, Segment, SegmentKind};
use proptest::prelude::*;

fn kind_strategy() -> impl Strategy<Value = SegmentKind> {
    (0u8..4).prop_map(|c| SegmentKind::from_code(c).unwrap())
}

fn reference_whole_interval(seq: &DdSequence, omega: f64, quad: &QuadratureConfig) -> Complex64 {
    let pulses = seq.all_pulse_times();
    let mut cuts: Vec<f64> = pulses.clone();
    for k in 1..seq.len() {
        cuts.push(k as f64 * seq.delta_t());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut bounds = vec![0.0];
    bounds.extend(cuts);
    bounds.push(seq.total_time());
    let mut sum = Complex64::new(0.0, 0.0);
    for w in bounds.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let sign = if pulses.iter().filter(|&&p| p <= mid).count() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        sum += sign * trapezoid_phase_integral(w[0], w[1], omega, quad.intervals_for(w[1] - w[0]));
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn piecewise_composition_holds_for_any_config(
        actions in proptest::collection::vec(kind_strategy(), 1..6),
        pulses in 1u32..6,
        delta_t in prop::sample::select(vec![2.0f64, 4.0, 5.0]),
        omega in 0.05f64..9.0,
    ) {
        let quad = QuadratureConfig::new(200);
        let seq = DdSequence::new(actions, delta_t, pulses).unwrap();
        let mut cache = TransformCache::new();
        let piecewise = sequence_fourier(&seq, omega, &mut cache, &quad);
        let reference = reference_whole_interval(&seq, omega, &quad);
        let rel = (piecewise - reference).norm() / reference.norm().max(1e-12);
        prop_assert!(rel < 1e-9, "rel {}", rel);
    }

    #[test]
    fn udd_times_symmetric_for_any_pulse_count(n in 1u32..12) {
        let seg = Segment::new(SegmentKind::Udd, n, 0.0, 4.0).unwrap();
        let times = seg.pulse_times();
        for (j, t) in times.iter().enumerate() {
            let mirror = times[times.len() - 1 - j];
            prop_assert!((t + mirror - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn proportions_sum_to_one(
        batches in proptest::collection::vec(
            proptest::collection::vec(kind_strategy(), 1..12), 1..8)
    ) {
        let seqs: Vec<DdSequence> = batches
            .into_iter()
            .map(|a| DdSequence::with_defaults(a).unwrap())
            .collect();
        let fractions = subsequence_proportions(&seqs).unwrap();
        prop_assert!((fractions.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_nondecreasing_and_ends_at_one(ws in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
        let records: Vec<CoherenceRecord> = ws
            .iter()
            .enumerate()
            .map(|(i, &w)| CoherenceRecord { env_id: i as u64, t: 4.0, w })
            .collect();
        let cdf = coherence_cdf(&records, 4.0).unwrap();
        for pair in cdf.windows(2) {
            prop_assert!(pair[0].0 <= pair[1].0);
            prop_assert!(pair[0].1 <= pair[1].1);
        }
        prop_assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn modulation_starts_positive_and_is_piecewise_constant(
        actions in proptest::collection::vec(kind_strategy(), 1..5),
    ) {
        let seq = DdSequence::with_defaults(actions).unwrap();
        prop_assert_eq!(seq.modulation_value(0.0).unwrap(), 1);
        let total_pulses = seq.all_pulse_times().len();
        let mut changes = 0;
        let mut prev = 1;
        let steps = 4000 * seq.len();
        for i in 1..=steps {
            let t = seq.total_time() * i as f64 / steps as f64;
            let v = seq.modulation_value(t).unwrap();
            if v != prev {
                changes += 1;
            }
            prev = v;
        }
        prop_assert_eq!(changes, total_pulses);
    }
}
