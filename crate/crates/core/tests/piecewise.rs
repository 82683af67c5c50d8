//! Piecewise-composition invariants checked against an independent
//! whole-interval quadrature of the modulation function.
//!
//! The reference path splits [0, T] at every pulse time and segment boundary,
//! derives each piece's sign by counting pulses at or before its midpoint
//! (no entry-parity bookkeeping), and integrates with the same node-density
//! rule. Agreement then pins down the engine's segment composition and
//! parity handling.

use ddtune_core::rng::{self, RngCore};
use ddtune_core::spectral::{
    segment_transform_quadrature, sequence_fourier, trapezoid_phase_integral, Complex64,
    QuadratureConfig, TransformCache,
};
use ddtune_core::{DdSequence, SegmentKind};

fn random_sequence(rng: &mut rng::ChaCha8Rng, max_len: usize) -> DdSequence {
    let len = 1 + (rng.next_u64() as usize) % max_len;
    let actions = (0..len)
        .map(|_| SegmentKind::from_code(rng::uniform_action(rng)).unwrap())
        .collect();
    DdSequence::with_defaults(actions).unwrap()
}

fn reference_whole_interval(
    sequence: &DdSequence,
    omega: f64,
    quad: &QuadratureConfig,
) -> Complex64 {
    let total = sequence.total_time();
    let pulses = sequence.all_pulse_times();
    let mut cuts: Vec<f64> = pulses.clone();
    for k in 1..sequence.len() {
        cuts.push(k as f64 * sequence.delta_t());
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut boundaries = Vec::with_capacity(cuts.len() + 2);
    boundaries.push(0.0);
    boundaries.extend(cuts);
    boundaries.push(total);

    let mut sum = Complex64::new(0.0, 0.0);
    for pair in boundaries.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (a + b);
        let flips = pulses.iter().filter(|&&p| p <= mid).count();
        let sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
        let n = quad.intervals_for(b - a);
        sum += sign * trapezoid_phase_integral(a, b, omega, n);
    }
    sum
}

#[test]
fn piecewise_sum_matches_whole_interval_quadrature() {
    let quad = QuadratureConfig::default();
    let mut cache = TransformCache::new();
    let mut rng = rng::seeded(0x5eed);

    let omegas: Vec<f64> = (0..50)
        .map(|_| rng::uniform_in(&mut rng, 0.01, 10.0))
        .collect();

    for case in 0..200 {
        let sequence = random_sequence(&mut rng, 10);
        for &omega in &omegas {
            let piecewise = sequence_fourier(&sequence, omega, &mut cache, &quad);
            let reference = reference_whole_interval(&sequence, omega, &quad);
            let denom = reference.norm().max(1e-12);
            let rel = (piecewise - reference).norm() / denom;
            assert!(
                rel < 1e-9,
                "case {case} omega {omega}: rel {rel} ({} segments: {})",
                sequence.len(),
                sequence.display_names()
            );
        }
    }
}

#[test]
fn modulation_end_sign_matches_total_pulse_parity() {
    let mut rng = rng::seeded(77);
    for _ in 0..100 {
        let sequence = random_sequence(&mut rng, 8);
        let total_pulses = sequence.all_pulse_times().len();
        let expect = if total_pulses % 2 == 0 { 1 } else { -1 };
        assert_eq!(
            sequence.modulation_value(sequence.total_time()).unwrap(),
            expect
        );
    }
}

#[test]
fn cached_results_equal_direct_quadrature_bitwise() {
    // cache-on vs cache-off over a batch: a shared evolving cache must not
    // change any bit of any transform
    let quad = QuadratureConfig::new(400);
    let mut shared = TransformCache::new();
    let mut rng = rng::seeded(1234);
    let omegas: Vec<f64> = (0..8).map(|_| rng::uniform_in(&mut rng, 0.05, 9.0)).collect();

    for _ in 0..50 {
        let sequence = random_sequence(&mut rng, 6);
        for &omega in &omegas {
            let cached = sequence_fourier(&sequence, omega, &mut shared, &quad);
            let parities = sequence.entry_parities();
            let mut direct = Complex64::new(0.0, 0.0);
            for (segment, parity) in sequence.segments().iter().zip(parities) {
                direct += parity as f64 * segment_transform_quadrature(segment, omega, &quad);
            }
            assert_eq!(cached.re.to_bits(), direct.re.to_bits());
            assert_eq!(cached.im.to_bits(), direct.im.to_bits());
        }
    }
    assert!(shared.hits() > 0, "batch should revisit cached keys");
}
