//! Segment and sequence Fourier transforms, filter functions, and the
//! memoization cache.
//!
//! The transform of one segment,
//!
//! ```text
//! Y_k(ω) = ∫ y_k(t) e^{-iωt} dt   over [t_start, t_end],
//! ```
//!
//! is evaluated by trapezoidal quadrature on each constant-sign piece between
//! π-pulse times (the integrand is smooth there, so the composite rule keeps
//! its full order; a plain trapezoid across a sign jump would degrade to
//! first order). The local modulation starts at +1; entry parity is applied
//! by the caller, which halves the key space.
//!
//! Results are memoized per (segment kind, pulse count, absolute interval,
//! frequency). Segment times are rounded to 9 decimal digits of a µs before
//! keying, and the integral is computed from the rounded interval, so a cache
//! value is always the bit-exact quadrature result for its own key.

use alloc::vec::Vec;
use core::hash::{BuildHasherDefault, Hasher};

pub use num_complex::Complex64;

use crate::error::Error;
use crate::sequence::{DdSequence, Segment, SegmentKind};

/// Reference duration (µs) against which quadrature node counts are quoted.
pub const REFERENCE_SEGMENT_US: f64 = 4.0;

/// Trapezoid node budget: `points_per_segment` intervals per 4 µs of
/// integrated length, scaled linearly so non-default segment durations keep
/// the same resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureConfig {
    pub points_per_segment: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { points_per_segment: 2000 }
    }
}

impl QuadratureConfig {
    pub fn new(points_per_segment: u32) -> Self {
        Self { points_per_segment }
    }

    /// Interval count for a piece of the given length (µs), at least 1.
    pub fn intervals_for(&self, length: f64) -> usize {
        let raw = length * self.points_per_segment as f64 / REFERENCE_SEGMENT_US;
        let n = libm::round(raw) as i64;
        n.max(1) as usize
    }
}

/// Uniform angular-frequency grid over [omega_min, omega_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
}

impl Default for FrequencyGrid {
    /// The evaluation window: [0.001, 8.5] rad/µs with 4000 points, dense
    /// enough to resolve peak widths down to w1 ≈ 0.004 rad/µs.
    fn default() -> Self {
        Self { omega_min: 0.001, omega_max: 8.5, n_points: 4000 }
    }
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self, Error> {
        if !(omega_min > 0.0) {
            return Err(Error::invalid("omega_min", "must be > 0"));
        }
        if !(omega_max > omega_min) {
            return Err(Error::invalid("omega_max", "must be > omega_min"));
        }
        if n_points < 2 {
            return Err(Error::invalid("n_points", "must be >= 2"));
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.omega_max - self.omega_min) / (self.n_points - 1) as f64
    }

    /// The i-th grid frequency.
    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        self.omega_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Trapezoid integral of `values` sampled on this grid.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n_points, "values must match grid length");
        let h = self.spacing();
        let interior: f64 = values[1..self.n_points - 1].iter().sum();
        h * (0.5 * (values[0] + values[self.n_points - 1]) + interior)
    }
}

const TIME_KEY_SCALE: f64 = 1e9;

/// Memoization key: segment type, pulse count, absolute interval (rounded to
/// 9 decimal µs digits), and frequency (exact bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformKey {
    pub kind: SegmentKind,
    pub n_pulses: u32,
    t_start_k: i64,
    t_end_k: i64,
    omega_bits: u64,
}

impl TransformKey {
    pub fn new(kind: SegmentKind, n_pulses: u32, t_start: f64, t_end: f64, omega: f64) -> Self {
        Self {
            kind,
            n_pulses,
            t_start_k: libm::round(t_start * TIME_KEY_SCALE) as i64,
            t_end_k: libm::round(t_end * TIME_KEY_SCALE) as i64,
            omega_bits: omega.to_bits(),
        }
    }

    pub fn from_segment(segment: &Segment, omega: f64) -> Self {
        Self::new(segment.kind, segment.n_pulses, segment.t_start, segment.t_end, omega)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start_k as f64 / TIME_KEY_SCALE
    }

    pub fn t_end(&self) -> f64 {
        self.t_end_k as f64 / TIME_KEY_SCALE
    }

    pub fn omega(&self) -> f64 {
        f64::from_bits(self.omega_bits)
    }

    /// The segment this key canonically denotes (times re-derived from the
    /// rounded representation).
    pub fn canonical_segment(&self) -> Segment {
        Segment {
            kind: self.kind,
            n_pulses: self.n_pulses,
            t_start: self.t_start(),
            t_end: self.t_end(),
        }
    }

    /// Raw fields for persistence: (kind code, n_pulses, t_start scaled,
    /// t_end scaled, omega bits).
    pub fn raw_parts(&self) -> (u8, u32, i64, i64, u64) {
        (self.kind.code(), self.n_pulses, self.t_start_k, self.t_end_k, self.omega_bits)
    }

    pub fn from_raw_parts(
        kind_code: u8,
        n_pulses: u32,
        t_start_k: i64,
        t_end_k: i64,
        omega_bits: u64,
    ) -> Result<Self, Error> {
        Ok(Self {
            kind: SegmentKind::from_code(kind_code)?,
            n_pulses,
            t_start_k,
            t_end_k,
            omega_bits,
        })
    }
}

/// Deterministic 64-bit mixing hasher for transform keys.
#[derive(Default)]
pub struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        let mut h = self.0;
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = (self.0 ^ x).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(23);
    }

    fn write_u8(&mut self, x: u8) {
        self.write_u64(x as u64);
    }

    fn write_u32(&mut self, x: u32) {
        self.write_u64(x as u64);
    }

    fn write_i64(&mut self, x: i64) {
        self.write_u64(x as u64);
    }

    fn write_usize(&mut self, x: usize) {
        self.write_u64(x as u64);
    }
}

type KeyMap = hashbrown::HashMap<TransformKey, Complex64, BuildHasherDefault<KeyHasher>>;

/// Memoized segment transforms with hit/miss accounting.
#[derive(Debug, Clone, Default)]
pub struct TransformCache {
    map: KeyMap,
    hits: u64,
    misses: u64,
}

impl TransformCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn reset_counters(&mut self) {
        self.hits = 0;
        self.misses = 0;
    }

    pub fn get(&self, key: &TransformKey) -> Option<Complex64> {
        self.map.get(key).copied()
    }

    pub fn insert(&mut self, key: TransformKey, value: Complex64) {
        self.map.insert(key, value);
    }

    /// Cached value for `key`, or `compute()` stored and returned.
    pub fn get_or_compute(
        &mut self,
        key: TransformKey,
        compute: impl FnOnce() -> Complex64,
    ) -> Complex64 {
        if let Some(v) = self.map.get(&key) {
            self.hits += 1;
            return *v;
        }
        self.misses += 1;
        let v = compute();
        self.map.insert(key, v);
        v
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TransformKey, &Complex64)> {
        self.map.iter()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (TransformKey, Complex64)>) -> Self {
        let mut cache = Self::new();
        for (k, v) in entries {
            cache.map.insert(k, v);
        }
        cache
    }
}

/// ∫ e^{-iωt} dt over [a, b] by the composite trapezoid rule with
/// `n_intervals` uniform steps.
///
/// The phase factor advances by multiplication with e^{-iωh}, resynchronized
/// from sin/cos every 256 steps to bound rounding drift.
pub fn trapezoid_phase_integral(a: f64, b: f64, omega: f64, n_intervals: usize) -> Complex64 {
    let h = (b - a) / n_intervals as f64;
    let (sh, ch) = libm::sincos(-omega * h);
    let step = Complex64::new(ch, sh);
    let (s0, c0) = libm::sincos(-omega * a);
    let mut f = Complex64::new(c0, s0);
    let mut sum = 0.5 * f;
    for j in 1..n_intervals {
        if j % 256 == 0 {
            let (s, c) = libm::sincos(-omega * (a + j as f64 * h));
            f = Complex64::new(c, s);
        } else {
            f *= step;
        }
        sum += f;
    }
    let (sb, cb) = libm::sincos(-omega * b);
    sum += 0.5 * Complex64::new(cb, sb);
    h * sum
}

/// Direct (uncached) quadrature of a segment transform with local +1 start.
///
/// The segment is split at its pulse times; each constant-sign piece is
/// integrated separately and node budgets follow [`QuadratureConfig`].
pub fn segment_transform_quadrature(
    segment: &Segment,
    omega: f64,
    quad: &QuadratureConfig,
) -> Complex64 {
    let pulses = segment.pulse_times();
    let mut total = Complex64::new(0.0, 0.0);
    let mut sign = 1.0;
    let mut lo = segment.t_start;
    for hi in pulses.into_iter().chain(core::iter::once(segment.t_end)) {
        let n = quad.intervals_for(hi - lo);
        total += sign * trapezoid_phase_integral(lo, hi, omega, n);
        sign = -sign;
        lo = hi;
    }
    total
}

/// Memoized segment transform Y_k(ω) with local +1 start.
///
/// Repeat calls with an equal key return the stored value bit-for-bit and do
/// no integration work.
pub fn segment_fourier(
    segment: &Segment,
    omega: f64,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Complex64 {
    let key = TransformKey::from_segment(segment, omega);
    cache.get_or_compute(key, || {
        segment_transform_quadrature(&key.canonical_segment(), omega, quad)
    })
}

/// Whole-sequence transform Y(ω, T) = Σ_k p_k · Y_k(ω), where p_k is the
/// entry parity of segment k.
pub fn sequence_fourier(
    sequence: &DdSequence,
    omega: f64,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Complex64 {
    let parities = sequence.entry_parities();
    let mut total = Complex64::new(0.0, 0.0);
    for (segment, parity) in sequence.segments().iter().zip(parities) {
        total += parity as f64 * segment_fourier(segment, omega, cache, quad);
    }
    total
}

/// Filter function F(ω, T) = |Y(ω, T)|² sampled on `grid`.
pub fn filter_function(
    sequence: &DdSequence,
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Vec<f64> {
    grid.points()
        .map(|omega| sequence_fourier(sequence, omega, cache, quad).norm_sqr())
        .collect()
}

/// Dense per-(kind, position) transform rows over a frequency grid.
///
/// Sequence search evaluates many sequences against the same grid; summing
/// precomputed rows is much cheaper than per-frequency cache lookups. Rows
/// are materialized through the cache, so values agree bit-for-bit with the
/// scalar [`segment_fourier`] path.
pub struct GridTransforms {
    grid: FrequencyGrid,
    delta_t: f64,
    pulses_per_segment: u32,
    n_positions: usize,
    rows: Vec<Vec<Complex64>>,
}

impl GridTransforms {
    /// Materialize rows for all four kinds at positions 0..n_positions.
    pub fn build(
        grid: FrequencyGrid,
        delta_t: f64,
        pulses_per_segment: u32,
        n_positions: usize,
        cache: &mut TransformCache,
        quad: &QuadratureConfig,
    ) -> Self {
        let mut rows = Vec::with_capacity(4 * n_positions);
        for position in 0..n_positions {
            for kind in SegmentKind::ALL {
                let segment = Segment {
                    kind,
                    n_pulses: kind.pulse_count(pulses_per_segment),
                    t_start: position as f64 * delta_t,
                    t_end: (position + 1) as f64 * delta_t,
                };
                let row = grid
                    .points()
                    .map(|omega| segment_fourier(&segment, omega, cache, quad))
                    .collect();
                rows.push(row);
            }
        }
        Self { grid, delta_t, pulses_per_segment, n_positions, rows }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn pulses_per_segment(&self) -> u32 {
        self.pulses_per_segment
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn row(&self, kind: SegmentKind, position: usize) -> &[Complex64] {
        &self.rows[position * 4 + kind.code() as usize]
    }

    /// Y(ω, T) on the grid for an action list (must fit in n_positions).
    pub fn sequence_transform(&self, actions: &[SegmentKind]) -> Vec<Complex64> {
        let mut acc = TransformAccumulator::new(self);
        for &kind in actions {
            acc.push(kind);
        }
        acc.into_transform()
    }
}

/// Incrementally built sequence transform: push segments left to right.
pub struct TransformAccumulator<'a> {
    transforms: &'a GridTransforms,
    y: Vec<Complex64>,
    parity: i8,
    len: usize,
}

impl<'a> TransformAccumulator<'a> {
    pub fn new(transforms: &'a GridTransforms) -> Self {
        Self {
            transforms,
            y: alloc::vec![Complex64::new(0.0, 0.0); transforms.grid.n_points()],
            parity: 1,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Append one segment of the given kind at the current position.
    pub fn push(&mut self, kind: SegmentKind) {
        assert!(
            self.len < self.transforms.n_positions,
            "sequence longer than materialized positions"
        );
        let row = self.transforms.row(kind, self.len);
        let p = self.parity as f64;
        for (acc, r) in self.y.iter_mut().zip(row) {
            *acc += p * r;
        }
        if kind.pulse_count(self.transforms.pulses_per_segment) % 2 == 1 {
            self.parity = -self.parity;
        }
        self.len += 1;
    }

    /// |Y(ω)|² on the grid.
    pub fn filter(&self) -> Vec<f64> {
        self.y.iter().map(|y| y.norm_sqr()).collect()
    }

    pub fn transform(&self) -> &[Complex64] {
        &self.y
    }

    pub fn into_transform(self) -> Vec<Complex64> {
        self.y
    }

    /// Snapshot for backtracking searches.
    pub fn clone_state(&self) -> (Vec<Complex64>, i8, usize) {
        (self.y.clone(), self.parity, self.len)
    }

    pub fn restore_state(&mut self, state: (Vec<Complex64>, i8, usize)) {
        self.y = state.0;
        self.parity = state.1;
        self.len = state.2;
    }
}
