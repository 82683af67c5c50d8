//! DD segment types, π-pulse timings, and piecewise sequence composition.
//!
//! A sequence is an ordered list of fixed-duration segments, each one of four
//! building blocks. π pulses are ideal instantaneous sign flips of the
//! modulation function y(t); y starts at +1 and a pulse exactly at a query
//! time t flips the sign at t (left-closed convention). The entry parity of
//! segment k is the accumulated sign of all pulses in segments before k.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::{DEFAULT_DELTA_T, DEFAULT_PULSES_PER_SEGMENT};

/// The four DD building blocks, with fixed numeric codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum SegmentKind {
    /// Free induction decay: no pulses, y(t) = 1.
    Fid = 0,
    /// Hahn echo: one pulse at the segment midpoint.
    Hahn = 1,
    /// Carr-Purcell-Meiboom-Gill: n equally spaced pulses.
    Cpmg = 2,
    /// Uhrig DD: n pulses at sin²-spaced times.
    Udd = 3,
}

impl SegmentKind {
    pub const ALL: [SegmentKind; 4] = [
        SegmentKind::Fid,
        SegmentKind::Hahn,
        SegmentKind::Cpmg,
        SegmentKind::Udd,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, Error> {
        match code {
            0 => Ok(SegmentKind::Fid),
            1 => Ok(SegmentKind::Hahn),
            2 => Ok(SegmentKind::Cpmg),
            3 => Ok(SegmentKind::Udd),
            other => Err(Error::domain("SegmentKind", alloc::format!("unknown code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentKind::Fid => "FID",
            SegmentKind::Hahn => "Hahn",
            SegmentKind::Cpmg => "CPMG",
            SegmentKind::Udd => "UDD",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, Error> {
        match name {
            "FID" | "fid" => Ok(SegmentKind::Fid),
            "Hahn" | "hahn" | "HAHN" => Ok(SegmentKind::Hahn),
            "CPMG" | "cpmg" => Ok(SegmentKind::Cpmg),
            "UDD" | "udd" => Ok(SegmentKind::Udd),
            other => Err(Error::domain("SegmentKind", alloc::format!("unknown name `{other}`"))),
        }
    }

    /// Pulse count for this kind given the configured n for CPMG/UDD.
    pub fn pulse_count(self, pulses_per_segment: u32) -> u32 {
        match self {
            SegmentKind::Fid => 0,
            SegmentKind::Hahn => 1,
            SegmentKind::Cpmg | SegmentKind::Udd => pulses_per_segment,
        }
    }
}

/// One DD building block over an absolute time interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub n_pulses: u32,
    /// Absolute start time, µs.
    pub t_start: f64,
    /// Absolute end time, µs.
    pub t_end: f64,
}

impl Segment {
    pub fn new(kind: SegmentKind, n_pulses: u32, t_start: f64, t_end: f64) -> Result<Self, Error> {
        if !(t_end > t_start) {
            return Err(Error::invalid("t_end", "segment must have positive duration"));
        }
        let expected_zero_or_more = match kind {
            SegmentKind::Fid => n_pulses == 0,
            SegmentKind::Hahn => n_pulses == 1,
            SegmentKind::Cpmg | SegmentKind::Udd => n_pulses >= 1,
        };
        if !expected_zero_or_more {
            return Err(Error::invalid(
                "n_pulses",
                alloc::format!("{} segment cannot carry {} pulses", kind.name(), n_pulses),
            ));
        }
        Ok(Self { kind, n_pulses, t_start, t_end })
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Absolute π-pulse times, strictly increasing and strictly interior.
    ///
    /// CPMG places pulse j at t_start + (j − ½)·Δt/n; UDD at
    /// t_start + Δt·sin²(jπ / (2n + 2)).
    pub fn pulse_times(&self) -> Vec<f64> {
        let dt = self.duration();
        match self.kind {
            SegmentKind::Fid => Vec::new(),
            SegmentKind::Hahn => alloc::vec![self.t_start + 0.5 * dt],
            SegmentKind::Cpmg => (1..=self.n_pulses)
                .map(|j| self.t_start + (j as f64 - 0.5) * dt / self.n_pulses as f64)
                .collect(),
            SegmentKind::Udd => {
                let denom = 2.0 * self.n_pulses as f64 + 2.0;
                (1..=self.n_pulses)
                    .map(|j| {
                        let s = libm::sin(j as f64 * core::f64::consts::PI / denom);
                        self.t_start + dt * s * s
                    })
                    .collect()
            }
        }
    }

    /// Sign carried across the segment: (−1)^n_pulses.
    pub fn parity(&self) -> i8 {
        if self.n_pulses % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// An ordered list of segment kinds with fixed segment duration.
#[derive(Debug, Clone, PartialEq)]
pub struct DdSequence {
    actions: Vec<SegmentKind>,
    delta_t: f64,
    pulses_per_segment: u32,
}

impl DdSequence {
    pub fn new(
        actions: Vec<SegmentKind>,
        delta_t: f64,
        pulses_per_segment: u32,
    ) -> Result<Self, Error> {
        if actions.is_empty() {
            return Err(Error::invalid("actions", "sequence must have at least one segment"));
        }
        if !(delta_t > 0.0) {
            return Err(Error::invalid("delta_t", "must be > 0"));
        }
        if pulses_per_segment == 0 {
            return Err(Error::invalid("pulses_per_segment", "must be >= 1"));
        }
        Ok(Self { actions, delta_t, pulses_per_segment })
    }

    /// Sequence with default Δt = 4 µs and n = 4 pulses per CPMG/UDD segment.
    pub fn with_defaults(actions: Vec<SegmentKind>) -> Result<Self, Error> {
        Self::new(actions, DEFAULT_DELTA_T, DEFAULT_PULSES_PER_SEGMENT)
    }

    /// N repetitions of a single kind.
    pub fn uniform(kind: SegmentKind, n_segments: usize, delta_t: f64, pulses: u32) -> Result<Self, Error> {
        Self::new(alloc::vec![kind; n_segments], delta_t, pulses)
    }

    pub fn from_codes(codes: &[u8], delta_t: f64, pulses_per_segment: u32) -> Result<Self, Error> {
        let actions = codes
            .iter()
            .map(|&c| SegmentKind::from_code(c))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(actions, delta_t, pulses_per_segment)
    }

    pub fn actions(&self) -> &[SegmentKind] {
        &self.actions
    }

    pub fn codes(&self) -> Vec<u8> {
        self.actions.iter().map(|k| k.code()).collect()
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn pulses_per_segment(&self) -> u32 {
        self.pulses_per_segment
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Total evolution time T = N·Δt.
    pub fn total_time(&self) -> f64 {
        self.actions.len() as f64 * self.delta_t
    }

    /// Segments with absolute intervals [k·Δt, (k+1)·Δt].
    pub fn segments(&self) -> Vec<Segment> {
        self.actions
            .iter()
            .enumerate()
            .map(|(k, &kind)| Segment {
                kind,
                n_pulses: kind.pulse_count(self.pulses_per_segment),
                t_start: k as f64 * self.delta_t,
                t_end: (k + 1) as f64 * self.delta_t,
            })
            .collect()
    }

    /// Sign with which each segment's modulation starts: entry parity of
    /// segment k is the product of the parities of segments 0..k.
    pub fn entry_parities(&self) -> Vec<i8> {
        let mut parity = 1i8;
        self.actions
            .iter()
            .map(|&kind| {
                let here = parity;
                if kind.pulse_count(self.pulses_per_segment) % 2 == 1 {
                    parity = -parity;
                }
                here
            })
            .collect()
    }

    /// All pulse times over [0, T], strictly increasing.
    pub fn all_pulse_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for seg in self.segments() {
            out.extend(seg.pulse_times());
        }
        out
    }

    /// y(t) ∈ {+1, −1} for t ∈ [0, T].
    ///
    /// A pulse exactly at t counts as already applied (left-closed flips);
    /// y(0) = +1 always.
    pub fn modulation_value(&self, t: f64) -> Result<i8, Error> {
        let total = self.total_time();
        if !(0.0..=total).contains(&t) {
            return Err(Error::domain(
                "modulation_value",
                alloc::format!("t = {t} outside [0, {total}]"),
            ));
        }
        let mut idx = libm::floor(t / self.delta_t) as usize;
        if idx >= self.actions.len() {
            idx = self.actions.len() - 1; // t == T lands in the last segment
        }
        let entry = self.entry_parities()[idx];
        let seg = Segment {
            kind: self.actions[idx],
            n_pulses: self.actions[idx].pulse_count(self.pulses_per_segment),
            t_start: idx as f64 * self.delta_t,
            t_end: (idx + 1) as f64 * self.delta_t,
        };
        let flips = seg.pulse_times().iter().filter(|&&p| p <= t).count();
        Ok(if flips % 2 == 0 { entry } else { -entry })
    }

    /// Human-readable form, e.g. "UDD,CPMG,CPMG".
    pub fn display_names(&self) -> String {
        let mut s = String::new();
        for (i, kind) in self.actions.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(kind.name());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn seg(kind: SegmentKind, n: u32) -> Segment {
        Segment::new(kind, n, 0.0, 4.0).unwrap()
    }

    #[test]
    fn hahn_pulse_at_midpoint() {
        assert_eq!(seg(SegmentKind::Hahn, 1).pulse_times(), vec![2.0]);
    }

    #[test]
    fn cpmg_pulses_evenly_spaced() {
        assert_eq!(
            seg(SegmentKind::Cpmg, 4).pulse_times(),
            vec![0.5, 1.5, 2.5, 3.5]
        );
    }

    #[test]
    fn udd_pulses_sin_squared() {
        let times = seg(SegmentKind::Udd, 4).pulse_times();
        let expected = [0.381966011, 1.381966011, 2.618033989, 3.618033989];
        for (t, e) in times.iter().zip(expected) {
            assert!((t - e).abs() < 1e-8, "{t} vs {e}");
        }
    }

    #[test]
    fn udd_times_symmetric_about_midpoint() {
        for n in [1u32, 2, 3, 4, 5, 8] {
            let times = seg(SegmentKind::Udd, n).pulse_times();
            for (j, t) in times.iter().enumerate() {
                let mirror = times[times.len() - 1 - j];
                assert!((t + mirror - 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pulse_times_strictly_interior_and_increasing() {
        for kind in SegmentKind::ALL {
            let s = seg(kind, kind.pulse_count(4));
            let times = s.pulse_times();
            for w in times.windows(2) {
                assert!(w[0] < w[1]);
            }
            for t in times {
                assert!(t > s.t_start && t < s.t_end);
            }
        }
    }

    #[test]
    fn segment_parity_by_pulse_count() {
        assert_eq!(seg(SegmentKind::Fid, 0).parity(), 1);
        assert_eq!(seg(SegmentKind::Hahn, 1).parity(), -1);
        assert_eq!(seg(SegmentKind::Cpmg, 4).parity(), 1);
        assert_eq!(seg(SegmentKind::Udd, 4).parity(), 1);
        assert_eq!(seg(SegmentKind::Cpmg, 3).parity(), -1);
    }

    #[test]
    fn all_fid_modulation_is_plus_one() {
        let s = DdSequence::with_defaults(vec![SegmentKind::Fid; 3]).unwrap();
        for t in [0.0, 1.0, 5.5, 11.9, 12.0] {
            assert_eq!(s.modulation_value(t).unwrap(), 1);
        }
    }

    #[test]
    fn hahn_flips_at_midpoint() {
        let s = DdSequence::with_defaults(vec![SegmentKind::Hahn]).unwrap();
        assert_eq!(s.modulation_value(1.0).unwrap(), 1);
        assert_eq!(s.modulation_value(2.0).unwrap(), -1); // left-closed
        assert_eq!(s.modulation_value(3.0).unwrap(), -1);
    }

    #[test]
    fn odd_segment_flips_entry_parity_of_next() {
        let s = DdSequence::with_defaults(vec![SegmentKind::Hahn, SegmentKind::Fid]).unwrap();
        assert_eq!(s.modulation_value(5.0).unwrap(), -1);
        assert_eq!(s.entry_parities(), vec![1, -1]);
    }

    #[test]
    fn entry_parity_composes() {
        let s = DdSequence::with_defaults(vec![
            SegmentKind::Hahn,
            SegmentKind::Cpmg,
            SegmentKind::Hahn,
            SegmentKind::Udd,
        ])
        .unwrap();
        // parities: Hahn -1, CPMG +1, Hahn -1, UDD +1
        assert_eq!(s.entry_parities(), vec![1, -1, -1, 1]);
    }

    #[test]
    fn modulation_sign_changes_equal_pulse_count() {
        let s = DdSequence::with_defaults(vec![
            SegmentKind::Cpmg,
            SegmentKind::Hahn,
            SegmentKind::Udd,
        ])
        .unwrap();
        let total_pulses = s.all_pulse_times().len();
        // sample densely between pulse times and count sign changes
        let mut changes = 0;
        let mut prev = s.modulation_value(0.0).unwrap();
        let steps = 24_000;
        for i in 1..=steps {
            let t = s.total_time() * i as f64 / steps as f64;
            let v = s.modulation_value(t).unwrap();
            if v != prev {
                changes += 1;
            }
            prev = v;
        }
        assert_eq!(changes, total_pulses);
    }

    #[test]
    fn modulation_rejects_out_of_range() {
        let s = DdSequence::with_defaults(vec![SegmentKind::Fid]).unwrap();
        assert!(s.modulation_value(-0.1).is_err());
        assert!(s.modulation_value(4.1).is_err());
    }

    #[test]
    fn code_round_trip() {
        for kind in SegmentKind::ALL {
            assert_eq!(SegmentKind::from_code(kind.code()).unwrap(), kind);
            assert_eq!(SegmentKind::from_name(kind.name()).unwrap(), kind);
        }
        assert!(SegmentKind::from_code(4).is_err());
    }

    #[test]
    fn total_time_is_n_delta_t() {
        let s = DdSequence::with_defaults(vec![SegmentKind::Cpmg; 50]).unwrap();
        assert_eq!(s.total_time(), 200.0);
        assert_eq!(s.segments().len(), 50);
        assert_eq!(s.segments()[49].t_end, 200.0);
    }
}
