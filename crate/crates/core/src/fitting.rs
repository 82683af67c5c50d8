//! Three-component NSD reconstruction from decay curves.
//!
//! The forward model predicts W(T) for Ramsey (free evolution, no pulses)
//! and whole-interval CPMG-n sequences through the coherence engine; the
//! fitter minimizes the weighted sum of squared residuals over both datasets
//! jointly with a derivative-free simplex search restarted from a coarse grid
//! over the parameter bounds. Parameters are ordered
//! [y0, a_g, v_g, w_g, a_1f].

use alloc::vec::Vec;

use crate::error::Error;
use crate::noise::{NoiseSpectrum, ThreeComponentNsd};
use crate::sequence::{Segment, SegmentKind};
use crate::spectral::{segment_fourier, FrequencyGrid, QuadratureConfig, TransformCache};

/// Which pulse pattern produced a decay curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceLabel {
    /// Free evolution over the whole interval.
    Ramsey,
    /// n equidistant pulses over the whole interval [0, T].
    Cpmg { n_pulses: u32 },
}

impl SequenceLabel {
    fn segment(&self, total_time: f64) -> Segment {
        match *self {
            SequenceLabel::Ramsey => Segment {
                kind: SegmentKind::Fid,
                n_pulses: 0,
                t_start: 0.0,
                t_end: total_time,
            },
            SequenceLabel::Cpmg { n_pulses } => Segment {
                kind: SegmentKind::Cpmg,
                n_pulses,
                t_start: 0.0,
                t_end: total_time,
            },
        }
    }
}

/// Measured (or synthetic) coherence-vs-time curve for one pulse pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayDataset {
    pub label: SequenceLabel,
    /// (evolution time µs, coherence) pairs, times strictly increasing.
    pub points: Vec<(f64, f64)>,
    /// Optional per-point weights (default 1).
    pub weights: Option<Vec<f64>>,
}

impl DecayDataset {
    pub fn new(
        label: SequenceLabel,
        points: Vec<(f64, f64)>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, Error> {
        if points.len() < 3 {
            return Err(Error::invalid("points", "need at least 3 points per dataset"));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::invalid("points", "times must be strictly increasing"));
            }
        }
        if !(points[0].0 > 0.0) {
            return Err(Error::invalid("points", "times must be positive"));
        }
        for &(_, c) in &points {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::invalid("points", "coherence must lie in [0, 1]"));
            }
        }
        if let Some(w) = &weights {
            if w.len() != points.len() {
                return Err(Error::invalid("weights", "length must match points"));
            }
        }
        Ok(Self { label, points, weights })
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|&(t, _)| t).collect()
    }
}

/// Per-parameter closed bounds, ordered [y0, a_g, v_g, w_g, a_1f].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub lo: [f64; 5],
    pub hi: [f64; 5],
}

impl FitBounds {
    /// Default bounds: each parameter in [0, 10x its initial guess], with a
    /// small positive floor on the width.
    pub fn around_init(init: &[f64; 5]) -> Self {
        let mut hi = [0.0; 5];
        for (h, &x) in hi.iter_mut().zip(init) {
            *h = 10.0 * x;
        }
        Self { lo: [0.0, 0.0, 0.0, 1e-6, 0.0], hi }
    }

    pub fn validate(&self) -> Result<(), Error> {
        for i in 0..5 {
            if !(self.lo[i] <= self.hi[i]) {
                return Err(Error::invalid("bounds", "lower bound above upper bound"));
            }
        }
        if !(self.lo[3] > 0.0) {
            return Err(Error::invalid("bounds", "w_g lower bound must be > 0"));
        }
        Ok(())
    }

    fn clamp(&self, x: &mut [f64; 5]) {
        for i in 0..5 {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }
}

fn params_to_nsd(p: &[f64; 5]) -> Result<ThreeComponentNsd, Error> {
    ThreeComponentNsd::new(p[0], p[1], p[2], p[3], p[4])
}

/// Simplex search controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Coarse-grid points per parameter across the bounds.
    pub grid_points: usize,
    /// Grid candidates kept as simplex starting points (plus the init).
    pub top_k: usize,
    /// Simplex runs chained per starting point.
    pub chains: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grid_points: 3,
            top_k: 3,
            chains: 3,
            max_iterations: 2000,
            tolerance: 1e-16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ThreeComponentNsd,
    /// Weighted sum of squared residuals at `params`.
    pub sse: f64,
    /// predicted − measured per dataset, dataset order preserved.
    pub residuals: Vec<Vec<f64>>,
    pub converged: bool,
    /// Total simplex iterations across all restarts.
    pub iterations: u64,
}

/// W(T) predicted at each time for a parameter set and pulse pattern.
pub fn predict_decay(
    params: &ThreeComponentNsd,
    label: SequenceLabel,
    times: &[f64],
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Result<Vec<f64>, Error> {
    let filters = decay_filters(label, times, grid, cache, quad);
    let s_over_w2 = spectrum_over_w2(params, grid)?;
    Ok(filters
        .iter()
        .map(|f| libm::exp(-chi_of(grid, &s_over_w2, f)))
        .collect())
}

fn decay_filters(
    label: SequenceLabel,
    times: &[f64],
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
) -> Vec<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let segment = label.segment(t);
            grid.points()
                .map(|omega| segment_fourier(&segment, omega, cache, quad).norm_sqr())
                .collect()
        })
        .collect()
}

fn spectrum_over_w2(nsd: &ThreeComponentNsd, grid: &FrequencyGrid) -> Result<Vec<f64>, Error> {
    grid.points()
        .map(|omega| nsd.evaluate(omega).map(|s| s / (omega * omega)))
        .collect()
}

fn chi_of(grid: &FrequencyGrid, s_over_w2: &[f64], filter: &[f64]) -> f64 {
    let n = filter.len();
    let h = grid.spacing();
    let mut sum = 0.5 * (s_over_w2[0] * filter[0] + s_over_w2[n - 1] * filter[n - 1]);
    for i in 1..n - 1 {
        sum += s_over_w2[i] * filter[i];
    }
    sum * h / core::f64::consts::PI
}

struct Objective<'a> {
    grid: &'a FrequencyGrid,
    /// (filters per point, measured, weights) per dataset.
    datasets: Vec<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)>,
    bounds: FitBounds,
}

impl Objective<'_> {
    fn sse(&self, raw: &[f64; 5]) -> f64 {
        let mut p = *raw;
        self.bounds.clamp(&mut p);
        let nsd = match params_to_nsd(&p) {
            Ok(n) => n,
            Err(_) => return f64::INFINITY,
        };
        let s_over_w2 = match spectrum_over_w2(&nsd, self.grid) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let mut total = 0.0;
        for (filters, measured, weights) in &self.datasets {
            for ((f, &m), &w) in filters.iter().zip(measured).zip(weights) {
                let pred = libm::exp(-chi_of(self.grid, &s_over_w2, f));
                let r = pred - m;
                total += w * r * r;
            }
        }
        total
    }
}

/// Nelder-Mead with reflection 1, expansion 2, contraction 1/2, shrink 1/2.
/// Coordinates are pre-normalized by the caller; points are clamped into the
/// (normalized) bounds before evaluation.
fn nelder_mead(
    f: &impl Fn(&[f64; 5]) -> f64,
    x0: [f64; 5],
    lo: &[f64; 5],
    hi: &[f64; 5],
    max_iter: usize,
    tol: f64,
) -> ([f64; 5], f64, u64, bool) {
    const N: usize = 5;
    let clamp = |mut x: [f64; 5]| {
        for i in 0..N {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
        x
    };
    let mut simplex: Vec<[f64; 5]> = Vec::with_capacity(N + 1);
    simplex.push(clamp(x0));
    for i in 0..N {
        let mut x = x0;
        let step = 0.05 * libm::fmax(libm::fabs(x[i]), 1e-3 * (hi[i] - lo[i]));
        x[i] += step;
        simplex.push(clamp(x));
    }
    let mut values: Vec<f64> = simplex.iter().map(f).collect();
    let mut iterations = 0u64;
    let mut converged = false;

    for _ in 0..max_iter {
        iterations += 1;
        // stable sort by value; ties keep earlier vertices
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
        let simplex_old = simplex.clone();
        let values_old = values.clone();
        for (slot, &idx) in order.iter().enumerate() {
            simplex[slot] = simplex_old[idx];
            values[slot] = values_old[idx];
        }
        if values[N] - values[0] <= tol * (libm::fabs(values[0]) + tol) {
            converged = true;
            break;
        }
        let mut centroid = [0.0; 5];
        for x in &simplex[..N] {
            for i in 0..N {
                centroid[i] += x[i] / N as f64;
            }
        }
        let worst = simplex[N];
        let mut reflect = [0.0; 5];
        for i in 0..N {
            reflect[i] = centroid[i] + (centroid[i] - worst[i]);
        }
        let reflect = clamp(reflect);
        let f_r = f(&reflect);
        if f_r < values[0] {
            let mut expand = [0.0; 5];
            for i in 0..N {
                expand[i] = centroid[i] + 2.0 * (centroid[i] - worst[i]);
            }
            let expand = clamp(expand);
            let f_e = f(&expand);
            if f_e < f_r {
                simplex[N] = expand;
                values[N] = f_e;
            } else {
                simplex[N] = reflect;
                values[N] = f_r;
            }
        } else if f_r < values[N - 1] {
            simplex[N] = reflect;
            values[N] = f_r;
        } else {
            let mut contract = [0.0; 5];
            for i in 0..N {
                contract[i] = centroid[i] + 0.5 * (worst[i] - centroid[i]);
            }
            let contract = clamp(contract);
            let f_c = f(&contract);
            if f_c < values[N] {
                simplex[N] = contract;
                values[N] = f_c;
            } else {
                for j in 1..=N {
                    let mut x = [0.0; 5];
                    for i in 0..N {
                        x[i] = simplex[0][i] + 0.5 * (simplex[j][i] - simplex[0][i]);
                    }
                    simplex[j] = clamp(x);
                    values[j] = f(&simplex[j]);
                }
            }
        }
    }

    let mut best = 0;
    for j in 1..=N {
        if values[j] < values[best] {
            best = j;
        }
    }
    (simplex[best], values[best], iterations, converged)
}

/// Joint fit of the three-component NSD to all datasets.
///
/// The search space is normalized by the initial guess; a coarse grid over
/// the (normalized) bounds seeds the top-k simplex starts alongside the
/// initial guess itself, and each start runs `chains` chained simplex passes.
/// The best candidate wins; earlier starts win ties. Deterministic for fixed
/// inputs.
pub fn fit_nsd(
    datasets: &[DecayDataset],
    bounds: &FitBounds,
    init: &[f64; 5],
    grid: &FrequencyGrid,
    cache: &mut TransformCache,
    quad: &QuadratureConfig,
    options: &FitOptions,
) -> Result<FitResult, Error> {
    if datasets.len() < 2 {
        return Err(Error::invalid(
            "datasets",
            "joint fit needs >= 2 datasets with distinct sequence labels",
        ));
    }
    let first = datasets[0].label;
    if datasets.iter().all(|d| d.label == first) {
        return Err(Error::invalid("datasets", "sequence labels must not all be equal"));
    }
    bounds.validate()?;

    let prepared: Vec<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> = datasets
        .iter()
        .map(|d| {
            let filters = decay_filters(d.label, &d.times(), grid, cache, quad);
            let measured: Vec<f64> = d.points.iter().map(|&(_, c)| c).collect();
            let weights = d
                .weights
                .clone()
                .unwrap_or_else(|| alloc::vec![1.0; d.points.len()]);
            (filters, measured, weights)
        })
        .collect();
    let objective = Objective { grid, datasets: prepared, bounds: *bounds };

    // normalize coordinates by the initial guess
    let mut scale = [1.0; 5];
    for i in 0..5 {
        if init[i] > 0.0 {
            scale[i] = init[i];
        }
    }
    let denorm = |x: &[f64; 5]| {
        let mut p = [0.0; 5];
        for i in 0..5 {
            p[i] = x[i] * scale[i];
        }
        bounds.clamp(&mut p);
        p
    };
    let obj_norm = |x: &[f64; 5]| objective.sse(&denorm(x));
    let mut nlo = [0.0; 5];
    let mut nhi = [0.0; 5];
    for i in 0..5 {
        nlo[i] = bounds.lo[i] / scale[i];
        nhi[i] = bounds.hi[i] / scale[i];
    }

    let init_norm = {
        let mut x = [0.0; 5];
        for i in 0..5 {
            x[i] = init[i] / scale[i];
        }
        x
    };
    let sse_init = obj_norm(&init_norm);

    // coarse grid over normalized bounds
    let g = options.grid_points.max(2);
    let mut candidates: Vec<(f64, [f64; 5])> = Vec::new();
    let mut idx = [0usize; 5];
    loop {
        let mut x = [0.0; 5];
        for i in 0..5 {
            x[i] = nlo[i] + (nhi[i] - nlo[i]) * idx[i] as f64 / (g - 1) as f64;
        }
        candidates.push((obj_norm(&x), x));
        // odometer increment
        let mut carry = 0;
        while carry < 5 {
            idx[carry] += 1;
            if idx[carry] < g {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
        if carry == 5 {
            break;
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));

    let mut starts: Vec<[f64; 5]> = candidates
        .iter()
        .take(options.top_k)
        .map(|&(_, x)| x)
        .collect();
    starts.push(init_norm);

    let mut best: Option<([f64; 5], f64, bool)> = None;
    let mut total_iterations = 0u64;
    for start in starts {
        let mut x = start;
        let mut fv = f64::INFINITY;
        let mut run_converged = false;
        for _ in 0..options.chains.max(1) {
            let (nx, nf, iters, conv) = nelder_mead(
                &obj_norm,
                x,
                &nlo,
                &nhi,
                options.max_iterations,
                options.tolerance,
            );
            x = nx;
            fv = nf;
            run_converged = conv;
            total_iterations += iters;
        }
        if best.as_ref().map_or(true, |(_, bf, _)| fv < *bf) {
            best = Some((x, fv, run_converged));
        }
    }
    let (x_norm, sse, simplex_converged) = best.expect("at least one start");
    let params_raw = denorm(&x_norm);
    let params = params_to_nsd(&params_raw)?;

    let residuals = datasets
        .iter()
        .map(|d| {
            let pred = predict_decay(&params, d.label, &d.times(), grid, cache, quad)?;
            Ok(pred
                .iter()
                .zip(&d.points)
                .map(|(p, &(_, m))| p - m)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>, Error>>()?;

    Ok(FitResult {
        params,
        sse,
        residuals,
        converged: sse < sse_init || (sse == sse_init && simplex_converged),
        iterations: total_iterations,
    })
}
