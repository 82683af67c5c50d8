//! Core engine for discovering and evaluating dynamical-decoupling (DD)
//! pulse sequences under parametric dephasing noise.
//!
//! The crate models a qubit whose dephasing is described by a noise spectral
//! density S(ω). A DD sequence induces a piecewise-constant ±1 modulation
//! function y(t); its Fourier transform Y(ω, T) defines the filter function
//! F(ω, T) = |Y|², and the residual coherence after total evolution time T is
//!
//! ```text
//! W(T) = exp(-χ(T)),   χ(T) = (1/π) ∫ S(ω)/ω² · F(ω, T) dω
//! ```
//!
//! Sequences are composed from fixed-duration segments (FID, Hahn, CPMG,
//! UDD). Segment transforms are memoized in a [`spectral::TransformCache`]
//! keyed by segment parameters, absolute interval, and frequency, which makes
//! large sequence searches cheap: a full sequence transform is the
//! parity-signed sum of cached segment transforms.
//!
//! On top of the engine sit:
//!
//! - [`agent`]: a tabular Q-learning agent with truncated-history state
//!   aggregation, epsilon-greedy exploration, Monte Carlo value updates, and
//!   warm-started training ladders over increasing total times;
//! - [`oracle`]: brute-force reference optimizers (exhaustive and
//!   incremental) that bound achievable coherence;
//! - [`sensing`]: the relative AC-magnetometry sensitivity metric
//!   M(T, ω_s) = √T / (W(T)·|Y(ω_s, T)|);
//! - [`fitting`]: reconstruction of a three-component noise spectrum from
//!   Ramsey/CPMG decay curves;
//! - [`analysis`]: composition, autocorrelation, CDF, and normalized
//!   coherence summaries of learned sequences.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the CLI live
//! in the companion `ddtune` crate. All units are microseconds for time and
//! rad/µs for angular frequency.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod agent;
pub mod coherence;
pub mod error;
pub mod fitting;
pub mod noise;
pub mod oracle;
pub mod rng;
pub mod sensing;
pub mod sequence;
pub mod spectral;

pub use coherence::{coherence, decoherence_chi, CoherenceResult, SpectrumTable};
pub use error::Error;
pub use noise::{larmor_from_field, EnvironmentSampler, GaussianNsd, NoiseSpectrum, ThreeComponentNsd};
pub use sequence::{DdSequence, Segment, SegmentKind};
pub use spectral::{FrequencyGrid, GridTransforms, QuadratureConfig, TransformCache, TransformKey};

/// Default segment duration Δt in µs.
pub const DEFAULT_DELTA_T: f64 = 4.0;

/// Default π-pulse count for CPMG and UDD segments.
pub const DEFAULT_PULSES_PER_SEGMENT: u32 = 4;
