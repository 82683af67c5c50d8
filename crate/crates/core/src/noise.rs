//! Parametric noise spectral densities and randomized environment sampling.
//!
//! Two spectrum families are supported: a Gaussian peak on a constant floor
//! (the spin-bath model used for sequence search) and a three-component
//! white + Gaussian + 1/f model (used by the decay-curve fitter). Angular
//! frequencies are rad/µs throughout.

use alloc::vec::Vec;

use crate::error::Error;
use crate::rng;

/// Anything that can be evaluated as a spectral density S(ω).
pub trait NoiseSpectrum {
    /// S(ω) at angular frequency `omega` (rad/µs).
    fn evaluate(&self, omega: f64) -> Result<f64, Error>;
}

/// Gaussian peak superimposed on a constant floor:
/// S(ω) = y0 + a·exp(−(ω − v_L)² / (2·w1²)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNsd {
    /// Constant noise floor (dimensionless), ≥ 0.
    pub y0: f64,
    /// Peak amplitude, ≥ 0.
    pub a: f64,
    /// Peak center frequency, rad/µs, > 0.
    pub v_l: f64,
    /// Peak width (standard deviation), rad/µs, > 0.
    pub w1: f64,
}

impl GaussianNsd {
    pub fn new(y0: f64, a: f64, v_l: f64, w1: f64) -> Result<Self, Error> {
        if !(y0 >= 0.0) {
            return Err(Error::invalid("y0", "must be >= 0"));
        }
        if !(a >= 0.0) {
            return Err(Error::invalid("a", "must be >= 0"));
        }
        if !(v_l > 0.0) {
            return Err(Error::invalid("v_L", "must be > 0"));
        }
        if !(w1 > 0.0) {
            return Err(Error::invalid("w1", "must be > 0"));
        }
        Ok(Self { y0, a, v_l, w1 })
    }
}

impl NoiseSpectrum for GaussianNsd {
    fn evaluate(&self, omega: f64) -> Result<f64, Error> {
        if !(omega >= 0.0) {
            return Err(Error::domain("GaussianNsd", "omega must be >= 0"));
        }
        let d = omega - self.v_l;
        Ok(self.y0 + self.a * libm::exp(-d * d / (2.0 * self.w1 * self.w1)))
    }
}

/// Three-component spectrum for the neutral-atom case study:
/// S(ω) = y0 + a_g·exp(−(ω − v_g)² / (2·w_g²)) + a_1f / ω.
///
/// Only defined for ω > 0 (the 1/f term diverges at zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeComponentNsd {
    /// White noise floor, ≥ 0.
    pub y0: f64,
    /// Gaussian amplitude, ≥ 0.
    pub a_g: f64,
    /// Gaussian center, rad/µs.
    pub v_g: f64,
    /// Gaussian width, rad/µs, > 0.
    pub w_g: f64,
    /// 1/f amplitude, ≥ 0.
    pub a_1f: f64,
}

impl ThreeComponentNsd {
    pub fn new(y0: f64, a_g: f64, v_g: f64, w_g: f64, a_1f: f64) -> Result<Self, Error> {
        if !(y0 >= 0.0) {
            return Err(Error::invalid("y0", "must be >= 0"));
        }
        if !(a_g >= 0.0) {
            return Err(Error::invalid("a_g", "must be >= 0"));
        }
        if !(w_g > 0.0) {
            return Err(Error::invalid("w_g", "must be > 0"));
        }
        if !(a_1f >= 0.0) {
            return Err(Error::invalid("a_1f", "must be >= 0"));
        }
        Ok(Self { y0, a_g, v_g, w_g, a_1f })
    }
}

impl NoiseSpectrum for ThreeComponentNsd {
    fn evaluate(&self, omega: f64) -> Result<f64, Error> {
        if !(omega > 0.0) {
            return Err(Error::domain(
                "ThreeComponentNsd",
                "omega must be > 0 (1/f term diverges at 0)",
            ));
        }
        let d = omega - self.v_g;
        Ok(self.y0
            + self.a_g * libm::exp(-d * d / (2.0 * self.w_g * self.w_g))
            + self.a_1f / omega)
    }
}

/// Angular Larmor frequency (rad/µs) of a field `b_gauss` (G) given the
/// gyromagnetic conversion constant `gamma` (MHz/G): 2π·γ·B.
pub fn larmor_from_field(b_gauss: f64, gamma: f64) -> Result<f64, Error> {
    if !(b_gauss > 0.0) {
        return Err(Error::domain("larmor_from_field", "B must be > 0"));
    }
    if !(gamma > 0.0) {
        return Err(Error::domain("larmor_from_field", "gamma must be > 0"));
    }
    Ok(2.0 * core::f64::consts::PI * gamma * b_gauss)
}

/// Closed parameter interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self, Error> {
        if !(lo <= hi) {
            return Err(Error::invalid("range", "lower bound must be <= upper bound"));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// One sampled environment: the spectrum plus the field it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledEnvironment {
    pub nsd: GaussianNsd,
    /// Magnetic field (G) that produced `nsd.v_l`.
    pub source_b: f64,
}

/// Uniform sampler over (y0, a, B, w1) ranges; B converts to the peak center
/// v_L via [`larmor_from_field`].
///
/// Draw order per environment is fixed: y0, a, B, w1, each one uniform draw
/// from the ChaCha8 stream seeded with `seed`, so identical configurations
/// reproduce identical lists.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSampler {
    pub count: usize,
    pub seed: u64,
    pub y0: ParamRange,
    pub a: ParamRange,
    pub b_field: ParamRange,
    pub w1: ParamRange,
    /// Field-to-frequency conversion constant, MHz/G.
    pub gamma: f64,
    /// Include the 2π factor in the B → v_L conversion (default true).
    /// With the flag off, v_L = γ·B is treated as already angular.
    pub two_pi: bool,
}

/// Conversion constant for a ¹³C spin bath, MHz/G.
pub const CARBON13_GAMMA: f64 = 1.0705e-3;

impl EnvironmentSampler {
    /// The sampling setup used for the main evaluation family:
    /// y0 ∈ [0.002, 0.008], a ∈ [0.3, 0.7], B ∈ [520, 538] G,
    /// w1 ∈ [0.004, 0.009], γ = 1.0705e−3 MHz/G.
    pub fn evaluation_family(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            y0: ParamRange { lo: 0.002, hi: 0.008 },
            a: ParamRange { lo: 0.3, hi: 0.7 },
            b_field: ParamRange { lo: 520.0, hi: 538.0 },
            w1: ParamRange { lo: 0.004, hi: 0.009 },
            gamma: CARBON13_GAMMA,
            two_pi: true,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.count == 0 {
            return Err(Error::invalid("count", "must be >= 1"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be > 0"));
        }
        for (name, r) in [
            ("y0", &self.y0),
            ("a", &self.a),
            ("B", &self.b_field),
            ("w1", &self.w1),
        ] {
            if !(r.lo <= r.hi) {
                return Err(Error::invalid(name, "range lower bound must be <= upper bound"));
            }
        }
        if !(self.b_field.lo > 0.0) {
            return Err(Error::invalid("B", "field range must be positive"));
        }
        if !(self.w1.lo > 0.0) {
            return Err(Error::invalid("w1", "width range must be positive"));
        }
        Ok(())
    }

    /// Draw `count` environments. Identical samplers yield identical lists.
    pub fn sample(&self) -> Result<Vec<SampledEnvironment>, Error> {
        self.validate()?;
        let mut rng = rng::seeded(self.seed);
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let y0 = rng::uniform_in(&mut rng, self.y0.lo, self.y0.hi);
            let a = rng::uniform_in(&mut rng, self.a.lo, self.a.hi);
            let b = rng::uniform_in(&mut rng, self.b_field.lo, self.b_field.hi);
            let w1 = rng::uniform_in(&mut rng, self.w1.lo, self.w1.hi);
            let v_l = if self.two_pi {
                larmor_from_field(b, self.gamma)?
            } else {
                self.gamma * b
            };
            out.push(SampledEnvironment {
                nsd: GaussianNsd::new(y0, a, v_l, w1)?,
                source_b: b,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_at_peak_center() {
        let nsd = GaussianNsd::new(0.005, 0.5, 3.5, 0.006).unwrap();
        assert_eq!(nsd.evaluate(3.5).unwrap(), 0.505);
    }

    #[test]
    fn zero_amplitude_reduces_to_floor() {
        let nsd = GaussianNsd::new(0.005, 0.0, 3.5, 0.006).unwrap();
        for omega in [0.0, 0.1, 3.5, 8.5] {
            assert_eq!(nsd.evaluate(omega).unwrap(), 0.005);
        }
    }

    #[test]
    fn gaussian_maximized_at_center() {
        let nsd = GaussianNsd::new(0.004, 0.6, 3.55, 0.007).unwrap();
        let peak = nsd.evaluate(3.55).unwrap();
        let mut omega = 0.001;
        while omega < 8.5 {
            assert!(nsd.evaluate(omega).unwrap() <= peak);
            omega += 0.0005;
        }
    }

    #[test]
    fn pure_one_over_f_term() {
        let nsd = ThreeComponentNsd::new(0.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(nsd.evaluate(4.0).unwrap(), 0.5);
    }

    #[test]
    fn three_component_rejects_nonpositive_omega() {
        let nsd = ThreeComponentNsd::new(0.1, 0.1, 1.0, 1.0, 0.1).unwrap();
        assert!(nsd.evaluate(0.0).is_err());
        assert!(nsd.evaluate(-1.0).is_err());
    }

    #[test]
    fn larmor_values() {
        // 2π·1.0705e-3·520 and ·538, by direct arithmetic
        let v = larmor_from_field(520.0, CARBON13_GAMMA).unwrap();
        assert!((v - 3.4975979).abs() < 1e-6, "{v}");
        let v = larmor_from_field(538.0, CARBON13_GAMMA).unwrap();
        assert!((v - 3.6186686).abs() < 1e-6, "{v}");
        assert!(larmor_from_field(0.0, CARBON13_GAMMA).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let sampler = EnvironmentSampler::evaluation_family(200, 99);
        let a = sampler.sample().unwrap();
        let b = sampler.sample().unwrap();
        assert_eq!(a, b);
        let v_lo = larmor_from_field(520.0, CARBON13_GAMMA).unwrap();
        let v_hi = larmor_from_field(538.0, CARBON13_GAMMA).unwrap();
        for env in &a {
            assert!(sampler.y0.contains(env.nsd.y0));
            assert!(sampler.a.contains(env.nsd.a));
            assert!(sampler.b_field.contains(env.source_b));
            assert!(sampler.w1.contains(env.nsd.w1));
            assert!(env.nsd.v_l >= v_lo && env.nsd.v_l <= v_hi);
        }
    }

    #[test]
    fn degenerate_ranges_give_exact_values() {
        let sampler = EnvironmentSampler {
            count: 1,
            seed: 0,
            y0: ParamRange { lo: 0.004, hi: 0.004 },
            a: ParamRange { lo: 0.5, hi: 0.5 },
            b_field: ParamRange { lo: 530.0, hi: 530.0 },
            w1: ParamRange { lo: 0.006, hi: 0.006 },
            gamma: CARBON13_GAMMA,
            two_pi: true,
        };
        let envs = sampler.sample().unwrap();
        assert_eq!(envs[0].nsd.y0, 0.004);
        assert_eq!(envs[0].nsd.a, 0.5);
        assert_eq!(envs[0].source_b, 530.0);
        assert_eq!(envs[0].nsd.w1, 0.006);
    }

    #[test]
    fn marginal_means_near_midpoints() {
        let sampler = EnvironmentSampler::evaluation_family(1000, 4242);
        let envs = sampler.sample().unwrap();
        let n = envs.len() as f64;
        let means = [
            envs.iter().map(|e| e.nsd.y0).sum::<f64>() / n,
            envs.iter().map(|e| e.nsd.a).sum::<f64>() / n,
            envs.iter().map(|e| e.source_b).sum::<f64>() / n,
            envs.iter().map(|e| e.nsd.w1).sum::<f64>() / n,
        ];
        let mids = [
            sampler.y0.midpoint(),
            sampler.a.midpoint(),
            sampler.b_field.midpoint(),
            sampler.w1.midpoint(),
        ];
        for (mean, mid) in means.iter().zip(mids) {
            assert!(
                (mean - mid).abs() / mid < 0.05,
                "mean {mean} vs midpoint {mid}"
            );
        }
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut sampler = EnvironmentSampler::evaluation_family(10, 0);
        sampler.y0 = ParamRange { lo: 0.9, hi: 0.1 };
        assert!(sampler.sample().is_err());
        let sampler = EnvironmentSampler {
            count: 0,
            ..EnvironmentSampler::evaluation_family(10, 0)
        };
        assert!(sampler.sample().is_err());
    }
}
