//! Truncated Gaussian drive envelopes, their running area, and normalization
//! of the area to a target value (π for one gate cycle).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Relative tolerance for area normalization.
pub const AREA_TOL: f64 = 1e-10;

/// A Gaussian envelope Ω(t) = A·exp(−(t − t0 − T/2)²/(2σ²)), truncated to the
/// support [t0, t0 + T] and zero outside. Times in ns, amplitude in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse {
    duration: f64,
    sigma: f64,
    amplitude: f64,
    start: f64,
}

impl GaussianPulse {
    pub fn new(duration: f64, sigma: f64, amplitude: f64, start: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidPulse(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !amplitude.is_finite() || !start.is_finite() {
            return Err(Error::InvalidPulse("non-finite pulse parameter".into()));
        }
        Ok(Self {
            duration,
            sigma,
            amplitude,
            start,
        })
    }

    /// Pulse with σ = T/8 starting at `start`, normalized so the truncated
    /// area equals π.
    pub fn pi_pulse(duration: f64, start: f64) -> Result<Self> {
        let p = Self::new(duration, duration / 8.0, 1.0, start)?;
        Ok(p.normalize_area(PI))
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.duration
    }

    /// Copy of the pulse with its support shifted by `lag` ns.
    pub fn delayed(&self, lag: f64) -> Self {
        Self {
            start: self.start + lag,
            ..*self
        }
    }

    /// Ω(t); zero outside the support window.
    pub fn envelope(&self, t: f64) -> f64 {
        if t < self.start || t > self.end() {
            return 0.0;
        }
        let x = t - self.center();
        self.amplitude * (-x * x / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// Running area α(t) = ∫ Ω dt′ from the start of the support, in closed
    /// form through the error function.
    pub fn area(&self, t: f64) -> f64 {
        let t_eff = t.clamp(self.start, self.end());
        let s = std::f64::consts::SQRT_2 * self.sigma;
        let lo = (self.start - self.center()) / s;
        let hi = (t_eff - self.center()) / s;
        self.amplitude * self.sigma * (PI / 2.0).sqrt() * (libm::erf(hi) - libm::erf(lo))
    }

    /// Total truncated area α(t0 + T).
    pub fn total_area(&self) -> f64 {
        self.area(self.end())
    }

    /// Running integral of Ω²(t); closed form (the square of a Gaussian is a
    /// Gaussian of width σ/√2). Used for second-order drive-shift phases.
    pub fn envelope_sq_area(&self, t: f64) -> f64 {
        let t_eff = t.clamp(self.start, self.end());
        let s = self.sigma; // Ω² has std σ/√2, so the erf argument scale is σ
        let lo = (self.start - self.center()) / s;
        let hi = (t_eff - self.center()) / s;
        self.amplitude * self.amplitude * self.sigma * (PI / 4.0).sqrt()
            * (libm::erf(hi) - libm::erf(lo))
    }

    /// Rescale the amplitude so the truncated area equals `target`.
    pub fn normalize_area(&self, target: f64) -> Self {
        let current = self.total_area();
        Self {
            amplitude: self.amplitude * target / current,
            ..*self
        }
    }

    /// Check that the truncated area equals `target` within [`AREA_TOL`]
    /// (relative).
    pub fn check_area(&self, target: f64) -> Result<()> {
        let area = self.total_area();
        if (area - target).abs() > AREA_TOL * target.abs().max(1.0) {
            return Err(Error::UnnormalizedPulse {
                area,
                expected: target,
                tol: AREA_TOL,
            });
        }
        Ok(())
    }
}
