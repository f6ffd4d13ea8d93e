//! Gaussian Stokes and pump envelopes.

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseRole {
    /// Centered at `t₀ − τ_S`.
    Stokes,
    /// Centered at `t₀ + τ_p`.
    Pump,
}

impl PulseRole {
    /// The `±` of `exp(−((t − t₀ ± τ)/T)²)`.
    pub fn sign(self) -> f64 {
        match self {
            PulseRole::Stokes => 1.0,
            PulseRole::Pump => -1.0,
        }
    }
}

/// `peak·exp(−((t − t₀ ± τ)/T)²)`.
///
/// For the Stokes pulse `peak` is a bound-bound Rabi frequency (s⁻¹); for the
/// pump it is the continuum coupling `μ_2ε·E/ħ` (s^-1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse<T> {
    pub peak: T,
    pub center_offset: T,
    pub width: T,
    pub role: PulseRole,
}

impl<T: Real> GaussianPulse<T> {
    pub fn new(peak: T, center_offset: T, width: T, role: PulseRole) -> Result<Self> {
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::arg("width", "must be positive and finite"));
        }
        if !(peak >= T::zero()) || !peak.is_finite() {
            return Err(Error::arg("peak", "must be non-negative and finite"));
        }
        if !center_offset.is_finite() {
            return Err(Error::arg("center_offset", "must be finite"));
        }
        Ok(Self { peak, center_offset, width, role })
    }

    pub fn center(&self, t0: T) -> T {
        t0 - T::lit(self.role.sign()) * self.center_offset
    }

    pub fn evaluate(&self, t0: T, t: T) -> T {
        let u = (t - self.center(t0)) / self.width;
        self.peak * (-u * u).exp()
    }

    /// Half-width of the interval where the envelope exceeds `threshold·peak`.
    pub fn half_width_above(&self, threshold: T) -> T {
        self.width * (-threshold.ln()).sqrt()
    }
}

/// Default level for [`PulsePair::overlap_time`]: both envelopes above `e⁻²`.
pub fn default_overlap_threshold<T: Real>() -> T {
    T::lit((-2.0f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePair<T> {
    pub stokes: GaussianPulse<T>,
    pub pump: GaussianPulse<T>,
    /// Reference time the pulse offsets are measured from (s).
    pub t0: T,
}

impl<T: Real> PulsePair<T> {
    pub fn new(stokes: GaussianPulse<T>, pump: GaussianPulse<T>, t0: T) -> Result<Self> {
        if stokes.role != PulseRole::Stokes || pump.role != PulseRole::Pump {
            return Err(Error::arg("pulses", "expected one Stokes and one pump pulse"));
        }
        if !t0.is_finite() {
            return Err(Error::arg("t0", "must be finite"));
        }
        Ok(Self { stokes, pump, t0 })
    }

    pub fn stokes_center(&self) -> T {
        self.stokes.center(self.t0)
    }

    pub fn pump_center(&self) -> T {
        self.pump.center(self.t0)
    }

    /// Whether the Stokes pulse peaks before the pump pulse.
    pub fn is_counter_intuitive(&self) -> bool {
        self.stokes_center() < self.pump_center()
    }

    pub fn stokes_at(&self, t: T) -> T {
        self.stokes.evaluate(self.t0, t)
    }

    pub fn pump_at(&self, t: T) -> T {
        self.pump.evaluate(self.t0, t)
    }

    /// Midpoint between the two peaks; the default collision time.
    pub fn midpoint(&self) -> T {
        (self.stokes_center() + self.pump_center()) * T::lit(0.5)
    }

    /// `[first peak − 6·max T, last peak + 6·max T]`.
    pub fn default_window(&self) -> (T, T) {
        let w = T::lit(6.0) * self.stokes.width.max(self.pump.width);
        let (a, b) = (self.stokes_center(), self.pump_center());
        (a.min(b) - w, a.max(b) + w)
    }

    /// The same pair with the two peak times exchanged (intuitive order).
    pub fn swapped(&self) -> Self {
        let mut out = *self;
        out.stokes.center_offset = -self.pump.center_offset;
        out.pump.center_offset = -self.stokes.center_offset;
        out
    }

    pub fn shifted(&self, dt: T) -> Self {
        Self { t0: self.t0 + dt, ..*self }
    }

    /// Duration over which both envelopes exceed `e⁻²` of their peaks.
    pub fn overlap_time(&self) -> T {
        self.overlap_time_at(default_overlap_threshold())
    }

    /// Duration over which both envelopes exceed `threshold` times their peaks.
    pub fn overlap_time_at(&self, threshold: T) -> T {
        let hs = self.stokes.half_width_above(threshold);
        let hp = self.pump.half_width_above(threshold);
        let lo = (self.stokes_center() - hs).max(self.pump_center() - hp);
        let hi = (self.stokes_center() + hs).min(self.pump_center() + hp);
        (hi - lo).max(T::zero())
    }
}
