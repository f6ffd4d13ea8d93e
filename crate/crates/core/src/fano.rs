//! Fano description of a Feshbach resonance embedded in the scattering
//! continuum.

use crate::units::{self, ContinuumRabi};
use crate::{Error, Real, Result};

/// Tolerance of the `μ_2ε ↔ μ_2b` consistency relation.
pub const DIPOLE_CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoResonance<T> {
    pub q: T,
    /// Width, internal energy units.
    pub gamma: T,
    /// Position, internal energy units.
    pub eps_f: T,
    /// Unperturbed continuum-bound dipole (esu·cm·s^1/2).
    pub mu2eps: Option<T>,
    /// Bound-bound dipole from the Feshbach state to `|2>` (esu·cm).
    pub mu2b: Option<T>,
}

/// `sgn` with `sgn(0) = +1`.
#[inline]
pub fn sgn<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

impl<T: Real> FanoResonance<T> {
    pub fn new(q: T, gamma: T, eps_f: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::arg("gamma", "resonance width must be positive and finite"));
        }
        if !q.is_finite() || !eps_f.is_finite() {
            return Err(Error::arg("q/eps_f", "must be finite"));
        }
        Ok(Self { q, gamma, eps_f, mu2eps: None, mu2b: None })
    }

    /// Attaches dipoles. With only `mu2b` given, `mu2eps` follows from the
    /// consistency relation; with both, they must satisfy it.
    pub fn with_dipoles(mut self, mu2eps: Option<T>, mu2b: Option<T>) -> Result<Self> {
        match (mu2eps, mu2b) {
            (Some(e), Some(b)) => {
                let implied = units::continuum_dipole_from_bound(b, self.q, self.gamma)?;
                if ((e - implied) / implied).abs() > T::lit(DIPOLE_CONSISTENCY_TOL) {
                    return Err(Error::arg(
                        "mu2eps",
                        format!("inconsistent with mu2b: expected {implied:e}, got {e:e}"),
                    ));
                }
            }
            (None, Some(b)) => self.mu2eps = Some(units::continuum_dipole_from_bound(b, self.q, self.gamma)?),
            _ => {}
        }
        if let Some(e) = mu2eps {
            self.mu2eps = Some(e);
        }
        self.mu2b = mu2b;
        Ok(self)
    }

    /// `Δ(ε) = −arctan(Γ / 2(ε − ε_F))`, taking `−π/2` at `ε = ε_F`.
    pub fn phase_shift(&self, eps: T) -> T {
        let d = eps - self.eps_f;
        if d == T::zero() {
            -T::FRAC_PI_2()
        } else {
            -(self.gamma / (d + d)).atan()
        }
    }

    /// Closed-channel admixture `a(ε) = √(2/πΓ)·sin Δ(ε)`.
    pub fn bound_admixture(&self, eps: T) -> T {
        (T::lit(2.0) / (T::PI() * self.gamma)).sqrt() * self.phase_shift(eps).sin()
    }

    /// Reduced detuning `x = 2(ε − ε_F)/Γ`.
    #[inline]
    pub fn reduced(&self, eps: T) -> T {
        T::lit(2.0) * (eps - self.eps_f) / self.gamma
    }

    /// `g(q, ε) = (q + x)/√(1 + x²)`.
    pub fn lineshape(&self, eps: T) -> T {
        let x = self.reduced(eps);
        (self.q + x) / (T::one() + x * x).sqrt()
    }

    /// `dg/dε`.
    pub fn lineshape_derivative(&self, eps: T) -> T {
        let x = self.reduced(eps);
        let s = T::one() + x * x;
        (T::one() - self.q * x) / (s * s.sqrt()) * T::lit(2.0) / self.gamma
    }

    /// Resonance-modified continuum coupling `Ω̄·g(q,ε)·sgn(ε − ε_F)`.
    pub fn modified_coupling(&self, coupling: ContinuumRabi<T>, eps: T) -> ContinuumRabi<T> {
        ContinuumRabi(coupling.0 * self.lineshape(eps) * sgn(eps - self.eps_f))
    }

    /// Continuum Rabi frequency for a pump field amplitude (statV/cm).
    pub fn continuum_rabi(&self, field: T, eps: T) -> Result<ContinuumRabi<T>> {
        let mu = self.mu2eps.ok_or_else(|| Error::arg("mu2eps", "resonance has no continuum dipole"))?;
        Ok(self.modified_coupling(units::continuum_rabi_from_field(field, mu), eps))
    }

    /// Location `ε − ε_F = Γ/2q` and value `√(1+q²)` of the lineshape maximum.
    pub fn enhancement_max(&self) -> Result<(T, T)> {
        if self.q == T::zero() {
            return Err(Error::arg("q", "no interior maximum for q = 0"));
        }
        let loc = self.gamma / (T::lit(2.0) * self.q);
        Ok((loc, (T::one() + self.q * self.q).sqrt()))
    }
}
