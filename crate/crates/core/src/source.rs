//! The source term `S(t)`: the rate at which the initial collisional
//! wavepacket feeds amplitude into the excited level `|2>`.
//!
//! `S(t) = ∫ dε Ω_ε(t) s_ε(0) e^{−iΔ_ε t}` with `Δ_ε = ε − (ω_S − ω_p)`. The
//! closed forms below are its limits for a flat continuum, a broad resonance
//! and a narrow resonance; [`source_general_quadrature`] evaluates the integral
//! directly.

use log::warn;

use crate::fano::{sgn, FanoResonance};
use crate::quadrature::{integrate_complex, QuadOptions, QuadResult};
use crate::specfun;
use crate::units::ContinuumRabi;
use crate::{Cplx, Error, Real, Result};

/// Gaussian energy wavepacket of the colliding pair,
/// `s_ε(0) = (πδ²)^(-1/4) exp(−(ε−ε₀)²/2δ² + i(ε−ε₀)t₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavepacket<T> {
    /// Mean collision energy (internal units).
    pub eps0: T,
    /// Energy bandwidth δ_ε (internal units).
    pub delta_eps: T,
    /// Collision time (s).
    pub t0: T,
}

impl<T: Real> Wavepacket<T> {
    pub fn new(eps0: T, delta_eps: T, t0: T) -> Result<Self> {
        if !(delta_eps > T::zero()) || !delta_eps.is_finite() {
            return Err(Error::arg("delta_eps", "bandwidth must be positive and finite"));
        }
        if !eps0.is_finite() || !t0.is_finite() {
            return Err(Error::arg("eps0/t0", "must be finite"));
        }
        Ok(Self { eps0, delta_eps, t0 })
    }

    /// `(πδ²)^(-1/4)`.
    pub fn norm_factor(&self) -> T {
        (T::PI() * self.delta_eps * self.delta_eps).powf(T::lit(-0.25))
    }

    pub fn amplitude(&self, eps: T) -> Cplx<T> {
        let u = eps - self.eps0;
        let mag = self.norm_factor() * (-u * u / (T::lit(2.0) * self.delta_eps * self.delta_eps)).exp();
        Cplx::from_polar(mag, u * self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams<T> {
    pub wavepacket: Wavepacket<T>,
    pub resonance: Option<FanoResonance<T>>,
    /// `ω_S − ω_p` (s⁻¹).
    pub two_photon: T,
    /// Instantaneous pump coupling `μ_2ε E_p(t)/ħ`.
    pub pump_coupling: ContinuumRabi<T>,
}

impl<T: Real> SourceParams<T> {
    /// `Δ₀ = ε₀ − (ω_S − ω_p)`.
    pub fn two_photon_offset(&self) -> T {
        self.wavepacket.eps0 - self.two_photon
    }

    /// `S₀ = Ω̄·(πδ²)^(-1/4)`.
    pub fn s0(&self) -> T {
        self.pump_coupling.0 * self.wavepacket.norm_factor()
    }

    /// Dimensionless time `τ = t·δ/√2`.
    pub fn tau(&self, t: T) -> T {
        t * self.wavepacket.delta_eps / T::SQRT_2()
    }

    /// `D = (ε_F − ε₀)/(√2 δ)`.
    pub fn d_param(&self) -> Option<T> {
        self.resonance
            .map(|r| (r.eps_f - self.wavepacket.eps0) / (T::SQRT_2() * self.wavepacket.delta_eps))
    }

    /// `ξ = Γ/(√2 δ)`.
    pub fn xi(&self) -> Option<T> {
        self.resonance.map(|r| r.gamma / (T::SQRT_2() * self.wavepacket.delta_eps))
    }

    fn resonance(&self) -> Result<&FanoResonance<T>> {
        self.resonance
            .as_ref()
            .ok_or_else(|| Error::arg("resonance", "this source form needs a resonance"))
    }
}

/// Flat continuum: `S₀√(2π)δ exp(−(t−t₀)²δ²/2 − iΔ₀t)`.
pub fn source_no_res<T: Real>(p: &SourceParams<T>, t: T) -> Cplx<T> {
    let wp = &p.wavepacket;
    let dt = t - wp.t0;
    let mag = p.s0() * (T::lit(2.0) * T::PI()).sqrt() * wp.delta_eps
        * (-dt * dt * wp.delta_eps * wp.delta_eps * T::lit(0.5)).exp();
    Cplx::from_polar(T::one(), -p.two_photon_offset() * t) * mag
}

/// Broad resonance: the flat-continuum source times `g(q,ε₀)·sgn(ε₀ − ε_F)`.
pub fn source_broad<T: Real>(p: &SourceParams<T>, t: T) -> Result<Cplx<T>> {
    let r = p.resonance()?;
    if r.gamma < T::lit(10.0) * p.wavepacket.delta_eps {
        warn!("broad source used with Γ/δ_ε = {:.3}", (r.gamma / p.wavepacket.delta_eps).to_f64_lossy());
    }
    Ok(source_no_res(p, t) * broad_factor(r, p.wavepacket.eps0))
}

pub(crate) fn broad_factor<T: Real>(r: &FanoResonance<T>, eps0: T) -> T {
    r.lineshape(eps0) * sgn(eps0 - r.eps_f)
}

/// Narrow resonance (`ξ ≪ 1`):
/// `S₀√(2π)δ e^{−iΔ₀t}·[e^{−(τ−τ₀)²} + (ξ√π/2) e^{−D²−2iD(τ−τ₀)}·((I₁−L₋₁)(y) − iq(I₀−L₀)(y)·sgn(τ−τ₀))]`
/// with `y = ξ|τ−τ₀|`.
pub fn source_narrow<T: Real>(p: &SourceParams<T>, t: T) -> Result<Cplx<T>> {
    let r = p.resonance()?;
    let xi = p.xi().expect("resonance present");
    if xi >= T::one() {
        warn!("narrow source used with ξ = {:.3}", xi.to_f64_lossy());
    }
    Ok(narrow_unchecked(p, r, t))
}

pub(crate) fn narrow_unchecked<T: Real>(p: &SourceParams<T>, r: &FanoResonance<T>, t: T) -> Cplx<T> {
    let wp = &p.wavepacket;
    let xi = r.gamma / (T::SQRT_2() * wp.delta_eps);
    let d = (r.eps_f - wp.eps0) / (T::SQRT_2() * wp.delta_eps);
    let s = p.tau(t - wp.t0);
    let (i0l0, i1lm1) = specfun::pair_unchecked(xi * s.abs());
    let bracket = Cplx::new(i1lm1, -r.q * i0l0 * sgn(s));
    let phase = Cplx::from_polar((-d * d).exp(), -T::lit(2.0) * d * s);
    let bound = phase * bracket * (xi * T::PI().sqrt() * T::lit(0.5));
    let total = bound + Cplx::new((-s * s).exp(), T::zero());
    let scale = p.s0() * (T::lit(2.0) * T::PI()).sqrt() * wp.delta_eps;
    Cplx::from_polar(scale, -p.two_photon_offset() * t) * total
}

/// Energy dependence used inside the general source integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineshapeMode {
    /// `g(q,ε)·sgn(ε − ε_F)` from the resonance.
    Fano,
    /// `g ≡ 1`: flat continuum.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralSourceOptions<T> {
    /// Half-width of the wavepacket window, in units of δ_ε.
    pub window: T,
    /// Half-width of the resonance window, in units of Γ.
    pub resonance_window: T,
    /// Optional lower integration limit (threshold energy).
    pub lower_limit: Option<T>,
    pub lineshape: LineshapeMode,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for GeneralSourceOptions<T> {
    fn default() -> Self {
        Self {
            window: T::lit(8.0),
            resonance_window: T::lit(8.0),
            lower_limit: None,
            lineshape: LineshapeMode::Fano,
            rel_tol: T::lit(1e-8),
            max_intervals: 20_000,
        }
    }
}

/// Direct quadrature of the source integral. The tolerance is relative to
/// `|I|`, floored at `1e-4·rel_tol` of the peak flat-continuum magnitude so
/// that the far Gaussian tail does not demand unbounded work.
pub fn source_general_quadrature<T: Real>(
    p: &SourceParams<T>,
    t: T,
    opts: &GeneralSourceOptions<T>,
) -> Result<QuadResult<Cplx<T>, T>> {
    let wp = p.wavepacket;
    let res = match opts.lineshape {
        LineshapeMode::Fano => Some(*p.resonance()?),
        LineshapeMode::Flat => None,
    };
    let mut pts = vec![wp.eps0 - opts.window * wp.delta_eps, wp.eps0, wp.eps0 + opts.window * wp.delta_eps];
    if let Some(r) = res {
        let w = opts.resonance_window * r.gamma;
        pts.extend([r.eps_f - w, r.eps_f, r.eps_f + w]);
    }
    if let Some(lo) = opts.lower_limit {
        pts.retain(|&e| e > lo);
        pts.push(lo);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();
    if pts.len() < 2 {
        return Err(Error::arg("lower_limit", "integration window is empty"));
    }

    let dt = t - wp.t0;
    let two_d2 = T::lit(2.0) * wp.delta_eps * wp.delta_eps;
    let q_scale = res.map_or(T::one(), |r| T::one().max(r.q.abs()));
    // Peak magnitude of the bare integral (without the S₀ prefactor).
    let peak = (T::lit(2.0) * T::PI()).sqrt() * wp.delta_eps * q_scale;
    let f = |eps: T| {
        let u = eps - wp.eps0;
        let shape = res.map_or(T::one(), |r| broad_factor(&r, eps));
        Cplx::from_polar(shape * (-u * u / two_d2).exp(), -u * dt)
    };
    let qopts = QuadOptions {
        rel_tol: opts.rel_tol,
        abs_tol: opts.rel_tol * T::lit(1e-4) * peak,
        max_intervals: opts.max_intervals,
    };
    let r = integrate_complex(f, &pts, qopts)?;
    let phase = Cplx::from_polar(p.s0(), -p.two_photon_offset() * t);
    Ok(QuadResult { value: r.value * phase, abs_error: r.abs_error * p.s0().abs(), evaluations: r.evaluations })
}
