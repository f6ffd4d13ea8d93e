//! Maxwell–Boltzmann averaging of the transfer probability and the
//! pulse-train estimates built on it.
//!
//! The thermal average is
//!
//! ```text
//! P_avg = 2/(√π (kT)^{3/2}) ∫₀^∞ e^{−ε/kT} √ε P(ε) dε
//! ```
//!
//! evaluated with generalized Gauss–Laguerre nodes (α = 1/2) in `x = ε/kT`.

use gauss_quad::{FiniteAboveNegOneF64, GaussLaguerre};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use std::num::NonZeroUsize;

use crate::dynamics::{self, ScenarioConfig};
use crate::units::{CODATA, ATOMIC_MASS_UNIT};
use crate::{Error, Real, Result};

/// Doubling the node count must change the average by less than this.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Residual atom fraction that counts as "the whole ensemble converted".
pub const DEFAULT_RESIDUAL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec<T> {
    /// Temperature, K.
    pub temperature: T,
    /// Atomic density, cm⁻³.
    pub density: T,
    /// Reduced mass of the pair, kg.
    pub reduced_mass: T,
    /// Trap volume, cm³.
    pub trap_volume: T,
}

impl<T: Real> EnsembleSpec<T> {
    pub fn new(temperature: T, density: T, reduced_mass: T, trap_volume: T) -> Result<Self> {
        for (name, v) in [
            ("temperature", temperature),
            ("density", density),
            ("reduced_mass", reduced_mass),
            ("trap_volume", trap_volume),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::arg(name, "must be positive and finite"));
            }
        }
        Ok(Self { temperature, density, reduced_mass, trap_volume })
    }

    /// Homonuclear pair of atoms of the given mass (u).
    pub fn homonuclear(temperature: T, density: T, atomic_mass_u: T, trap_volume: T) -> Result<Self> {
        Self::new(temperature, density, atomic_mass_u * T::lit(0.5 * ATOMIC_MASS_UNIT), trap_volume)
    }

    /// `k_B T` in internal energy units (s⁻¹).
    pub fn kt(&self) -> T {
        self.temperature * T::lit(CODATA.kb / CODATA.hbar)
    }

    /// `δ_ε = √(3/2) k_B T`.
    pub fn delta_eps(&self) -> T {
        T::lit(1.5).sqrt() * self.kt()
    }

    /// `⟨ε⟩ = (3/2) k_B T`.
    pub fn mean_energy(&self) -> T {
        T::lit(1.5) * self.kt()
    }

    /// The temperature whose thermal bandwidth is `delta_eps` (internal units).
    pub fn temperature_for_bandwidth(delta_eps: T) -> T {
        delta_eps / T::lit(1.5).sqrt() / T::lit(CODATA.kb / CODATA.hbar)
    }
}

/// Nodes `x_i` (in units of kT) and weights of the normalized thermal
/// average; the weights sum to one.
pub fn thermal_nodes<T: Real>(n_nodes: usize) -> Result<Vec<(T, T)>> {
    let n = NonZeroUsize::new(n_nodes).ok_or_else(|| Error::arg("n_nodes", "must be positive"))?;
    let alpha = FiniteAboveNegOneF64::new(0.5).expect("1/2 is a valid exponent");
    let rule = GaussLaguerre::new(n, alpha);
    let norm = 2.0 / std::f64::consts::PI.sqrt();
    Ok(rule.iter().map(|(x, w)| (T::lit(*x), T::lit(w * norm))).collect())
}

/// Thermal average of `p(ε)` at `n_nodes` Gauss nodes. `p` receives the
/// energy in internal units. Evaluations run in parallel; the sum is taken
/// in node order.
pub fn thermal_average<T, F>(kt: T, n_nodes: usize, p: F) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T> + Sync,
{
    let nodes = thermal_nodes::<T>(n_nodes)?;
    let values: Vec<T> = nodes.par_iter().map(|&(x, _)| p(x * kt)).collect::<Result<_>>()?;
    Ok(nodes.iter().zip(&values).fold(T::zero(), |s, (&(_, w), &v)| s + w * v))
}

/// Same average on a uniform grid in `u = √(ε/kT)` (trapezoid rule, which is
/// spectrally accurate here because the integrand `u²e^{−u²}P(u²)` is smooth
/// and vanishes at both ends).
pub fn thermal_average_trapezoid<T, F>(kt: T, n_points: usize, u_max: T, p: F) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T> + Sync,
{
    if n_points < 3 || !(u_max > T::zero()) {
        return Err(Error::arg("n_points/u_max", "need at least 3 points and a positive range"));
    }
    let h = u_max / T::from_usize(n_points - 1).expect("size");
    let us: Vec<T> = (0..n_points).map(|i| h * T::from_usize(i).expect("size")).collect();
    let values: Vec<T> = us.par_iter().map(|&u| p(u * u * kt)).collect::<Result<_>>()?;
    let norm = T::lit(4.0) / T::PI().sqrt();
    let mut sum = T::zero();
    for (i, (&u, &v)) in us.iter().zip(&values).enumerate() {
        let w = if i == 0 || i == n_points - 1 { T::lit(0.5) } else { T::one() };
        sum += w * u * u * (-u * u).exp() * v;
    }
    Ok(norm * h * sum)
}

/// The scenario seen by a pair with mean collision energy `eps0`: the
/// lasers (hence `ω_S − ω_p`), pulses and resonance stay fixed.
pub fn node_scenario<T: Real>(cfg: &ScenarioConfig<T>, eps0: T) -> ScenarioConfig<T> {
    let mut c = *cfg;
    c.two_photon_offset = cfg.two_photon_offset + (eps0 - cfg.wavepacket.eps0);
    c.wavepacket.eps0 = eps0;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AverageReport {
    /// Average at `n_nodes`.
    pub p_avg: f64,
    pub n_nodes: usize,
    /// Average at `2·n_nodes`.
    pub p_avg_doubled: f64,
    pub converged: bool,
    /// `(ε₀ in s⁻¹, weight, P)` at the `n_nodes` nodes.
    pub nodes: Vec<(f64, f64, f64)>,
}

/// Maxwell–Boltzmann average of the final `|c₁|²` of `cfg`, with the
/// quadrature checked by doubling the node count. A non-converged result is
/// returned with both estimates and a warning.
pub fn average_efficiency<T: Real>(
    spec: &EnsembleSpec<T>,
    cfg: &ScenarioConfig<T>,
    n_nodes: usize,
) -> Result<AverageReport> {
    if n_nodes < 8 {
        return Err(Error::arg("n_nodes", "need at least 8 quadrature nodes"));
    }
    cfg.validate()?;
    let kt = spec.kt();
    let rel = (cfg.wavepacket.delta_eps - spec.delta_eps()).abs() / spec.delta_eps();
    if rel > T::lit(0.01) {
        warn!(
            "scenario bandwidth differs from the thermal one by {:.1}%",
            rel.to_f64_lossy() * 100.0
        );
    }
    let p = |eps: T| dynamics::final_state(&node_scenario(cfg, eps)).map(|s| s.populations().0);
    let run = |n: usize| -> Result<(T, Vec<(f64, f64, f64)>)> {
        let nodes = thermal_nodes::<T>(n)?;
        let values: Vec<T> = nodes.par_iter().map(|&(x, _)| p(x * kt)).collect::<Result<_>>()?;
        let avg = nodes.iter().zip(&values).fold(T::zero(), |s, (&(_, w), &v)| s + w * v);
        let table = nodes
            .iter()
            .zip(&values)
            .map(|(&(x, w), &v)| ((x * kt).to_f64_lossy(), w.to_f64_lossy(), v.to_f64_lossy()))
            .collect();
        Ok((avg, table))
    };
    let (coarse, nodes) = run(n_nodes)?;
    let (fine, _) = run(2 * n_nodes)?;
    let converged = (fine - coarse).abs() < T::lit(CONVERGENCE_TOL);
    if !converged {
        warn!(
            "thermal average not converged: {} at {n_nodes} nodes, {} at {}",
            coarse.to_f64_lossy(),
            fine.to_f64_lossy(),
            2 * n_nodes
        );
    }
    Ok(AverageReport {
        p_avg: coarse.to_f64_lossy(),
        n_nodes,
        p_avg_doubled: fine.to_f64_lossy(),
        converged,
        nodes,
    })
}

/// `√(2π) ħ² ρ τ / (4 (μ k_B T)^{3/2})` in SI, with ρ converted from cm⁻³.
fn spectral_prefactor<T: Real>(spec: &EnsembleSpec<T>, tau_tr: T) -> T {
    let hbar = T::lit(CODATA.hbar);
    let rho = spec.density * T::lit(1e6);
    let mkt = spec.reduced_mass * spec.temperature * T::lit(CODATA.kb);
    (T::lit(2.0) * T::PI()).sqrt() * hbar * hbar * rho * tau_tr / (T::lit(4.0) * mkt.powf(T::lit(1.5)))
}

/// Fraction of atoms photoassociated by one pulse pair,
/// `f = P_avg ρ √(2π) τ ħ² / (4 μ^{3/2} √(k_B T))`.
pub fn fraction_per_pulse_pair<T: Real>(spec: &EnsembleSpec<T>, p_avg: T, tau_tr: T) -> Result<T> {
    if !(p_avg >= T::zero() && p_avg <= T::one()) {
        return Err(Error::arg("p_avg", "must lie in [0, 1]"));
    }
    if !(tau_tr > T::zero()) {
        return Err(Error::arg("tau_tr", "must be positive"));
    }
    Ok(p_avg * spectral_prefactor(spec, tau_tr) * spec.temperature * T::lit(CODATA.kb))
}

/// Spectral density `f(ε)` per internal energy unit (s), for a transfer
/// probability `p` at energy `eps` (s⁻¹).
pub fn spectral_fraction<T: Real>(spec: &EnsembleSpec<T>, tau_tr: T, eps: T, p: T) -> T {
    let joule_per_internal = T::lit(CODATA.hbar);
    spectral_prefactor(spec, tau_tr) * p * (-eps / spec.kt()).exp() * joule_per_internal
}

/// `∫ f(ε) dε` with an energy-dependent `P(ε)`, by plain Gauss–Laguerre
/// quadrature; equals [`fraction_per_pulse_pair`] when `P` is constant.
pub fn fraction_from_spectrum<T, F>(spec: &EnsembleSpec<T>, tau_tr: T, n_nodes: usize, p: F) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T> + Sync,
{
    let n = NonZeroUsize::new(n_nodes).ok_or_else(|| Error::arg("n_nodes", "must be positive"))?;
    let rule = GaussLaguerre::new(n, FiniteAboveNegOneF64::default());
    let kt = spec.kt();
    let pairs: Vec<(T, T)> = rule.iter().map(|(x, w)| (T::lit(*x), T::lit(*w))).collect();
    let values: Vec<T> = pairs.par_iter().map(|&(x, _)| p(x * kt)).collect::<Result<_>>()?;
    let sum = pairs.iter().zip(&values).fold(T::zero(), |s, (&(_, w), &v)| s + w * v);
    // ∫ e^{−ε/kT} P dε = kT ∫ e^{−x} P dx
    Ok(spectral_prefactor(spec, tau_tr) * spec.temperature * T::lit(CODATA.kb) * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainEstimate {
    pub n_pairs: u64,
    /// Seconds.
    pub total_time: f64,
    /// Molecules per second.
    pub production_rate: f64,
}

/// Number of pulse pairs needed to leave `residual` of the atoms, the
/// corresponding time at one pair per `cycle_time`, and the molecule
/// production rate `ρV(1 − residual)/(2·total_time)`.
pub fn pulse_train_estimate<T: Real>(
    spec: &EnsembleSpec<T>,
    f: T,
    cycle_time: T,
    residual: T,
) -> Result<TrainEstimate> {
    if !(f > T::zero() && f < T::one()) {
        return Err(Error::arg("f", "fraction per pulse pair must lie in (0, 1)"));
    }
    if !(cycle_time > T::zero()) {
        return Err(Error::arg("cycle_time", "must be positive"));
    }
    if !(residual > T::zero() && residual < T::one()) {
        return Err(Error::arg("residual", "must lie in (0, 1)"));
    }
    let n = (residual.ln() / (T::one() - f).ln()).ceil().max(T::one());
    let n_pairs = n.to_u64().ok_or_else(|| Error::arg("f", "pulse count overflows"))?;
    let total = n * cycle_time;
    let atoms = spec.density * spec.trap_volume;
    let rate = atoms * (T::one() - residual) / (T::lit(2.0) * total);
    Ok(TrainEstimate { n_pairs, total_time: total.to_f64_lossy(), production_rate: rate.to_f64_lossy() })
}
