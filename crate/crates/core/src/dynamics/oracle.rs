//! Brute-force model: the continuum discretized into uniform energy bins,
//! integrated together with `c₁` and `c₂` without eliminating anything.
//!
//! Bin amplitudes are kept in the Schrödinger picture,
//! `b_j = √Δε·c(ε_j)·e^{−iΔ_j t}`, so
//!
//! ```text
//! i ḃ_j = Δ_j b_j − Ω_j(t) c₂
//! i ċ₂  = −Ω_S c₁ + (δ − iγ) c₂ − Σ_j Ω_j(t) b_j
//! ```
//!
//! with `Ω_j = √Δε·Ω̄(t)·g(q,ε_j)·sgn(ε_j − ε_F)` (or `√Δε·Ω̄(t)` without a
//! resonance).

use log::warn;

use super::{finish, ode, sample_grid, AmplitudeState, ScenarioConfig, TimeSeries};
use crate::source::broad_factor;
use crate::{Cplx, Error, Real, Result};

/// `ε₀ ± 6δ_ε`, widened to include `ε_F ± 3Γ` when a resonance is present.
pub fn default_oracle_window<T: Real>(cfg: &ScenarioConfig<T>) -> (T, T) {
    let wp = &cfg.wavepacket;
    let six = T::lit(6.0) * wp.delta_eps;
    let (mut lo, mut hi) = (wp.eps0 - six, wp.eps0 + six);
    if let Some(r) = cfg.resonance {
        let three = T::lit(3.0) * r.gamma;
        lo = lo.min(r.eps_f - three);
        hi = hi.max(r.eps_f + three);
    }
    (lo, hi)
}

/// Integrates the discretized three-level continuum model over `n_states`
/// bins spanning `window`. The continuum lineshape follows the resonance
/// when one is present and is flat otherwise.
pub fn full_model_oracle<T: Real>(cfg: &ScenarioConfig<T>, n_states: usize, window: (T, T)) -> Result<TimeSeries<T>> {
    if n_states < 64 {
        return Err(Error::arg("n_states", "need at least 64 continuum bins"));
    }
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::arg("window", "need a finite window with lo < hi"));
    }
    let it = cfg.integration;
    if !(it.t_start < it.t_end) {
        return Err(Error::InvalidScenario("t_start must precede t_end".into()));
    }
    let n = n_states;
    let de = (hi - lo) / T::from_usize(n).expect("size");
    if T::lit(2.0) * T::PI() / de < it.t_end - it.t_start {
        warn!(
            "continuum grid recurs after {:.3e} s, shorter than the {:.3e} s integration",
            (T::lit(2.0) * T::PI() / de).to_f64_lossy(),
            (it.t_end - it.t_start).to_f64_lossy()
        );
    }
    let sqrt_de = de.sqrt();
    let omega_sp = cfg.two_photon();
    let eps: Vec<T> = (0..n).map(|j| lo + de * (T::from_usize(j).expect("size") + T::lit(0.5))).collect();
    let detuning: Vec<T> = eps.iter().map(|&e| e - omega_sp).collect();
    let shape: Vec<T> = eps
        .iter()
        .map(|&e| sqrt_de * cfg.resonance.as_ref().map_or(T::one(), |r| broad_factor(r, e)))
        .collect();

    let zero = Cplx::new(T::zero(), T::zero());
    let mut y = vec![zero; n + 2];
    for j in 0..n {
        let a = cfg.wavepacket.amplitude(eps[j]) * sqrt_de;
        y[j + 2] = a * Cplx::from_polar(T::one(), -detuning[j] * it.t_start);
    }
    let continuum = |y: &[Cplx<T>]| y[2..].iter().fold(T::zero(), |s, b| s + b.norm_sqr());

    let i = Cplx::new(T::zero(), T::one());
    let rhs = |t: T, y: &[Cplx<T>], dy: &mut [Cplx<T>]| {
        let os = cfg.pulses.stokes_at(t);
        let ob = cfg.pulses.pump_at(t);
        let (c1, c2) = (y[0], y[1]);
        let mut feed = zero;
        for j in 0..n {
            let b = y[j + 2];
            let w = shape[j] * ob;
            feed += b * w;
            // −i(Δ_j b − Ω_j c₂)
            let h = b * detuning[j] - c2 * w;
            dy[j + 2] = Cplx::new(h.im, -h.re);
        }
        dy[0] = i * c2 * os;
        let h = -c1 * os + Cplx::new(cfg.delta, -cfg.gamma) * c2 - feed;
        dy[1] = -i * h;
    };

    let grid = sample_grid(&it);
    let mut states = vec![AmplitudeState { c1: y[0], c2: y[1], mem: zero }];
    let mut cont = vec![continuum(&y)];
    let mut buf = vec![zero; n + 2];
    let mut next = 1;
    // The bins oscillate at up to max|Δ_j|; keep a few steps per period.
    let fastest = detuning.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let mut opts = it.ode_options();
    if fastest > T::zero() {
        opts.max_step = opts.max_step.min(T::lit(2.0) / fastest);
    }
    let stats = ode::dopri5(rhs, it.t_start, it.t_end, &mut y, &opts, |d| {
        while next < grid.len() && (grid[next] <= d.t_new || next == grid.len() - 1 && d.t_new >= it.t_end) {
            d.eval(grid[next], &mut buf);
            states.push(AmplitudeState { c1: buf[0], c2: buf[1], mem: zero });
            cont.push(continuum(&buf));
            next += 1;
        }
    })?;
    if let (Some(s), Some(c)) = (states.last_mut(), cont.last_mut()) {
        *s = AmplitudeState { c1: y[0], c2: y[1], mem: zero };
        *c = continuum(&y);
    }
    Ok(finish(cfg, grid, states, Some(cont), stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionReport<T> {
    pub n_states: usize,
    pub coarse: T,
    pub fine: T,
    /// `|fine − coarse| / max(fine, 1e-12)`.
    pub relative_change: T,
    pub resolved: bool,
}

/// Runs the oracle at `n_states` and `2·n_states` over the same window and
/// compares the final `|c₁|²`. An under-resolved grid is reported, not
/// treated as an error.
pub fn oracle_resolution_check<T: Real>(
    cfg: &ScenarioConfig<T>,
    n_states: usize,
    window: (T, T),
    tolerance: T,
) -> Result<ResolutionReport<T>> {
    let coarse = full_model_oracle(cfg, n_states, window)?.efficiency();
    let fine = full_model_oracle(cfg, 2 * n_states, window)?.efficiency();
    let relative_change = (fine - coarse).abs() / fine.max(T::lit(1e-12));
    let resolved = relative_change <= tolerance;
    if !resolved {
        warn!("oracle grid of {n_states} bins is under-resolved (change {:.2e})", relative_change.to_f64_lossy());
    }
    Ok(ResolutionReport { n_states, coarse, fine, relative_change, resolved })
}
