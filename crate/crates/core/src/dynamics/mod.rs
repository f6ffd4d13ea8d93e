//! Time evolution of the reduced two-amplitude models and of the discretized
//! continuum oracle.
//!
//! In the rotating frame, with `Ω̄(t)` the pump coupling and `Ω_S(t)` the
//! Stokes Rabi frequency,
//!
//! ```text
//! i ċ₁ = −Ω_S c₂
//! i ċ₂ = −Ω_S c₁ + (δ − iγ) c₂ − i L(t) − S(t)
//! ```
//!
//! where the back-stimulation `L` is `π|Ω̄|² c₂` for a flat continuum,
//! `π|Ω̄|²·B·c₂` with `B = 1 + (q−i)²/(1 + 2iΔ_F/Γ)` for a broad resonance,
//! and `π|Ω̄|² c₂ + (πΓ/2)(q−i)² Ω̄ m` for a narrow one, with the memory
//! `ṁ = Ω̄ c₂ − (Γ/2 + iΔ_F) m`. Here `Δ_F = ε_F − (ω_S − ω_p)`.

pub mod ode;
mod oracle;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::fano::FanoResonance;
use crate::pulses::PulsePair;
use crate::source::{self, SourceParams, Wavepacket};
use crate::units::{self, ContinuumRabi, PumpDisplay};
use crate::{Cplx, Error, Real, Result};

pub use ode::{OdeOptions, OdeStats};
pub use oracle::{default_oracle_window, full_model_oracle, oracle_resolution_check, ResolutionReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[serde(rename = "none")]
    NoResonance,
    Broad,
    Narrow,
    FullOracle,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NoResonance => "none",
            Regime::Broad => "broad",
            Regime::Narrow => "narrow",
            Regime::FullOracle => "full_oracle",
        }
    }

    pub fn display_convention(self) -> PumpDisplay {
        match self {
            Regime::Narrow => PumpDisplay::Narrow,
            _ => PumpDisplay::Broad,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Regime::NoResonance),
            "broad" => Ok(Regime::Broad),
            "narrow" => Ok(Regime::Narrow),
            "full_oracle" => Ok(Regime::FullOracle),
            other => Err(Error::arg("regime", format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration<T> {
    pub t_start: T,
    pub t_end: T,
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub max_steps: usize,
    /// Number of uniformly spaced output samples (including both ends).
    pub samples: usize,
}

impl<T: Real> Integration<T> {
    /// Window covering both pulses to `6·max(T)`, step capped at a quarter
    /// of the shortest of `T_S`, `T_p` and the wavepacket duration `√2/δ`.
    pub fn for_scenario(pulses: &PulsePair<T>, wavepacket: &Wavepacket<T>) -> Self {
        let (t_start, t_end) = pulses.default_window();
        let packet = T::SQRT_2() / wavepacket.delta_eps;
        let max_step = pulses.stokes.width.min(pulses.pump.width).min(packet) * T::lit(0.25);
        Self {
            t_start,
            t_end,
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_step,
            max_steps: 20_000_000,
            samples: 1001,
        }
    }

    fn ode_options(&self) -> OdeOptions<T> {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            initial_step: None,
            max_steps: self.max_steps,
        }
    }
}

/// Settings of the discretized-continuum oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings<T> {
    pub n_states: usize,
    /// Energy window `(lo, hi)`; `None` selects [`default_oracle_window`].
    pub window: Option<(T, T)>,
}

impl<T> Default for OracleSettings<T> {
    fn default() -> Self {
        Self { n_states: 4096, window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig<T> {
    pub regime: Regime,
    pub resonance: Option<FanoResonance<T>>,
    /// Pulse envelopes; the pump peak is the coupling `μ_2ε E_p/ħ`.
    pub pulses: PulsePair<T>,
    pub wavepacket: Wavepacket<T>,
    /// One-photon detuning δ (s⁻¹).
    pub delta: T,
    /// Excited-state loss rate γ (s⁻¹).
    pub gamma: T,
    /// `ε₀ − (ω_S − ω_p)` (s⁻¹).
    pub two_photon_offset: T,
    pub integration: Integration<T>,
    pub oracle: OracleSettings<T>,
}

impl<T: Real> ScenarioConfig<T> {
    /// A scenario with default integration controls, zero detunings and the
    /// collision time at the midpoint between the pulse peaks.
    pub fn new(
        regime: Regime,
        resonance: Option<FanoResonance<T>>,
        pulses: PulsePair<T>,
        eps0: T,
        delta_eps: T,
        gamma: T,
    ) -> Result<Self> {
        let wavepacket = Wavepacket::new(eps0, delta_eps, pulses.midpoint())?;
        let cfg = Self {
            regime,
            resonance,
            pulses,
            wavepacket,
            delta: T::zero(),
            gamma,
            two_photon_offset: T::zero(),
            integration: Integration::for_scenario(&pulses, &wavepacket),
            oracle: OracleSettings::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        match (self.regime, self.resonance.is_some()) {
            (Regime::Broad | Regime::Narrow, false) => return bad("broad and narrow regimes need a resonance"),
            (Regime::NoResonance, true) => return bad("the no-resonance regime takes no resonance"),
            _ => {}
        }
        let it = &self.integration;
        if !(it.t_start < self.wavepacket.t0 && self.wavepacket.t0 < it.t_end) {
            return bad("collision time must lie inside (t_start, t_end)");
        }
        let w = self.pulses.stokes.width.max(self.pulses.pump.width);
        if it.t_end - it.t_start < T::lit(6.0) * w {
            return bad("integration window must span at least 6 pulse widths");
        }
        if !(it.rel_tol > T::zero() && it.abs_tol > T::zero() && it.max_step > T::zero()) {
            return bad("rel_tol, abs_tol and max_step must be positive");
        }
        if it.samples < 2 {
            return bad("need at least 2 output samples");
        }
        if !(self.gamma >= T::zero()) || !self.delta.is_finite() || !self.two_photon_offset.is_finite() {
            return bad("gamma must be non-negative and detunings finite");
        }
        Ok(())
    }

    /// `ω_S − ω_p`.
    pub fn two_photon(&self) -> T {
        self.wavepacket.eps0 - self.two_photon_offset
    }

    /// `Δ_F = ε_F − (ω_S − ω_p)`.
    pub fn feshbach_offset(&self) -> Option<T> {
        self.resonance.map(|r| r.eps_f - self.two_photon())
    }

    pub fn source_params(&self, coupling: ContinuumRabi<T>) -> SourceParams<T> {
        SourceParams {
            wavepacket: self.wavepacket,
            resonance: self.resonance,
            two_photon: self.two_photon(),
            pump_coupling: coupling,
        }
    }

    /// Dimensionless pump amplitude of a coupling in this regime's convention.
    pub fn pump_display(&self, coupling: T) -> T {
        let gamma = self.resonance.map_or(T::one(), |r| r.gamma);
        units::display_pump_units(ContinuumRabi(coupling), self.regime.display_convention(), self.wavepacket.delta_eps, gamma)
            .unwrap_or(T::nan())
    }

    /// The same scenario shifted rigidly in time.
    pub fn shifted(&self, dt: T) -> Self {
        let mut out = *self;
        out.pulses = self.pulses.shifted(dt);
        out.wavepacket.t0 += dt;
        out.integration.t_start += dt;
        out.integration.t_end += dt;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AmplitudeState<T> {
    pub c1: Cplx<T>,
    pub c2: Cplx<T>,
    /// Memory variable of the narrow model (zero elsewhere).
    pub mem: Cplx<T>,
}

impl<T: Real> AmplitudeState<T> {
    pub fn zero() -> Self {
        let z = Cplx::new(T::zero(), T::zero());
        Self { c1: z, c2: z, mem: z }
    }

    pub fn populations(&self) -> (T, T) {
        (self.c1.norm_sqr(), self.c2.norm_sqr())
    }

    fn to_array(self) -> [Cplx<T>; 3] {
        [self.c1, self.c2, self.mem]
    }

    fn from_slice(y: &[Cplx<T>]) -> Self {
        Self { c1: y[0], c2: y[1], mem: y.get(2).copied().unwrap_or_default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<T>,
    pub states: Vec<AmplitudeState<T>>,
    /// `(Ω_S(t), pump display amplitude)` at each sample.
    pub pulses_sampled: Vec<(T, T)>,
    pub populations: Vec<(T, T)>,
    /// Summed continuum population (oracle runs only).
    pub continuum_population: Option<Vec<T>>,
    pub stats: OdeStats,
}

/// CSV header of [`TimeSeries::write_csv`].
pub const CSV_HEADER: &str = "t_s,re_c1,im_c1,re_c2,im_c2,pop_c1,pop_c2,omega_s_per_s,pump_display";

impl<T: Real> TimeSeries<T> {
    pub fn final_state(&self) -> AmplitudeState<T> {
        *self.states.last().expect("time series is never empty")
    }

    /// Final target-state population `|c₁|²`.
    pub fn efficiency(&self) -> T {
        self.final_state().populations().0
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.times.len() {
            let s = &self.states[i];
            let (p1, p2) = self.populations[i];
            let (om, pd) = self.pulses_sampled[i];
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i], s.c1.re, s.c1.im, s.c2.re, s.c2.im, p1, p2, om, pd
            )?;
        }
        Ok(())
    }
}

/// Precomputed constants of one reduced model.
#[derive(Debug, Clone, Copy)]
struct Reduced<T> {
    regime: Regime,
    cfg: ScenarioConfig<T>,
    loss_factor: Cplx<T>,
    source_factor: T,
    kernel: Cplx<T>,
    decay: Cplx<T>,
}

impl<T: Real> Reduced<T> {
    fn new(cfg: &ScenarioConfig<T>, regime: Regime) -> Result<Self> {
        let one = Cplx::new(T::one(), T::zero());
        let zero = Cplx::new(T::zero(), T::zero());
        let mut m = Self { regime, cfg: *cfg, loss_factor: one, source_factor: T::one(), kernel: zero, decay: zero };
        match regime {
            Regime::NoResonance => {}
            Regime::Broad | Regime::Narrow => {
                let r = cfg
                    .resonance
                    .ok_or_else(|| Error::InvalidScenario(format!("{} regime needs a resonance", regime.name())))?;
                let df = r.eps_f - cfg.two_photon();
                let qi = Cplx::new(r.q, -T::one());
                if regime == Regime::Broad {
                    let den = Cplx::new(T::one(), T::lit(2.0) * df / r.gamma);
                    m.loss_factor = one + qi * qi / den;
                    m.source_factor = source::broad_factor(&r, cfg.wavepacket.eps0);
                } else {
                    m.kernel = qi * qi * (T::PI() * r.gamma * T::lit(0.5));
                    m.decay = Cplx::new(r.gamma * T::lit(0.5), df);
                }
            }
            Regime::FullOracle => return Err(Error::InvalidScenario("the oracle has no reduced model".into())),
        }
        Ok(m)
    }

    fn source(&self, t: T, ob: T) -> Cplx<T> {
        let p = self.cfg.source_params(ContinuumRabi(ob));
        match self.regime {
            Regime::Narrow => source::narrow_unchecked(&p, self.cfg.resonance.as_ref().expect("checked"), t),
            _ => source::source_no_res(&p, t) * self.source_factor,
        }
    }

    fn derivative(&self, t: T, y: &[Cplx<T>], dy: &mut [Cplx<T>]) {
        let i = Cplx::new(T::zero(), T::one());
        let cfg = &self.cfg;
        let os = cfg.pulses.stokes_at(t);
        let ob = cfg.pulses.pump_at(t);
        let (c1, c2, m) = (y[0], y[1], y[2]);
        let mut loss = self.loss_factor * c2 * (T::PI() * ob * ob);
        if self.regime == Regime::Narrow {
            loss += self.kernel * m * ob;
            dy[2] = c2 * ob - self.decay * m;
        } else {
            dy[2] = Cplx::new(T::zero(), T::zero());
        }
        dy[0] = i * c2 * os;
        let h = -c1 * os + Cplx::new(cfg.delta, -cfg.gamma) * c2 - i * loss - self.source(t, ob);
        dy[1] = -i * h;
    }
}

fn rhs<T: Real>(cfg: &ScenarioConfig<T>, regime: Regime, t: T, s: &AmplitudeState<T>) -> Result<AmplitudeState<T>> {
    let m = Reduced::new(cfg, regime)?;
    let mut dy = [Cplx::new(T::zero(), T::zero()); 3];
    m.derivative(t, &s.to_array(), &mut dy);
    Ok(AmplitudeState::from_slice(&dy))
}

/// Flat-continuum right-hand side; any resonance in `cfg` is ignored.
pub fn rhs_no_res<T: Real>(cfg: &ScenarioConfig<T>, t: T, s: &AmplitudeState<T>) -> AmplitudeState<T> {
    let cfg = ScenarioConfig { resonance: None, ..*cfg };
    rhs(&cfg, Regime::NoResonance, t, s).expect("flat continuum needs no resonance")
}

/// Broad-resonance right-hand side.
pub fn rhs_broad<T: Real>(cfg: &ScenarioConfig<T>, t: T, s: &AmplitudeState<T>) -> Result<AmplitudeState<T>> {
    rhs(cfg, Regime::Broad, t, s)
}

/// Narrow-resonance right-hand side, including the memory equation.
pub fn rhs_narrow<T: Real>(cfg: &ScenarioConfig<T>, t: T, s: &AmplitudeState<T>) -> Result<AmplitudeState<T>> {
    rhs(cfg, Regime::Narrow, t, s)
}

/// Integrates the scenario's regime from rest (`c₁ = c₂ = 0`).
pub fn integrate<T: Real>(cfg: &ScenarioConfig<T>) -> Result<TimeSeries<T>> {
    if cfg.regime == Regime::FullOracle {
        cfg.validate()?;
        let window = cfg.oracle.window.unwrap_or_else(|| default_oracle_window(cfg));
        return full_model_oracle(cfg, cfg.oracle.n_states, window);
    }
    integrate_from(cfg, AmplitudeState::zero())
}

/// Final state only, without storing the sampled series.
pub fn final_state<T: Real>(cfg: &ScenarioConfig<T>) -> Result<AmplitudeState<T>> {
    if cfg.regime == Regime::FullOracle {
        return integrate(cfg).map(|s| s.final_state());
    }
    let mut c = *cfg;
    c.integration.samples = 2;
    integrate_from(&c, AmplitudeState::zero()).map(|s| s.final_state())
}

/// Integrates a reduced model from an arbitrary initial state.
pub fn integrate_from<T: Real>(cfg: &ScenarioConfig<T>, init: AmplitudeState<T>) -> Result<TimeSeries<T>> {
    cfg.validate()?;
    let model = Reduced::new(cfg, cfg.regime)?;
    let it = cfg.integration;
    let mut y = init.to_array();
    let grid = sample_grid(&it);
    let mut states = Vec::with_capacity(grid.len());
    states.push(init);
    let mut next = 1;
    let mut buf = [Cplx::new(T::zero(), T::zero()); 3];
    let stats = ode::dopri5(
        |t, y, dy| model.derivative(t, y, dy),
        it.t_start,
        it.t_end,
        &mut y,
        &it.ode_options(),
        |d| {
            while next < grid.len() && (grid[next] <= d.t_new || next == grid.len() - 1 && d.t_new >= it.t_end) {
                d.eval(grid[next], &mut buf);
                states.push(AmplitudeState::from_slice(&buf));
                next += 1;
            }
        },
    )?;
    if let Some(last) = states.last_mut() {
        *last = AmplitudeState::from_slice(&y);
    }
    Ok(finish(cfg, grid, states, None, stats))
}

fn sample_grid<T: Real>(it: &Integration<T>) -> Vec<T> {
    let n = it.samples.max(2);
    let span = it.t_end - it.t_start;
    let last = T::from_usize(n - 1).expect("size");
    let mut g: Vec<T> = (0..n).map(|k| it.t_start + span * T::from_usize(k).expect("size") / last).collect();
    g[n - 1] = it.t_end;
    g
}

fn finish<T: Real>(
    cfg: &ScenarioConfig<T>,
    times: Vec<T>,
    states: Vec<AmplitudeState<T>>,
    continuum_population: Option<Vec<T>>,
    stats: OdeStats,
) -> TimeSeries<T> {
    let pulses_sampled = times
        .iter()
        .map(|&t| (cfg.pulses.stokes_at(t), cfg.pump_display(cfg.pulses.pump_at(t))))
        .collect();
    let populations = states.iter().map(|s| s.populations()).collect();
    TimeSeries { times, states, pulses_sampled, populations, continuum_population, stats }
}

#[cfg(test)]
mod tests;
