//! Derivative-free maximization of the transfer efficiency over pulse and
//! detuning parameters, plus one-dimensional sweeps.
//!
//! The search runs bounded Nelder–Mead in the unit cube. It starts from a
//! Halton point set shifted by a seeded random offset, restarts from the best
//! few initial points, then refines around the incumbent with shrinking
//! simplices until the evaluation budget is spent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Integration, ScenarioConfig};
use crate::ensemble::{self, EnsembleSpec};
use crate::fano::FanoResonance;
use crate::units::{coupling_from_display, Dimension};
use crate::{Error, Real, Result};

/// Tunable scenario parameters. Values are in internal units except the
/// pump amplitude, which uses the regime's dimensionless display convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    /// Peak Stokes Rabi frequency (s⁻¹).
    OmegaS0,
    /// Peak pump amplitude, dimensionless display units.
    OmegaP0,
    TS,
    TP,
    TauS,
    TauP,
    /// One-photon detuning δ (s⁻¹).
    Delta,
    /// `ε₀ − (ω_S − ω_p)` (s⁻¹).
    TwoPhotonOffset,
    /// Collision time measured from the pulse reference time (s).
    T0,
}

pub const ALL_PARAMS: [Param; 9] = [
    Param::OmegaS0,
    Param::OmegaP0,
    Param::TS,
    Param::TP,
    Param::TauS,
    Param::TauP,
    Param::Delta,
    Param::TwoPhotonOffset,
    Param::T0,
];

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::OmegaS0 => "omega_s0",
            Param::OmegaP0 => "omega_p0",
            Param::TS => "t_s",
            Param::TP => "t_p",
            Param::TauS => "tau_s",
            Param::TauP => "tau_p",
            Param::Delta => "delta",
            Param::TwoPhotonOffset => "two_photon_offset",
            Param::T0 => "t0",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Param::OmegaS0 => Dimension::AngularFrequency,
            Param::OmegaP0 => Dimension::Dimensionless,
            Param::TS | Param::TP | Param::TauS | Param::TauP | Param::T0 => Dimension::Time,
            Param::Delta | Param::TwoPhotonOffset => Dimension::Energy,
        }
    }

    pub fn get<T: Real>(self, cfg: &ScenarioConfig<T>) -> T {
        let p = &cfg.pulses;
        match self {
            Param::OmegaS0 => p.stokes.peak,
            Param::OmegaP0 => cfg.pump_display(p.pump.peak),
            Param::TS => p.stokes.width,
            Param::TP => p.pump.width,
            Param::TauS => p.stokes.center_offset,
            Param::TauP => p.pump.center_offset,
            Param::Delta => cfg.delta,
            Param::TwoPhotonOffset => cfg.two_photon_offset,
            Param::T0 => cfg.wavepacket.t0 - p.t0,
        }
    }

    /// Sets the parameter; pulse changes also move the integration window.
    pub fn set<T: Real>(self, cfg: &mut ScenarioConfig<T>, value: T) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::arg(self.name(), "must be finite"));
        }
        let p = &mut cfg.pulses;
        match self {
            Param::OmegaS0 => p.stokes.peak = value,
            Param::OmegaP0 => {
                let gamma = cfg.resonance.map_or(T::one(), |r| r.gamma);
                let conv = cfg.regime.display_convention();
                p.pump.peak = coupling_from_display(value, conv, cfg.wavepacket.delta_eps, gamma)?.0;
            }
            Param::TS => p.stokes.width = value,
            Param::TP => p.pump.width = value,
            Param::TauS => p.stokes.center_offset = value,
            Param::TauP => p.pump.center_offset = value,
            Param::Delta => cfg.delta = value,
            Param::TwoPhotonOffset => cfg.two_photon_offset = value,
            Param::T0 => cfg.wavepacket.t0 = p.t0 + value,
        }
        if matches!(self, Param::TS | Param::TP | Param::TauS | Param::TauP) {
            refresh_window(cfg);
        }
        Ok(())
    }
}

/// Recomputes the time window and step cap for the current pulses, keeping
/// tolerances, sample count and step budget.
pub fn refresh_window<T: Real>(cfg: &mut ScenarioConfig<T>) {
    let fresh = Integration::for_scenario(&cfg.pulses, &cfg.wavepacket);
    let it = &mut cfg.integration;
    it.t_start = fresh.t_start;
    it.t_end = fresh.t_end;
    it.max_step = fresh.max_step;
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_PARAMS
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub param: Param,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective<T> {
    FinalPopulation,
    EnsembleAveraged { spec: EnsembleSpec<T>, n_nodes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem<T> {
    pub base: ScenarioConfig<T>,
    pub free: Vec<FreeParam>,
    pub objective: Objective<T>,
    pub budget: usize,
    pub seed: u64,
}

pub const DEFAULT_BUDGET: usize = 2000;

impl<T: Real> OptimizationProblem<T> {
    pub fn new(base: ScenarioConfig<T>, free: Vec<FreeParam>) -> Self {
        Self { base, free, objective: Objective::FinalPopulation, budget: DEFAULT_BUDGET, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::arg("free_params", "nothing to optimize"));
        }
        for (i, f) in self.free.iter().enumerate() {
            if !(f.lower.is_finite() && f.upper.is_finite() && f.lower < f.upper) {
                return Err(Error::arg(f.param.name(), "bounds must be finite with lower < upper"));
            }
            if self.free[..i].iter().any(|g| g.param == f.param) {
                return Err(Error::arg(f.param.name(), "listed twice"));
            }
        }
        let need = 50 * self.free.len();
        if self.budget < need {
            return Err(Error::arg("budget", format!("need at least {need} evaluations for {} parameters", self.free.len())));
        }
        self.base.validate()
    }

    /// The base scenario with the given free-parameter values applied.
    pub fn configure(&self, values: &[f64]) -> Result<ScenarioConfig<T>> {
        let mut cfg = self.base;
        for (f, &v) in self.free.iter().zip(values) {
            f.param.set(&mut cfg, T::lit(v))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn evaluate(&self, values: &[f64]) -> Result<f64> {
        let cfg = self.configure(values)?;
        let v = match self.objective {
            Objective::FinalPopulation => dynamics::final_state(&cfg)?.populations().0,
            Objective::EnsembleAveraged { spec, n_nodes } => ensemble::thermal_average(spec.kt(), n_nodes, |e| {
                dynamics::final_state(&ensemble::node_scenario(&cfg, e)).map(|s| s.populations().0)
            })?,
        };
        Ok(v.to_f64_lossy())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_params: BTreeMap<Param, f64>,
    pub best_value: f64,
    pub evaluations: usize,
    /// `(evaluation index, best value so far)`.
    pub trace: Vec<(usize, f64)>,
}

impl OptimizationResult {
    /// Scenario with the best parameters applied to `base`.
    pub fn apply<T: Real>(&self, base: &ScenarioConfig<T>) -> Result<ScenarioConfig<T>> {
        let mut cfg = *base;
        for (p, &v) in &self.best_params {
            p.set(&mut cfg, T::lit(v))?;
        }
        Ok(cfg)
    }
}

/// Maximizes the problem's objective. Integration failures count as 0.
pub fn optimize<T: Real>(problem: &OptimizationProblem<T>) -> Result<OptimizationResult> {
    problem.validate()?;
    let bounds: Vec<(f64, f64)> = problem.free.iter().map(|f| (f.lower, f.upper)).collect();
    let objective = |x: &[f64]| match problem.evaluate(x) {
        Ok(v) if v.is_finite() => v,
        Ok(_) => 0.0,
        Err(e) => {
            warn!("objective failed at {x:?}: {e}");
            0.0
        }
    };
    let start: Vec<f64> = problem
        .free
        .iter()
        .map(|f| f.param.get(&problem.base).to_f64_lossy())
        .collect();
    let s = maximize(&objective, &bounds, problem.budget, problem.seed, Some(&start));
    Ok(OptimizationResult {
        best_params: problem.free.iter().map(|f| f.param).zip(s.best_x).collect(),
        best_value: s.best_value,
        evaluations: s.evaluations,
        trace: s.trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Search {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
    pub trace: Vec<(usize, f64)>,
}

struct Evaluator<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &'a [(f64, f64)],
    budget: usize,
    count: usize,
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<(usize, f64)>,
}

impl Evaluator<'_> {
    fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.bounds).map(|(&u, &(lo, hi))| lo + u.clamp(0.0, 1.0) * (hi - lo)).collect()
    }

    fn left(&self) -> usize {
        self.budget - self.count
    }

    fn record(&mut self, u: &[f64], v: f64) {
        self.count += 1;
        if self.best.as_ref().is_none_or(|(_, b)| v > *b) {
            self.best = Some((u.to_vec(), v));
        }
        let b = self.best.as_ref().map_or(v, |(_, b)| *b);
        self.trace.push((self.count, b));
    }

    fn eval(&mut self, u: &[f64]) -> Option<f64> {
        if self.count >= self.budget {
            return None;
        }
        let v = (self.f)(&self.to_physical(u));
        self.record(u, v);
        Some(v)
    }

    /// Evaluates a batch concurrently and records it in input order.
    fn eval_batch(&mut self, us: &[Vec<f64>]) -> Vec<f64> {
        let n = us.len().min(self.left());
        let xs: Vec<Vec<f64>> = us[..n].iter().map(|u| self.to_physical(u)).collect();
        let f = self.f;
        let vals: Vec<f64> = xs.par_iter().map(|x| f(x)).collect();
        for (u, &v) in us.iter().zip(&vals) {
            self.record(u, v);
        }
        vals
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b;
        r += f * (i % base as u64) as f64;
        i /= base as u64;
    }
    r
}

/// Halton points in `[0,1)^d` shifted by a seeded uniform offset (mod 1).
pub fn shifted_halton(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=n as u64)
        .map(|i| (0..dim).map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract()).collect())
        .collect()
}

/// Bounded maximization of `f` over the box `bounds` with at most `budget`
/// evaluations. `start`, if given and inside the box, joins the initial set.
pub fn maximize(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    bounds: &[(f64, f64)],
    budget: usize,
    seed: u64,
    start: Option<&[f64]>,
) -> Search {
    let d = bounds.len();
    let mut ev = Evaluator { f, bounds, budget, count: 0, best: None, trace: Vec::new() };
    let n0 = (5 * d + 5).min(budget / 3).max(1);
    let mut init = shifted_halton(n0, d, seed);
    if let Some(s) = start {
        let u: Vec<f64> = s.iter().zip(bounds).map(|(&x, &(lo, hi))| (x - lo) / (hi - lo)).collect();
        if u.iter().all(|v| (0.0..=1.0).contains(v)) {
            init.insert(0, u);
        }
    }
    let vals = ev.eval_batch(&init);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    // stable sort keeps the lowest index first among ties
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    for &i in order.iter().take(3) {
        if ev.left() == 0 {
            break;
        }
        nelder_mead(&mut ev, &init[i], 0.15);
    }
    let mut scale = 0.05;
    while ev.left() > d && scale > 1e-4 {
        let (x, _) = ev.best.clone().expect("evaluated at least once");
        nelder_mead(&mut ev, &x, scale);
        scale *= 0.5;
    }
    let (u, best_value) = ev.best.clone().unwrap_or((vec![0.5; d], 0.0));
    debug!("search finished after {} evaluations, best {best_value}", ev.count);
    Search { best_x: ev.to_physical(&u), best_value, evaluations: ev.count, trace: ev.trace }
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// One Nelder–Mead run (maximizing) from `x0` with edge length `scale`.
fn nelder_mead(ev: &mut Evaluator, x0: &[f64], scale: f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let Some(v0) = ev.eval(x0) else { return };
    simplex.push((x0.to_vec(), v0));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += if x[k] + scale <= 1.0 { scale } else { -scale };
        clamp_unit(&mut x);
        let Some(v) = ev.eval(&x) else { return };
        simplex.push((x, v));
    }
    loop {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = simplex[0].1 - simplex[d].1;
        if size < 1e-7 || spread <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            return;
        }
        let centroid: Vec<f64> =
            (0..d).map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64).collect();
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
            clamp_unit(&mut x);
            x
        };
        let xr = along(1.0);
        let Some(vr) = ev.eval(&xr) else { return };
        if vr > simplex[0].1 {
            let xe = along(2.0);
            let Some(ve) = ev.eval(&xe) else { return };
            simplex[d] = if ve > vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr > simplex[d - 1].1 {
            simplex[d] = (xr, vr);
            continue;
        }
        let (xc, vc) = if vr > worst.1 {
            let x = along(0.5);
            let Some(v) = ev.eval(&x) else { return };
            (x, v)
        } else {
            let x = along(-0.5);
            let Some(v) = ev.eval(&x) else { return };
            (x, v)
        };
        if vc > worst.1.max(vr) {
            simplex[d] = (xc, vc);
            continue;
        }
        let best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&item.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let Some(v) = ev.eval(&x) else { return };
            *item = (x, v);
        }
    }
}

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Param(Param),
    /// Γ/δ_ε with ε_F − ε₀ held fixed.
    GammaRatio,
    /// ε_F − ε₀ (s⁻¹).
    FeshbachDetuning,
    /// Excited-state loss rate γ (s⁻¹).
    DecayRate,
    /// Fano q.
    Q,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Param(p) => p.name(),
            SweepParam::GammaRatio => "gamma_ratio",
            SweepParam::FeshbachDetuning => "feshbach_detuning",
            SweepParam::DecayRate => "gamma",
            SweepParam::Q => "q",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            SweepParam::Param(p) => p.dimension(),
            SweepParam::GammaRatio | SweepParam::Q => Dimension::Dimensionless,
            SweepParam::FeshbachDetuning => Dimension::Energy,
            SweepParam::DecayRate => Dimension::AngularFrequency,
        }
    }

    pub fn set<T: Real>(self, cfg: &mut ScenarioConfig<T>, value: T) -> Result<()> {
        let resonance = |cfg: &ScenarioConfig<T>| {
            cfg.resonance.ok_or_else(|| Error::arg(self.name(), "scenario has no resonance"))
        };
        match self {
            SweepParam::Param(p) => return p.set(cfg, value),
            SweepParam::GammaRatio => {
                let r = resonance(cfg)?;
                let pump_display = Param::OmegaP0.get(cfg);
                let gamma = value * cfg.wavepacket.delta_eps;
                cfg.resonance = Some(FanoResonance::new(r.q, gamma, r.eps_f)?);
                // keep the displayed pump amplitude, which is what the tables fix
                Param::OmegaP0.set(cfg, pump_display)?;
            }
            SweepParam::FeshbachDetuning => {
                let r = resonance(cfg)?;
                cfg.resonance = Some(FanoResonance { eps_f: cfg.wavepacket.eps0 + value, ..r });
            }
            SweepParam::DecayRate => cfg.gamma = value,
            SweepParam::Q => {
                let r = resonance(cfg)?;
                cfg.resonance = Some(FanoResonance::new(value, r.gamma, r.eps_f)?);
            }
        }
        Ok(())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_ratio" => Ok(SweepParam::GammaRatio),
            "feshbach_detuning" => Ok(SweepParam::FeshbachDetuning),
            "gamma" => Ok(SweepParam::DecayRate),
            "q" => Ok(SweepParam::Q),
            other => other.parse().map(SweepParam::Param),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub efficiency: Option<f64>,
    pub error: Option<String>,
}

/// Final `|c₁|²` along a sorted grid; failures are reported per point.
pub fn sweep<T: Real>(base: &ScenarioConfig<T>, param: SweepParam, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::arg("grid", "must not be empty"));
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::arg("grid", "must be sorted ascending"));
    }
    Ok(grid
        .par_iter()
        .map(|&v| {
            let run = || -> Result<f64> {
                let mut cfg = *base;
                param.set(&mut cfg, T::lit(v))?;
                Ok(dynamics::final_state(&cfg)?.populations().0.to_f64_lossy())
            };
            match run() {
                Ok(p) => SweepPoint { value: v, efficiency: Some(p), error: None },
                Err(e) => SweepPoint { value: v, efficiency: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}
