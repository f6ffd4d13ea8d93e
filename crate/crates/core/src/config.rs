//! Run configuration documents.
//!
//! A configuration is a JSON object. Physical quantities are either bare
//! numbers, read in internal units (energies in s⁻¹, times in s, ...), or
//! strings `"<value> <unit>"` such as `"10 uK"` or `"1.4 us"`. Every problem
//! found while reading a document is reported at once, each with its field
//! path. Serializing writes internal units only, so reading a serialized
//! config gives back the same config exactly.

use std::fmt::Display;
use std::sync::OnceLock;

use serde_json::{json, Map, Value};

use crate::dynamics::{Integration, OracleSettings, Regime, ScenarioConfig};
use crate::ensemble::{EnsembleSpec, DEFAULT_RESIDUAL};
use crate::fano::FanoResonance;
use crate::optimizer::{FreeParam, Objective, OptimizationProblem, Param, SweepParam, DEFAULT_BUDGET};
use crate::pulses::{default_overlap_threshold, GaussianPulse, PulsePair, PulseRole};
use crate::units::{self, ContinuumRabi, Dimension, UnitValue};
use crate::{Error, Result, Scenario};

/// Presets shipped with the crate, addressed as `preset:<name>`.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1_none", include_str!("../presets/table1_none.json")),
    ("table1_broad", include_str!("../presets/table1_broad.json")),
    ("table1_narrow", include_str!("../presets/table1_narrow.json")),
    ("table1_narrow_detuned", include_str!("../presets/table1_narrow_detuned.json")),
    ("table2_none", include_str!("../presets/table2_none.json")),
    ("table2_avg_broad", include_str!("../presets/table2_avg_broad.json")),
    ("table2_narrow", include_str!("../presets/table2_narrow.json")),
    ("li6_estimate", include_str!("../presets/li6_estimate.json")),
];

pub fn preset(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::arg("preset", format!("unknown preset `{name}`")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSettings {
    pub spec: EnsembleSpec<f64>,
    pub n_nodes: usize,
    /// Transfer time; `None` takes the pulse overlap time.
    pub tau_tr: Option<f64>,
    /// Time between pulse pairs of a train.
    pub cycle_time: Option<f64>,
    pub residual: f64,
    /// Average efficiency to use instead of computing it.
    pub p_avg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    FinalPopulation,
    EnsembleAveraged,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::FinalPopulation => "final_population",
            ObjectiveKind::EnsembleAveraged => "ensemble_averaged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSettings {
    /// Sorted by parameter.
    pub free: Vec<FreeParam>,
    pub objective: ObjectiveKind,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub param: SweepParam,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub scenario: Scenario,
    /// Bound-bound Stokes dipole (esu·cm).
    pub mu21: Option<f64>,
    /// Continuum dipole for runs without a resonance (esu·cm·s^1/2).
    pub mu2eps: Option<f64>,
    /// Envelope level defining the transfer time.
    pub overlap_threshold: f64,
    pub ensemble: Option<EnsembleSettings>,
    pub optimize: Option<OptimizeSettings>,
    pub sweep: Option<SweepSettings>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v)
    }

    /// Reads `preset:<name>` or a file path, then applies `key=value`
    /// overrides.
    pub fn load(source: &str, overrides: &[String]) -> Result<Self> {
        let text = match source.strip_prefix("preset:") {
            Some(name) => preset(name)?.to_string(),
            None => std::fs::read_to_string(source)?,
        };
        let mut v: Value = serde_json::from_str(&text)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let mut w = Walker::default();
        let out = w.document(v);
        match out {
            Some(cfg) if w.errors.is_empty() => Ok(cfg),
            _ => Err(Error::config(w.errors)),
        }
    }

    /// The continuum dipole used for pump intensities.
    pub fn pump_dipole(&self) -> Option<f64> {
        match self.scenario.resonance {
            Some(r) => r.mu2eps.or(self.mu2eps),
            None => self.mu2eps,
        }
    }

    /// Peak Stokes intensity, W/cm².
    pub fn stokes_intensity(&self) -> Option<f64> {
        self.mu21.and_then(|mu| units::stokes_intensity(self.scenario.pulses.stokes.peak, mu).ok())
    }

    /// Peak pump intensity, W/cm².
    pub fn pump_intensity(&self) -> Option<f64> {
        let coupling = ContinuumRabi(self.scenario.pulses.pump.peak);
        self.pump_dipole().and_then(|mu| units::pump_intensity(coupling, mu).ok())
    }

    /// Transfer time: the configured one, else the pulse overlap time.
    pub fn tau_tr(&self) -> f64 {
        self.ensemble
            .and_then(|e| e.tau_tr)
            .unwrap_or_else(|| self.scenario.pulses.overlap_time_at(self.overlap_threshold))
    }

    pub fn problem(&self) -> Result<OptimizationProblem<f64>> {
        let o = self
            .optimize
            .as_ref()
            .ok_or_else(|| Error::config(vec!["optimize: section required for this command".into()]))?;
        let objective = match o.objective {
            ObjectiveKind::FinalPopulation => Objective::FinalPopulation,
            ObjectiveKind::EnsembleAveraged => {
                let e = self.ensemble.ok_or_else(|| {
                    Error::config(vec!["ensemble: required by the ensemble_averaged objective".into()])
                })?;
                Objective::EnsembleAveraged { spec: e.spec, n_nodes: e.n_nodes }
            }
        };
        Ok(OptimizationProblem {
            base: self.scenario,
            free: o.free.clone(),
            objective,
            budget: o.budget,
            seed: o.seed,
        })
    }

    /// The document in internal units.
    pub fn to_value(&self) -> Value {
        let s = &self.scenario;
        let mut doc = Map::new();
        doc.insert("name".into(), json!(self.name));
        doc.insert("regime".into(), json!(s.regime.name()));
        if let Some(r) = s.resonance {
            let mut m = Map::new();
            m.insert("q".into(), json!(r.q));
            m.insert("gamma".into(), json!(r.gamma));
            m.insert("eps_f".into(), json!(r.eps_f));
            match (r.mu2b, r.mu2eps) {
                (Some(b), _) => {
                    m.insert("mu2b".into(), json!(b));
                }
                (None, Some(e)) => {
                    m.insert("mu2eps".into(), json!(e));
                }
                _ => {}
            }
            doc.insert("resonance".into(), Value::Object(m));
        }
        doc.insert(
            "wavepacket".into(),
            json!({
                "eps0": s.wavepacket.eps0,
                "delta_eps": s.wavepacket.delta_eps,
                "collision_time": s.wavepacket.t0,
            }),
        );
        let p = &s.pulses;
        doc.insert(
            "pulses".into(),
            json!({
                "t0": p.t0,
                "overlap_threshold": self.overlap_threshold,
                "stokes": {"peak": p.stokes.peak, "width": p.stokes.width, "offset": p.stokes.center_offset},
                "pump": {"coupling": p.pump.peak, "width": p.pump.width, "offset": p.pump.center_offset},
            }),
        );
        doc.insert("delta".into(), json!(s.delta));
        doc.insert("two_photon_offset".into(), json!(s.two_photon_offset));
        doc.insert("decay_rate".into(), json!(s.gamma));
        let mut dip = Map::new();
        if let Some(m) = self.mu21 {
            dip.insert("mu21".into(), json!(m));
        }
        if let Some(m) = self.mu2eps {
            dip.insert("mu2eps".into(), json!(m));
        }
        if !dip.is_empty() {
            doc.insert("dipoles".into(), Value::Object(dip));
        }
        let it = &s.integration;
        doc.insert(
            "integration".into(),
            json!({
                "t_start": it.t_start,
                "t_end": it.t_end,
                "rel_tol": it.rel_tol,
                "abs_tol": it.abs_tol,
                "max_step": it.max_step,
                "max_steps": it.max_steps,
                "samples": it.samples,
            }),
        );
        let mut oracle = Map::new();
        oracle.insert("n_states".into(), json!(s.oracle.n_states));
        if let Some((lo, hi)) = s.oracle.window {
            oracle.insert("window".into(), json!([lo, hi]));
        }
        doc.insert("oracle".into(), Value::Object(oracle));
        if let Some(e) = &self.ensemble {
            let mut m = Map::new();
            m.insert("temperature".into(), json!(e.spec.temperature));
            m.insert("density".into(), json!(e.spec.density));
            m.insert("reduced_mass".into(), json!(e.spec.reduced_mass));
            m.insert("trap_volume".into(), json!(e.spec.trap_volume));
            m.insert("n_nodes".into(), json!(e.n_nodes));
            m.insert("residual".into(), json!(e.residual));
            for (k, v) in [("tau_tr", e.tau_tr), ("cycle_time", e.cycle_time), ("p_avg", e.p_avg)] {
                if let Some(v) = v {
                    m.insert(k.into(), json!(v));
                }
            }
            doc.insert("ensemble".into(), Value::Object(m));
        }
        if let Some(o) = &self.optimize {
            let free: Map<String, Value> =
                o.free.iter().map(|f| (f.param.name().to_string(), json!([f.lower, f.upper]))).collect();
            doc.insert(
                "optimize".into(),
                json!({"free": free, "objective": o.objective.name(), "budget": o.budget, "seed": o.seed}),
            );
        }
        if let Some(sw) = &self.sweep {
            doc.insert("sweep".into(), json!({"param": sw.param.name(), "grid": sw.grid}));
        }
        Value::Object(doc)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("config serializes")
    }
}

/// Sets `a.b.c=value` in a raw document. The value is read as JSON when it
/// parses, as a string otherwise; intermediate objects are created.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::arg("set", format!("expected key=value, got `{assignment}`")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::arg("set", format!("bad key path `{path}`")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    for (i, k) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::arg("set", format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("non-empty key path")
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn empty() -> &'static Map<String, Value> {
    static EMPTY: OnceLock<Map<String, Value>> = OnceLock::new();
    EMPTY.get_or_init(Map::new)
}

#[derive(Default)]
struct Walker {
    errors: Vec<String>,
}

impl Walker {
    fn fail(&mut self, path: &str, msg: impl Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    /// The object under `key`. A missing section reads as empty so that all
    /// of its required fields get reported.
    fn section<'a>(&mut self, m: &'a Map<String, Value>, path: &str, key: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let p = join(path, key);
        let obj = match m.get(key) {
            None | Some(Value::Null) => empty(),
            Some(Value::Object(o)) => o,
            Some(_) => {
                self.fail(&p, "expected an object");
                return None;
            }
        };
        self.keys(obj, &p, allowed);
        Some(obj)
    }

    fn optional_section<'a>(
        &mut self,
        m: &'a Map<String, Value>,
        path: &str,
        key: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        match m.get(key) {
            None | Some(Value::Null) => None,
            _ => self.section(m, path, key, allowed),
        }
    }

    fn keys(&mut self, m: &Map<String, Value>, path: &str, allowed: &[&str]) {
        for k in m.keys() {
            if !allowed.contains(&k.as_str()) {
                self.fail(&join(path, k), "unknown key");
            }
        }
    }

    fn value_as(&mut self, v: &Value, path: &str, dim: Dimension) -> Option<f64> {
        match v {
            Value::Number(n) => match n.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.fail(path, "not a finite number");
                    None
                }
            },
            Value::String(s) => match UnitValue::parse(s, dim) {
                Ok(u) => Some(u.to_internal()),
                Err(e) => {
                    self.fail(path, format!("{e} (expected {dim})"));
                    None
                }
            },
            _ => {
                self.fail(path, "expected a number or a \"<value> <unit>\" string");
                None
            }
        }
    }

    fn quantity(&mut self, m: &Map<String, Value>, path: &str, key: &str, dim: Dimension, required: bool) -> Option<f64> {
        let p = join(path, key);
        match m.get(key) {
            None | Some(Value::Null) => {
                if required {
                    self.fail(&p, "missing required field");
                }
                None
            }
            Some(v) => self.value_as(v, &p, dim),
        }
    }

    fn count(&mut self, m: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        let v = m.get(key)?;
        let n = v.as_u64();
        if n.is_none() {
            self.fail(&join(path, key), "expected a non-negative integer");
        }
        n
    }

    fn string<'a>(&mut self, m: &'a Map<String, Value>, path: &str, key: &str, required: bool) -> Option<&'a str> {
        match m.get(key) {
            None | Some(Value::Null) => {
                if required {
                    self.fail(&join(path, key), "missing required field");
                }
                None
            }
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.fail(&join(path, key), "expected a string");
                None
            }
        }
    }

    fn check<T>(&mut self, path: &str, r: Result<T>) -> Option<T> {
        r.map_err(|e| self.fail(path, e)).ok()
    }

    fn document(&mut self, v: &Value) -> Option<RunConfig> {
        use Dimension as D;
        let Some(doc) = v.as_object() else {
            self.fail("(root)", "expected an object");
            return None;
        };
        self.keys(
            doc,
            "",
            &[
                "name",
                "regime",
                "resonance",
                "wavepacket",
                "pulses",
                "delta",
                "two_photon_offset",
                "decay_rate",
                "dipoles",
                "integration",
                "oracle",
                "ensemble",
                "optimize",
                "sweep",
            ],
        );
        let name = self.string(doc, "", "name", false).unwrap_or("unnamed").to_string();
        let regime = self
            .string(doc, "", "regime", true)
            .and_then(|s| self.check("regime", s.parse::<Regime>()));

        let wp = self.section(doc, "", "wavepacket", &["eps0", "delta_eps", "collision_time"]);
        let (eps0, delta_eps, collision) = match wp {
            Some(m) => (
                self.quantity(m, "wavepacket", "eps0", D::Energy, true),
                self.quantity(m, "wavepacket", "delta_eps", D::Energy, true),
                self.quantity(m, "wavepacket", "collision_time", D::Time, false),
            ),
            None => (None, None, None),
        };

        let resonance = self.resonance(doc, regime, eps0);

        let dipoles = self.optional_section(doc, "", "dipoles", &["mu21", "mu2eps"]);
        let (mu21, mu2eps) = match dipoles {
            Some(m) => (
                self.quantity(m, "dipoles", "mu21", D::Dipole, false),
                self.quantity(m, "dipoles", "mu2eps", D::ContinuumDipole, false),
            ),
            None => (None, None),
        };

        let pulses_sec = self.section(doc, "", "pulses", &["t0", "overlap_threshold", "stokes", "pump"]);
        let mut pulses = None;
        let mut overlap_threshold = default_overlap_threshold::<f64>();
        if let Some(pm) = pulses_sec {
            let t0 = self.quantity(pm, "pulses", "t0", D::Time, false).unwrap_or(0.0);
            if let Some(x) = self.quantity(pm, "pulses", "overlap_threshold", D::Dimensionless, false) {
                if x > 0.0 && x < 1.0 {
                    overlap_threshold = x;
                } else {
                    self.fail("pulses.overlap_threshold", "must lie in (0, 1)");
                }
            }
            let stokes = self.section(pm, "pulses", "stokes", &["peak", "width", "offset"]).and_then(|m| {
                let peak = self.quantity(m, "pulses.stokes", "peak", D::AngularFrequency, true);
                let width = self.quantity(m, "pulses.stokes", "width", D::Time, true);
                let offset = self.quantity(m, "pulses.stokes", "offset", D::Time, true);
                let (peak, width, offset) = (peak?, width?, offset?);
                self.check("pulses.stokes", GaussianPulse::new(peak, offset, width, PulseRole::Stokes))
            });
            let pump = self
                .section(pm, "pulses", "pump", &["coupling", "display", "intensity", "width", "offset"])
                .and_then(|m| {
                    let width = self.quantity(m, "pulses.pump", "width", D::Time, true);
                    let offset = self.quantity(m, "pulses.pump", "offset", D::Time, true);
                    let peak = self.pump_peak(m, regime, resonance.flatten(), delta_eps, mu2eps);
                    let (peak, width, offset) = (peak?, width?, offset?);
                    self.check("pulses.pump", GaussianPulse::new(peak, offset, width, PulseRole::Pump))
                });
            if let (Some(s), Some(p)) = (stokes, pump) {
                pulses = self.check("pulses", PulsePair::new(s, p, t0));
            }
        }

        let delta = self.quantity(doc, "", "delta", D::Energy, false).unwrap_or(0.0);
        let two_photon_offset = self.quantity(doc, "", "two_photon_offset", D::Energy, false).unwrap_or(0.0);
        let gamma = self.quantity(doc, "", "decay_rate", D::AngularFrequency, true);

        let integ = self.optional_section(
            doc,
            "",
            "integration",
            &["t_start", "t_end", "rel_tol", "abs_tol", "max_step", "max_steps", "samples"],
        );
        let oracle = self.oracle(doc);
        let ensemble = self.ensemble(doc);
        let optimize = self.optimize(doc);
        let sweep = self.sweep(doc);

        let (regime, resonance, pulses, eps0, delta_eps, gamma) =
            (regime?, resonance?, pulses?, eps0?, delta_eps?, gamma?);
        let mut sc = self.check("(scenario)", ScenarioConfig::new(regime, resonance, pulses, eps0, delta_eps, gamma))?;
        if let Some(t) = collision {
            sc.wavepacket.t0 = t;
        }
        sc.delta = delta;
        sc.two_photon_offset = two_photon_offset;
        if let Some(m) = integ {
            self.integration(m, &mut sc.integration);
        }
        sc.oracle = oracle?;
        self.check("(scenario)", sc.validate())?;
        Some(RunConfig {
            name,
            scenario: sc,
            mu21,
            mu2eps,
            overlap_threshold,
            ensemble: ensemble?,
            optimize: optimize?,
            sweep: sweep?,
        })
    }

    /// `Some(None)` when the regime takes no resonance.
    fn resonance(&mut self, doc: &Map<String, Value>, regime: Option<Regime>, eps0: Option<f64>) -> Option<Option<FanoResonance<f64>>> {
        use Dimension as D;
        let allowed = ["q", "gamma", "eps_f", "eps_f_offset", "mu2b", "mu2eps"];
        let m = match regime {
            Some(Regime::Broad | Regime::Narrow) => self.section(doc, "", "resonance", &allowed)?,
            Some(Regime::NoResonance) => {
                if doc.get("resonance").is_some_and(|v| !v.is_null()) {
                    self.fail("resonance", "not allowed with regime `none`");
                    return None;
                }
                return Some(None);
            }
            _ => match self.optional_section(doc, "", "resonance", &allowed) {
                Some(m) => m,
                None => return Some(None),
            },
        };
        let p = "resonance";
        let q = self.quantity(m, p, "q", D::Dimensionless, true);
        let gamma = self.quantity(m, p, "gamma", D::Energy, true);
        let abs = self.quantity(m, p, "eps_f", D::Energy, false);
        let rel = self.quantity(m, p, "eps_f_offset", D::Energy, false);
        let mu2b = self.quantity(m, p, "mu2b", D::Dipole, false);
        let mu2eps = self.quantity(m, p, "mu2eps", D::ContinuumDipole, false);
        let eps_f = match (abs, rel) {
            (Some(a), None) => Some(a),
            (None, Some(r)) => eps0.map(|e| e + r),
            (Some(_), Some(_)) => {
                self.fail(p, "give either eps_f or eps_f_offset, not both");
                None
            }
            (None, None) => {
                if !m.contains_key("eps_f") && !m.contains_key("eps_f_offset") {
                    self.fail("resonance.eps_f", "missing required field (or eps_f_offset)");
                }
                None
            }
        };
        let r = self.check(p, FanoResonance::new(q?, gamma?, eps_f?))?;
        self.check(p, r.with_dipoles(mu2eps, mu2b)).map(Some)
    }

    fn pump_peak(
        &mut self,
        m: &Map<String, Value>,
        regime: Option<Regime>,
        resonance: Option<FanoResonance<f64>>,
        delta_eps: Option<f64>,
        mu2eps: Option<f64>,
    ) -> Option<f64> {
        use Dimension as D;
        let p = "pulses.pump";
        let given: Vec<&str> =
            ["coupling", "display", "intensity"].into_iter().filter(|k| m.contains_key(*k)).collect();
        if given.len() != 1 {
            self.fail(p, "give exactly one of coupling, display or intensity");
            return None;
        }
        match given[0] {
            "coupling" => self.quantity(m, p, "coupling", D::Coupling, true),
            "display" => {
                let d = self.quantity(m, p, "display", D::Dimensionless, true)?;
                let conv = regime?.display_convention();
                let gamma = resonance.map_or(1.0, |r| r.gamma);
                self.check(p, units::coupling_from_display(d, conv, delta_eps?, gamma)).map(|c| c.0)
            }
            _ => {
                let i = self.quantity(m, p, "intensity", D::Intensity, true)?;
                let Some(mu) = resonance.and_then(|r| r.mu2eps).or(mu2eps) else {
                    self.fail(p, "an intensity needs resonance.mu2b, resonance.mu2eps or dipoles.mu2eps");
                    return None;
                };
                if !(i >= 0.0) {
                    self.fail(p, "intensity must be non-negative");
                    return None;
                }
                Some(units::continuum_rabi_from_field(units::field_from_intensity(i), mu).0)
            }
        }
    }

    fn integration(&mut self, m: &Map<String, Value>, it: &mut Integration<f64>) {
        use Dimension as D;
        let p = "integration";
        let set = |w: &mut Self, key: &str, dim: Dimension, slot: &mut f64| {
            if let Some(v) = w.quantity(m, p, key, dim, false) {
                *slot = v;
            }
        };
        set(self, "t_start", D::Time, &mut it.t_start);
        set(self, "t_end", D::Time, &mut it.t_end);
        set(self, "max_step", D::Time, &mut it.max_step);
        set(self, "rel_tol", D::Dimensionless, &mut it.rel_tol);
        set(self, "abs_tol", D::Dimensionless, &mut it.abs_tol);
        if let Some(n) = self.count(m, p, "max_steps") {
            it.max_steps = n as usize;
        }
        if let Some(n) = self.count(m, p, "samples") {
            it.samples = n as usize;
        }
    }

    fn oracle(&mut self, doc: &Map<String, Value>) -> Option<OracleSettings<f64>> {
        let mut o = OracleSettings::default();
        let Some(m) = self.optional_section(doc, "", "oracle", &["n_states", "window"]) else {
            return Some(o);
        };
        if let Some(n) = self.count(m, "oracle", "n_states") {
            o.n_states = n as usize;
        }
        match m.get("window") {
            None | Some(Value::Null) => {}
            Some(Value::Array(a)) if a.len() == 2 => {
                let lo = self.value_as(&a[0], "oracle.window[0]", Dimension::Energy);
                let hi = self.value_as(&a[1], "oracle.window[1]", Dimension::Energy);
                o.window = Some((lo?, hi?));
            }
            Some(_) => {
                self.fail("oracle.window", "expected [lo, hi]");
                return None;
            }
        }
        Some(o)
    }

    fn ensemble(&mut self, doc: &Map<String, Value>) -> Option<Option<EnsembleSettings>> {
        use Dimension as D;
        let allowed = [
            "temperature",
            "density",
            "reduced_mass",
            "atomic_mass",
            "trap_volume",
            "n_nodes",
            "tau_tr",
            "cycle_time",
            "residual",
            "p_avg",
        ];
        let Some(m) = self.optional_section(doc, "", "ensemble", &allowed) else {
            return Some(None);
        };
        let p = "ensemble";
        let temperature = self.quantity(m, p, "temperature", D::TemperatureEnergy, true);
        let density = self.quantity(m, p, "density", D::Density, true);
        let volume = self.quantity(m, p, "trap_volume", D::Volume, true);
        let reduced = self.quantity(m, p, "reduced_mass", D::Mass, false);
        let atomic = self.quantity(m, p, "atomic_mass", D::Mass, false);
        let mass = match (reduced, atomic) {
            (Some(r), None) => Some(r),
            (None, Some(a)) => Some(a / 2.0),
            (Some(_), Some(_)) => {
                self.fail(p, "give either reduced_mass or atomic_mass, not both");
                None
            }
            (None, None) => {
                self.fail("ensemble.reduced_mass", "missing required field (or atomic_mass)");
                None
            }
        };
        let n_nodes = self.count(m, p, "n_nodes").map_or(16, |n| n as usize);
        let tau_tr = self.quantity(m, p, "tau_tr", D::Time, false);
        let cycle_time = self.quantity(m, p, "cycle_time", D::Time, false);
        let residual = self.quantity(m, p, "residual", D::Dimensionless, false).unwrap_or(DEFAULT_RESIDUAL);
        let p_avg = self.quantity(m, p, "p_avg", D::Dimensionless, false);
        if p_avg.is_some_and(|x| !(0.0..=1.0).contains(&x)) {
            self.fail("ensemble.p_avg", "must lie in [0, 1]");
        }
        if !(residual > 0.0 && residual < 1.0) {
            self.fail("ensemble.residual", "must lie in (0, 1)");
        }
        if n_nodes < 8 {
            self.fail("ensemble.n_nodes", "need at least 8 quadrature nodes");
        }
        let spec = self.check(p, EnsembleSpec::new(temperature?, density?, mass?, volume?))?;
        Some(Some(EnsembleSettings { spec, n_nodes, tau_tr, cycle_time, residual, p_avg }))
    }

    fn optimize(&mut self, doc: &Map<String, Value>) -> Option<Option<OptimizeSettings>> {
        let Some(m) = self.optional_section(doc, "", "optimize", &["free", "objective", "budget", "seed"]) else {
            return Some(None);
        };
        let p = "optimize";
        let mut free = Vec::new();
        let mut ok = true;
        match m.get("free") {
            Some(Value::Object(f)) if !f.is_empty() => {
                for (k, v) in f {
                    let path = format!("optimize.free.{k}");
                    let param = match k.parse::<Param>() {
                        Ok(x) => x,
                        Err(e) => {
                            self.fail(&path, e);
                            ok = false;
                            continue;
                        }
                    };
                    let Some([lo, hi]) = v.as_array().and_then(|a| <&[Value; 2]>::try_from(a.as_slice()).ok()) else {
                        self.fail(&path, "expected [lower, upper]");
                        ok = false;
                        continue;
                    };
                    let dim = param.dimension();
                    match (self.value_as(lo, &path, dim), self.value_as(hi, &path, dim)) {
                        (Some(lower), Some(upper)) if lower < upper => free.push(FreeParam { param, lower, upper }),
                        (Some(_), Some(_)) => {
                            self.fail(&path, "need lower < upper");
                            ok = false;
                        }
                        _ => ok = false,
                    }
                }
            }
            None => {
                self.fail("optimize.free", "missing required field");
                ok = false;
            }
            Some(_) => {
                self.fail("optimize.free", "expected a non-empty object of name: [lower, upper]");
                ok = false;
            }
        }
        free.sort_by_key(|f| f.param);
        let objective = match self.string(m, p, "objective", false).unwrap_or("final_population") {
            "final_population" => ObjectiveKind::FinalPopulation,
            "ensemble_averaged" => ObjectiveKind::EnsembleAveraged,
            other => {
                self.fail("optimize.objective", format!("unknown objective `{other}`"));
                ok = false;
                ObjectiveKind::FinalPopulation
            }
        };
        let budget = self.count(m, p, "budget").map_or(DEFAULT_BUDGET, |n| n as usize);
        let seed = self.count(m, p, "seed").unwrap_or(0);
        if budget < 50 * free.len() {
            self.fail("optimize.budget", format!("need at least {} evaluations", 50 * free.len()));
            ok = false;
        }
        ok.then_some(Some(OptimizeSettings { free, objective, budget, seed }))
    }

    fn sweep(&mut self, doc: &Map<String, Value>) -> Option<Option<SweepSettings>> {
        let Some(m) = self.optional_section(doc, "", "sweep", &["param", "grid"]) else {
            return Some(None);
        };
        let param = self
            .string(m, "sweep", "param", true)
            .and_then(|s| self.check("sweep.param", s.parse::<SweepParam>()));
        let grid = match m.get("grid") {
            Some(Value::Array(a)) if !a.is_empty() => {
                let dim = param.map_or(Dimension::Dimensionless, |p| p.dimension());
                let vals: Vec<Option<f64>> =
                    a.iter().enumerate().map(|(i, v)| self.value_as(v, &format!("sweep.grid[{i}]"), dim)).collect();
                vals.into_iter().collect::<Option<Vec<f64>>>()
            }
            None => {
                self.fail("sweep.grid", "missing required field");
                None
            }
            Some(_) => {
                self.fail("sweep.grid", "expected a non-empty array");
                None
            }
        };
        let grid = grid?;
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            self.fail("sweep.grid", "must be sorted ascending");
            return None;
        }
        Some(Some(SweepSettings { param: param?, grid }))
    }
}
