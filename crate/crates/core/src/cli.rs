//! Command-line front end: loads a configuration, runs one command and writes
//! `summary.json` (plus a CSV for commands that produce one) to the output
//! directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::dynamics::{self, default_oracle_window, full_model_oracle, Regime, TimeSeries};
use crate::ensemble;
use crate::optimizer;
use crate::{Error, Result, Scenario};

/// Version of the `summary.json` layout.
pub const SUMMARY_SCHEMA_VERSION: &str = "1.0";
/// Version of the CSV layouts.
pub const CSV_SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Integrate the configured regime.
    Simulate,
    /// Integrate the discretized continuum model and compare with the reduced one.
    Oracle,
    /// Thermal average of the transfer efficiency.
    Average,
    /// Maximize the transfer efficiency over the `optimize` section.
    Optimize,
    /// Final efficiency along the `sweep` grid.
    Sweep,
    /// Photoassociated fraction and pulse-train estimate.
    Estimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
            Command::Average => "average",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
            Command::Estimate => "estimate",
        }
    }

    /// Files the command writes.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Command::Simulate | Command::Oracle | Command::Optimize => &["timeseries.csv", "summary.json"],
            Command::Sweep => &["sweep.csv", "summary.json"],
            Command::Average | Command::Estimate => &["summary.json"],
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "feshbach-stirap", version, about = "STIRAP photoassociation near a Feshbach resonance")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Configuration file, or `preset:<name>`.
    #[arg(long)]
    pub config: String,
    /// Output directory; created when missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Override a configuration field, e.g. `--set pulses.pump.width="3 us"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replace existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: String,
    pub output_dir: PathBuf,
    pub overrides: Vec<String>,
    pub force: bool,
}

impl From<Cli> for RunManifest {
    fn from(c: Cli) -> Self {
        Self { command: c.command, config_path: c.config, output_dir: c.out, overrides: c.overrides, force: c.force }
    }
}

/// Runs the manifest and returns the paths written.
pub fn run(m: &RunManifest) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::load(&m.config_path, &m.overrides)?;
    fs::create_dir_all(&m.output_dir)?;
    let paths: Vec<PathBuf> = m.command.artifacts().iter().map(|f| m.output_dir.join(f)).collect();
    if !m.force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(p.display().to_string()));
        }
    }
    let mut summary = header(m.command, &cfg);
    let csv = match m.command {
        Command::Simulate => {
            let ts = dynamics::integrate(&cfg.scenario)?;
            dynamics_summary(&mut summary, &cfg, &ts);
            Some(timeseries_csv(&ts)?)
        }
        Command::Oracle => Some(oracle(&mut summary, &cfg)?),
        Command::Average => {
            average(&mut summary, &cfg)?;
            None
        }
        Command::Optimize => Some(optimize(&mut summary, &cfg)?),
        Command::Sweep => Some(sweep(&mut summary, &cfg)?),
        Command::Estimate => {
            estimate(&mut summary, &cfg)?;
            None
        }
    };
    if let Some(text) = csv {
        write(&paths[0], text.as_bytes())?;
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(summary))?;
    text.push('\n');
    write(paths.last().expect("summary path"), text.as_bytes())?;
    Ok(paths)
}

/// Runs the CLI and maps the outcome to an exit status. Errors are printed
/// to stderr as a JSON object.
pub fn execute(cli: Cli) -> i32 {
    match run(&cli.into()) {
        Ok(paths) => {
            let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({"status": "ok", "files": files}));
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            match e {
                Error::Config { .. } | Error::InvalidArgument { .. } | Error::UnknownParameter(_) => 2,
                Error::WouldOverwrite(_) => 3,
                _ => 1,
            }
        }
    }
}

pub fn error_json(e: &Error) -> Value {
    let details = match e {
        Error::Config { messages, .. } => messages.clone(),
        _ => Vec::new(),
    };
    json!({"status": "error", "error": {"kind": e.kind(), "message": e.to_string(), "details": details}})
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(Error::from)
}

fn header(command: Command, cfg: &RunConfig) -> Map<String, Value> {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SUMMARY_SCHEMA_VERSION));
    m.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("timestamp_unix_s".into(), json!(ts));
    m.insert("command".into(), json!(command.name()));
    m.insert("name".into(), json!(cfg.name));
    m.insert("regime".into(), json!(cfg.scenario.regime.name()));
    m.insert("intensities".into(), intensities(cfg));
    m.insert("tau_tr_s".into(), json!(cfg.tau_tr()));
    m.insert("config".into(), cfg.to_value());
    m
}

fn intensities(cfg: &RunConfig) -> Value {
    let s = &cfg.scenario;
    json!({
        "stokes_w_per_cm2": cfg.stokes_intensity(),
        "pump_w_per_cm2": cfg.pump_intensity(),
        "stokes_peak_per_s": s.pulses.stokes.peak,
        "pump_display": s.pump_display(s.pulses.pump.peak),
    })
}

fn dynamics_summary(m: &mut Map<String, Value>, cfg: &RunConfig, ts: &TimeSeries<f64>) {
    let (p1, p2) = ts.final_state().populations();
    m.insert("efficiency".into(), json!(p1));
    m.insert(
        "final_populations".into(),
        json!({
            "target": p1,
            "excited": p2,
            "continuum": ts.continuum_population.as_ref().and_then(|c| c.last()),
        }),
    );
    m.insert(
        "integration".into(),
        json!({
            "accepted_steps": ts.stats.accepted,
            "rejected_steps": ts.stats.rejected,
            "evaluations": ts.stats.evaluations,
            "samples": ts.times.len(),
            "csv_schema_version": CSV_SCHEMA_VERSION,
        }),
    );
    m.insert("intensities".into(), intensities(cfg));
}

fn timeseries_csv(ts: &TimeSeries<f64>) -> Result<String> {
    let mut buf = Vec::new();
    ts.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

/// The reduced model the oracle is compared against.
fn reduced_regime(s: &Scenario) -> Regime {
    match (s.regime, s.resonance.is_some()) {
        (Regime::FullOracle, true) => Regime::Broad,
        (Regime::FullOracle, false) => Regime::NoResonance,
        (r, _) => r,
    }
}

fn oracle(m: &mut Map<String, Value>, cfg: &RunConfig) -> Result<String> {
    let s = &cfg.scenario;
    let window = s.oracle.window.unwrap_or_else(|| default_oracle_window(s));
    let ts = full_model_oracle(s, s.oracle.n_states, window)?;
    dynamics_summary(m, cfg, &ts);
    let regime = reduced_regime(s);
    let reduced = dynamics::final_state(&Scenario { regime, ..*s })?.populations().0;
    let full = ts.efficiency();
    m.insert(
        "oracle".into(),
        json!({
            "n_states": s.oracle.n_states,
            "window_per_s": [window.0, window.1],
            "efficiency": full,
            "reduced_regime": regime.name(),
            "reduced_efficiency": reduced,
            "relative_difference": (full - reduced).abs() / reduced.abs().max(1e-12),
        }),
    );
    timeseries_csv(&ts)
}

fn ensemble_settings(cfg: &RunConfig) -> Result<crate::config::EnsembleSettings> {
    cfg.ensemble
        .ok_or_else(|| Error::config(vec!["ensemble: section required for this command".into()]))
}

fn average(m: &mut Map<String, Value>, cfg: &RunConfig) -> Result<f64> {
    let e = ensemble_settings(cfg)?;
    let report = ensemble::average_efficiency(&e.spec, &cfg.scenario, e.n_nodes)?;
    let p = report.p_avg;
    m.insert("efficiency".into(), json!(p));
    m.insert("average".into(), serde_json::to_value(&report)?);
    Ok(p)
}

fn optimize(m: &mut Map<String, Value>, cfg: &RunConfig) -> Result<String> {
    let problem = cfg.problem()?;
    let res = optimizer::optimize(&problem)?;
    let best = res.apply(&cfg.scenario)?;
    let ts = dynamics::integrate(&best)?;
    let tuned = RunConfig { scenario: best, ..cfg.clone() };
    dynamics_summary(m, &tuned, &ts);
    let params: Map<String, Value> = res.best_params.iter().map(|(p, v)| (p.name().to_string(), json!(v))).collect();
    m.insert(
        "optimization".into(),
        json!({
            "objective": cfg.optimize.as_ref().map(|o| o.objective.name()),
            "best_params": params,
            "best_value": res.best_value,
            "evaluations": res.evaluations,
            "trace": res.trace,
        }),
    );
    m.insert("optimized_config".into(), tuned.to_value());
    timeseries_csv(&ts)
}

fn sweep(m: &mut Map<String, Value>, cfg: &RunConfig) -> Result<String> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config(vec!["sweep: section required for this command".into()]))?;
    let points = optimizer::sweep(&cfg.scenario, sw.param, &sw.grid)?;
    let mut csv = String::from("value,efficiency,error\n");
    for p in &points {
        let eff = p.efficiency.map(|x| format!("{x:e}")).unwrap_or_default();
        let err = p.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        csv.push_str(&format!("{:e},{eff},\"{err}\"\n", p.value));
    }
    m.insert("sweep".into(), json!({"param": sw.param.name(), "points": points}));
    Ok(csv)
}

fn estimate(m: &mut Map<String, Value>, cfg: &RunConfig) -> Result<()> {
    let e = ensemble_settings(cfg)?;
    let (p_avg, source) = match e.p_avg {
        Some(p) => (p, "config"),
        None => (average(m, cfg)?, "computed"),
    };
    let cycle = e
        .cycle_time
        .ok_or_else(|| Error::config(vec!["ensemble.cycle_time: required by estimate".into()]))?;
    let tau = cfg.tau_tr();
    let f = ensemble::fraction_per_pulse_pair(&e.spec, p_avg, tau)?;
    let train = ensemble::pulse_train_estimate(&e.spec, f, cycle, e.residual)?;
    m.insert(
        "estimate".into(),
        json!({
            "p_avg": p_avg,
            "p_avg_source": source,
            "tau_tr_s": tau,
            "f": f,
            "n_pairs": train.n_pairs,
            "total_time_s": train.total_time,
            "production_rate_per_s": train.production_rate,
            "temperature_k": e.spec.temperature,
            "thermal_delta_eps_per_s": e.spec.delta_eps(),
            "mean_energy_per_s": e.spec.mean_energy(),
        }),
    );
    Ok(())
}

