use super::*;
use crate::pulses::{GaussianPulse, PulseRole};
use crate::units::{coupling_from_display, microkelvin, pump_intensity_broad};

const US: f64 = 1e-6;
const DEBYE: f64 = 1e-18;

fn uk(x: f64) -> f64 {
    x * microkelvin::<f64>()
}

fn pulses(os: f64, coupling: f64, ts: f64, tp: f64, tau_s: f64, tau_p: f64) -> PulsePair<f64> {
    PulsePair::new(
        GaussianPulse::new(os, tau_s * US, ts * US, PulseRole::Stokes).unwrap(),
        GaussianPulse::new(coupling, tau_p * US, tp * US, PulseRole::Pump).unwrap(),
        0.0,
    )
    .unwrap()
}

/// Broad-resonance pair scenario: Γ = 1 mK, δ_ε = 10 μK, q = 10, pump set
/// from a 4000 W/cm² peak intensity.
fn broad() -> ScenarioConfig<f64> {
    let (de, g, q) = (uk(10.0), uk(1000.0), 10.0);
    let unit = pump_intensity_broad(1.0, q, de, g, 0.1 * DEBYE).unwrap();
    let display = (4000.0 / unit).sqrt();
    let coupling = coupling_from_display(display, PumpDisplay::Broad, de, g).unwrap().0;
    let eps0 = 1.5f64.sqrt() * de;
    let res = FanoResonance::new(q, g, eps0 - g / (2.0 * q)).unwrap();
    ScenarioConfig::new(Regime::Broad, Some(res), pulses(0.74e8, coupling, 1.4, 3.4, 0.65, 1.0), eps0, de, 1e8).unwrap()
}

/// Narrow-resonance pair scenario: Γ = 1 μK, δ_ε = 100 μK, resonant.
fn narrow() -> ScenarioConfig<f64> {
    let (de, g, q) = (uk(100.0), uk(1.0), 10.0);
    let mu2eps = crate::units::continuum_dipole_from_bound(0.1 * DEBYE, q, g).unwrap();
    let field = crate::units::field_from_intensity(400.0);
    let coupling = crate::units::continuum_rabi_from_field(field, mu2eps).0;
    let eps0 = 1.5f64.sqrt() * de;
    let res = FanoResonance::new(q, g, eps0).unwrap();
    ScenarioConfig::new(Regime::Narrow, Some(res), pulses(2.24e8, coupling, 0.157, 0.3, 0.1, 0.207), eps0, de, 1e8)
        .unwrap()
}

fn quiet(mut cfg: ScenarioConfig<f64>) -> ScenarioConfig<f64> {
    cfg.pulses.stokes.peak = 0.0;
    cfg.pulses.pump.peak = 0.0;
    cfg
}

fn c(re: f64, im: f64) -> Cplx<f64> {
    Cplx::new(re, im)
}

#[test]
fn couplings_off_leave_state_unchanged() {
    let mut cfg = quiet(broad());
    cfg.gamma = 0.0;
    let init = AmplitudeState { c1: c(0.6, 0.0), c2: c(0.0, 0.0), mem: c(0.0, 0.0) };
    let ts = integrate_from(&cfg, init).unwrap();
    let f = ts.final_state();
    assert!((f.c1 - init.c1).norm() < cfg.integration.abs_tol);
    assert!(f.c2.norm() < cfg.integration.abs_tol);
}

#[test]
fn free_evolution_is_a_pure_phase() {
    let mut cfg = quiet(broad());
    cfg.gamma = 0.0;
    cfg.delta = 3e6;
    cfg.integration.samples = 101;
    let init = AmplitudeState { c1: c(0.0, 0.0), c2: c(1.0, 0.0), mem: c(0.0, 0.0) };
    let ts = integrate_from(&cfg, init).unwrap();
    for (t, s) in ts.times.iter().zip(&ts.states) {
        let dt = t - cfg.integration.t_start;
        let exact = Cplx::from_polar(1.0, -cfg.delta * dt);
        assert!((s.c2 - exact).norm() < 1e-7, "t = {t}");
    }
}

#[test]
fn pure_decay() {
    let mut cfg = quiet(broad());
    cfg.gamma = 2e5;
    cfg.integration.samples = 51;
    let init = AmplitudeState { c1: c(0.0, 0.0), c2: c(1.0, 0.0), mem: c(0.0, 0.0) };
    let ts = integrate_from(&cfg, init).unwrap();
    for (t, &(_, p2)) in ts.times.iter().zip(&ts.populations) {
        let exact = (-2.0 * cfg.gamma * (t - cfg.integration.t_start)).exp();
        assert!((p2 - exact).abs() < 1e-7 * exact.max(1e-3), "t = {t}: {p2} vs {exact}");
    }
}

/// Part of the c₂ derivative linear in c₂.
fn c2_response(f: impl Fn(&AmplitudeState<f64>) -> AmplitudeState<f64>) -> Cplx<f64> {
    let z = AmplitudeState::zero();
    let one = AmplitudeState { c2: c(1.0, 0.0), ..z };
    f(&one).c2 - f(&z).c2
}

#[test]
fn broad_loss_vanishes_at_q_zero_on_resonance() {
    let mut cfg = broad();
    cfg.gamma = 0.0;
    let r = cfg.resonance.unwrap();
    cfg.resonance = Some(FanoResonance { q: 0.0, eps_f: cfg.two_photon(), ..r });
    let t = cfg.pulses.pump_center();
    let resp = c2_response(|s| rhs_broad(&cfg, t, s).unwrap());
    assert!(resp.norm() < 1e-12 * cfg.pulses.pump.peak.powi(2), "{resp}");
    // the flat-continuum loss at the same time is not small
    assert!(c2_response(|s| rhs_no_res(&cfg, t, s)).norm() > 1e3);
}

#[test]
fn broad_loss_tends_to_flat_when_far_detuned() {
    let mut cfg = broad();
    let t = cfg.pulses.pump_center();
    let flat = c2_response(|s| rhs_no_res(&cfg, t, s));
    let r = cfg.resonance.unwrap();
    let mut prev = f64::INFINITY;
    for far in [1e2, 1e4, 1e6] {
        cfg.resonance = Some(FanoResonance { eps_f: cfg.two_photon() + far * r.gamma, ..r });
        let gap = (c2_response(|s| rhs_broad(&cfg, t, s).unwrap()) - flat).norm() / flat.norm();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-3);
}

#[test]
fn none_regime_matches_loss_formula() {
    let mut cfg = broad();
    cfg.delta = 0.0;
    cfg.gamma = 0.0;
    let t = cfg.pulses.pump_center();
    let ob = cfg.pulses.pump_at(t);
    let resp = c2_response(|s| rhs_no_res(&cfg, t, s));
    assert!((resp - c(-std::f64::consts::PI * ob * ob, 0.0)).norm() < 1e-9 * resp.norm());
}

#[test]
fn two_level_norm_conserved_without_pump() {
    let mut cfg = broad();
    cfg.gamma = 0.0;
    cfg.pulses.pump.peak = 0.0;
    cfg.integration.samples = 401;
    let init = AmplitudeState { c1: c(0.6, 0.0), c2: c(0.0, 0.8), mem: c(0.0, 0.0) };
    let ts = integrate_from(&cfg, init).unwrap();
    let drift = ts.populations.iter().map(|(a, b)| (a + b - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8, "drift {drift:e}");
    // the Stokes pulse really did rotate the pair
    assert!((ts.populations.last().unwrap().0 - 0.36).abs() > 1e-2);
}

#[test]
fn time_translation_covariance() {
    let cfg = broad();
    let a = final_state(&cfg).unwrap().populations();
    for dt in [3.7 * US, -11.0 * US] {
        let b = final_state(&cfg.shifted(dt)).unwrap().populations();
        assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8, "{a:?} vs {b:?}");
    }
}

#[test]
fn broad_pair_transfer_is_efficient_and_bounded() {
    let cfg = broad();
    let ts = integrate(&cfg).unwrap();
    for &(p1, p2) in &ts.populations {
        assert!(p1 >= 0.0 && p2 >= 0.0 && p1 <= 1.0 + 1e-6);
    }
    let p = ts.efficiency();
    assert!(p > 0.9, "efficiency {p}");
    // |c₂|² transient stays small and happens while both pulses are on
    let (imax, &(_, p2max)) =
        ts.populations.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap();
    assert!(p2max > 1e-6 && p2max < 0.1, "{p2max}");
    let tpk = ts.times[imax];
    let hw = cfg.pulses.pump.width;
    assert!(tpk > cfg.pulses.stokes_center() - hw && tpk < cfg.pulses.pump_center() + hw);
}

#[test]
fn halving_tolerances_barely_moves_result() {
    let cfg = broad();
    let a = final_state(&cfg).unwrap().populations().0;
    let mut tight = cfg;
    tight.integration.rel_tol *= 0.5;
    tight.integration.abs_tol *= 0.5;
    let b = final_state(&tight).unwrap().populations().0;
    assert!((a - b).abs() < 10.0 * cfg.integration.rel_tol, "{a} {b}");
}

#[test]
fn intuitive_order_transfers_less() {
    let cfg = broad();
    let mut swapped = cfg;
    swapped.pulses = cfg.pulses.swapped();
    assert!(!swapped.pulses.is_counter_intuitive());
    let a = final_state(&cfg).unwrap().populations().0;
    let b = final_state(&swapped).unwrap().populations().0;
    assert!(b < a, "{b} !< {a}");
}

#[test]
fn memory_matches_direct_convolution() {
    let mut cfg = narrow();
    cfg.integration.samples = 200_001;
    let ts = integrate(&cfg).unwrap();
    let r = cfg.resonance.unwrap();
    let k = Cplx::new(r.gamma * 0.5, cfg.feshbach_offset().unwrap());
    let f: Vec<Cplx<f64>> =
        ts.times.iter().zip(&ts.states).map(|(&t, s)| s.c2 * cfg.pulses.pump_at(t)).collect();
    // m(t_n) = e^{-k h} m(t_{n-1}) + h/2 (f_n + e^{-k h} f_{n-1}), exact recursion of the trapezoid sum
    let h = ts.times[1] - ts.times[0];
    let decay = (-k * h).exp();
    let mut m = c(0.0, 0.0);
    let mut worst = 0.0f64;
    let scale = ts.states.iter().map(|s| s.mem.norm()).fold(0.0, f64::max);
    assert!(scale > 0.0);
    for n in 1..ts.times.len() {
        m = decay * m + (f[n] + decay * f[n - 1]) * (0.5 * h);
        worst = worst.max((m - ts.states[n].mem).norm());
    }
    assert!(worst < 1e-6 * scale, "relative deviation {:e}", worst / scale);
}

/// With the memory relaxed to its adiabatic value `m = Ω̄c₂/k`, the narrow
/// back-stimulation reduces to the broad bracket once Γ dominates.
#[test]
fn narrow_kernel_reduces_to_broad_bracket() {
    let mut b = broad();
    b.gamma = 0.0;
    let de = b.wavepacket.delta_eps;
    let r = b.resonance.unwrap();
    let g = 20.0 * de;
    b.resonance = Some(FanoResonance { gamma: g, eps_f: b.wavepacket.eps0 - g / (2.0 * r.q), ..r });
    let n = ScenarioConfig { regime: Regime::Narrow, ..b };
    let t = b.pulses.pump_center();
    let ob = b.pulses.pump_at(t);
    let k = Cplx::new(g * 0.5, n.feshbach_offset().unwrap());
    let broad_resp = c2_response(|s| rhs_broad(&b, t, s).unwrap());
    let narrow_resp = c2_response(|s| {
        let relaxed = AmplitudeState { mem: s.c2 * ob / k, ..*s };
        rhs_narrow(&n, t, &relaxed).unwrap()
    });
    assert!((broad_resp - narrow_resp).norm() < 1e-10 * broad_resp.norm(), "{broad_resp} {narrow_resp}");
}

#[test]
fn regime_resonance_mismatch_is_rejected() {
    let mut cfg = broad();
    cfg.regime = Regime::NoResonance;
    assert!(matches!(integrate(&cfg), Err(Error::InvalidScenario(_))));
    cfg.regime = Regime::Narrow;
    cfg.resonance = None;
    assert!(integrate(&cfg).is_err());
}

#[test]
fn collision_time_outside_window_is_rejected() {
    let mut cfg = broad();
    cfg.wavepacket.t0 = cfg.integration.t_end + 1e-6;
    assert!(cfg.validate().is_err());
}

#[test]
fn csv_has_fixed_header_and_one_row_per_sample() {
    let mut cfg = broad();
    cfg.integration.samples = 11;
    let ts = integrate(&cfg).unwrap();
    let mut buf = Vec::new();
    ts.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[1].split(',').count(), 9);
    assert!(ts.times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn oracle_keeps_continuum_norm_with_pulses_off() {
    let mut cfg = quiet(broad());
    cfg.regime = Regime::FullOracle;
    cfg.gamma = 0.0;
    let wp = cfg.wavepacket;
    let win = (wp.eps0 - 6.0 * wp.delta_eps, wp.eps0 + 6.0 * wp.delta_eps);
    let ts = full_model_oracle(&cfg, 256, win).unwrap();
    let pop = ts.continuum_population.unwrap();
    let drift = pop.iter().map(|p| (p - pop[0]).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8, "drift {drift:e}");
    assert!((pop[0] - 1.0).abs() < 1e-6);
}

#[test]
fn oracle_rejects_tiny_grids() {
    let cfg = broad();
    assert!(full_model_oracle(&cfg, 16, default_oracle_window(&cfg)).is_err());
}

#[test]
fn display_of_pump_uses_regime_convention() {
    let cfg = narrow();
    let g = cfg.resonance.unwrap().gamma;
    let x = cfg.pump_display(cfg.pulses.pump.peak);
    assert!((x - (2.0 * std::f64::consts::PI / g).sqrt() * cfg.pulses.pump.peak).abs() < 1e-12 * x);
}
