//! Dormand–Prince 5(4) integrator for complex state vectors, with
//! fourth-order dense output.

use crate::{Cplx, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub initial_step: Option<T>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolant over the most recent accepted step.
pub struct Dense<'a, T> {
    pub t_old: T,
    pub t_new: T,
    rcont: &'a [Vec<Cplx<T>>; 5],
}

impl<T: Real> Dense<'_, T> {
    pub fn eval(&self, t: T, out: &mut [Cplx<T>]) {
        let h = self.t_new - self.t_old;
        let th = if h == T::zero() { T::one() } else { (t - self.t_old) / h };
        let th1 = T::one() - th;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * th1) * th) * th1) * th;
        }
    }

    /// State at the end of the step.
    pub fn end(&self) -> Vec<Cplx<T>> {
        self.rcont[0].iter().zip(&self.rcont[1]).map(|(a, b)| a + b).collect()
    }
}

fn combo<T: Real>(out: &mut [Cplx<T>], y: &[Cplx<T>], h: T, terms: &[(f64, &[Cplx<T>])]) {
    let mut coeffs = [T::zero(); 6];
    for (c, (a, _)) in coeffs.iter_mut().zip(terms) {
        *c = T::lit(*a) * h;
    }
    for i in 0..out.len() {
        let mut acc = y[i];
        for (c, (_, k)) in coeffs.iter().zip(terms) {
            acc += k[i] * *c;
        }
        out[i] = acc;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 > t0`), updating `y` in
/// place. `observer` sees every accepted step through its interpolant.
pub fn dopri5<T, F, O>(
    mut f: F,
    t0: T,
    t1: T,
    y: &mut [Cplx<T>],
    opts: &OdeOptions<T>,
    mut observer: O,
) -> Result<OdeStats>
where
    T: Real,
    F: FnMut(T, &[Cplx<T>], &mut [Cplx<T>]),
    O: FnMut(&Dense<T>),
{
    if !(t1 > t0) {
        return Err(Error::arg("t_end", "must exceed t_start"));
    }
    if !(opts.rel_tol > T::zero() && opts.abs_tol > T::zero() && opts.max_step > T::zero()) {
        return Err(Error::arg("tolerances", "rel_tol, abs_tol and max_step must be positive"));
    }
    let n = y.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let mut k: [Vec<Cplx<T>>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut tmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut rcont: [Vec<Cplx<T>>; 5] = std::array::from_fn(|_| vec![zero; n]);
    let mut stats = OdeStats::default();

    let mut t = t0;
    f(t, y, &mut k[0]);
    stats.evaluations += 1;
    let span = t1 - t0;
    let mut h = opts.initial_step.unwrap_or(span * T::lit(1e-4)).min(opts.max_step).min(span);
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepBudget { t: t.to_f64_lossy(), max_steps: opts.max_steps });
        }
        if t + h >= t1 || t + h * T::lit(1.01) >= t1 {
            h = t1 - t;
        }
        if h <= T::lit(4.0) * T::epsilon() * t.abs().max(t1.abs()) {
            return Err(Error::StepSizeUnderflow { t: t.to_f64_lossy(), h: h.to_f64_lossy() });
        }

        {
            let (k1, rest) = k.split_at_mut(1);
            let k1 = &k1[0];
            combo(&mut tmp, y, h, &[(A21, k1)]);
            f(t + T::lit(C2) * h, &tmp, &mut rest[0]);
            let (k2, rest) = rest.split_at_mut(1);
            let k2 = &k2[0];
            combo(&mut tmp, y, h, &[(A31, k1), (A32, k2)]);
            f(t + T::lit(C3) * h, &tmp, &mut rest[0]);
            let (k3, rest) = rest.split_at_mut(1);
            let k3 = &k3[0];
            combo(&mut tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
            f(t + T::lit(C4) * h, &tmp, &mut rest[0]);
            let (k4, rest) = rest.split_at_mut(1);
            let k4 = &k4[0];
            combo(&mut tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            f(t + T::lit(C5) * h, &tmp, &mut rest[0]);
            let (k5, rest) = rest.split_at_mut(1);
            let k5 = &k5[0];
            combo(&mut tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            f(t + h, &tmp, &mut rest[0]);
            let (k6, rest) = rest.split_at_mut(1);
            let k6 = &k6[0];
            combo(&mut ynew, y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
            f(t + h, &ynew, &mut rest[0]);
            stats.evaluations += 6;
        }

        // Error estimate, RMS over components.
        let mut err = T::zero();
        let ec: [T; 6] = [E1, E3, E4, E5, E6, E7].map(|e| T::lit(e) * h);
        for i in 0..n {
            let e = k[0][i] * ec[0] + k[2][i] * ec[1] + k[3][i] * ec[2] + k[4][i] * ec[3] + k[5][i] * ec[4]
                + k[6][i] * ec[5];
            let sc = opts.abs_tol + opts.rel_tol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / sc;
            err += r * r;
        }
        let err = (err / T::from_usize(n.max(1)).expect("size")).sqrt();
        if !err.is_finite() {
            return Err(Error::NonFinite { t: t.to_f64_lossy() });
        }

        let fac = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        if err <= T::one() {
            let d: [T; 6] = [D1, D3, D4, D5, D6, D7].map(|c| T::lit(c) * h);
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - k[6][i] * h - bspl;
                rcont[4][i] = k[0][i] * d[0] + k[2][i] * d[1] + k[3][i] * d[2] + k[4][i] * d[3] + k[5][i] * d[4]
                    + k[6][i] * d[5];
            }
            let t_new = if t + h >= t1 { t1 } else { t + h };
            observer(&Dense { t_old: t, t_new, rcont: &rcont });
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            t = t_new;
            stats.accepted += 1;
            let fac = if last_rejected { fac.min(T::one()) } else { fac };
            h = (h * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h = h * fac.min(T::one());
            last_rejected = true;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(rtol: f64) -> OdeOptions<f64> {
        OdeOptions { rel_tol: rtol, abs_tol: rtol * 1e-2, max_step: 1.0, initial_step: None, max_steps: 1_000_000 }
    }

    #[test]
    fn harmonic_rotation() {
        // y' = iωy
        let w = 3.0;
        let mut y = vec![Cplx::new(1.0, 0.0)];
        dopri5(|_, y, dy| dy[0] = Cplx::new(0.0, w) * y[0], 0.0, 10.0, &mut y, &opts(1e-10), |_| {}).unwrap();
        let exact = Cplx::from_polar(1.0, w * 10.0);
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn dense_output_accurate() {
        let mut y = vec![Cplx::new(1.0, 0.0)];
        let mut worst = 0.0f64;
        dopri5(
            |_, y, dy| dy[0] = Cplx::new(-0.5, 2.0) * y[0],
            0.0,
            5.0,
            &mut y,
            &opts(1e-10),
            |d| {
                let mut out = [Cplx::new(0.0, 0.0)];
                for j in 0..=4 {
                    let t = d.t_old + (d.t_new - d.t_old) * j as f64 / 4.0;
                    d.eval(t, &mut out);
                    let exact = (Cplx::new(-0.5, 2.0) * t).exp();
                    worst = worst.max((out[0] - exact).norm());
                }
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn tolerance_convergence() {
        let run = |tol: f64| {
            let mut y = vec![Cplx::new(1.0, 0.0), Cplx::new(0.0, 0.0)];
            dopri5(
                |t: f64, y, dy| {
                    let w = 2.0 * (-(t - 3.0) * (t - 3.0)).exp();
                    dy[0] = Cplx::new(0.0, w) * y[1];
                    dy[1] = Cplx::new(0.0, w) * y[0];
                },
                -3.0,
                9.0,
                &mut y,
                &opts(tol),
                |_| {},
            )
            .unwrap();
            y[1].norm_sqr()
        };
        let exact = (2.0 * std::f64::consts::PI.sqrt()).sin().powi(2);
        assert!((run(1e-9) - exact).abs() < 1e-7);
    }

    #[test]
    fn reports_failures() {
        let mut y = vec![Cplx::new(1.0, 0.0)];
        let e = dopri5(|_, y, dy| dy[0] = y[0] * y[0] * 1e3, 0.0, 1.0, &mut y, &opts(1e-8), |_| {}).unwrap_err();
        assert!(matches!(e, Error::NonFinite { .. } | Error::StepSizeUnderflow { .. } | Error::StepBudget { .. }));
        let mut y = vec![Cplx::new(1.0, 0.0)];
        let tight = OdeOptions { max_steps: 3, ..opts(1e-12) };
        let e = dopri5(|_, y, dy| dy[0] = Cplx::new(0.0, 50.0) * y[0], 0.0, 10.0, &mut y, &tight, |_| {}).unwrap_err();
        assert!(matches!(e, Error::StepBudget { .. }));
    }
}
