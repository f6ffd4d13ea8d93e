//! Adaptive 7/15-point Gauss–Kronrod quadrature for real and complex
//! integrands on finite intervals.

use crate::{Cplx, Error, Real, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), abs_tol: T::zero(), max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<V, T> {
    pub value: V,
    pub abs_error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: Cplx<T>,
    error: T,
}

fn gk15<T: Real, F: FnMut(T) -> Cplx<T>>(f: &mut F, a: T, b: T) -> (Cplx<T>, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron += s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * T::lit(WG[j / 2]);
        }
    }
    let err = ((kron - gauss) * half).norm();
    (kron * half, err)
}

/// Integrates a complex function over `[points[0], points[last]]`, treating
/// the interior points as breakpoints. Converges when the summed error
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_complex<T, F>(mut f: F, points: &[T], opts: QuadOptions<T>) -> Result<QuadResult<Cplx<T>, T>>
where
    T: Real,
    F: FnMut(T) -> Cplx<T>,
{
    if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::arg("points", "need at least two finite points"));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::arg("points", "must be strictly increasing"));
    }
    let mut segs: Vec<Segment<T>> = points
        .windows(2)
        .map(|w| {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            Segment { a: w[0], b: w[1], value, error }
        })
        .collect();
    let mut evals = 15 * segs.len();
    loop {
        let total: Cplx<T> = segs.iter().fold(Cplx::new(T::zero(), T::zero()), |s, g| s + g.value);
        let err: T = segs.iter().fold(T::zero(), |s, g| s + g.error);
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target {
            return Ok(QuadResult { value: total, abs_error: err, evaluations: evals });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature { achieved: err.to_f64_lossy(), target: target.to_f64_lossy() });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("non-empty");
        let s = segs.swap_remove(worst);
        let m = (s.a + s.b) * T::lit(0.5);
        if !(s.a < m && m < s.b) {
            return Err(Error::Quadrature { achieved: err.to_f64_lossy(), target: target.to_f64_lossy() });
        }
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        evals += 30;
        segs.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        segs.push(Segment { a: m, b: s.b, value: v2, error: e2 });
    }
}

/// Real-valued convenience wrapper around [`integrate_complex`].
pub fn integrate<T, F>(mut f: F, points: &[T], opts: QuadOptions<T>) -> Result<QuadResult<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    let r = integrate_complex(|x| Cplx::new(f(x), T::zero()), points, opts)?;
    Ok(QuadResult { value: r.value.re, abs_error: r.abs_error, evaluations: r.evaluations })
}
