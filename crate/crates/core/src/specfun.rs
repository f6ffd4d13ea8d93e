//! The differences `I₀(x) − L₀(x)` and `I₁(x) − L₋₁(x)` of modified Bessel
//! and modified Struve functions for real `x ≥ 0`.
//!
//! Both are bounded (they decay like `2/(πx)` and `−2/(πx²)`), while each
//! function separately grows like `eˣ`. Below a precision-dependent switch
//! point the combined power series is summed in double-word arithmetic, so the
//! cancellation between terms of size `~eˣ` costs nothing; above it the
//! asymptotic expansion in `1/x` is used.

use crate::compensated::{self, Dw};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunResult<T> {
    pub value: T,
    /// Estimated bound on the absolute error of `value`.
    pub est_error: T,
}

/// Argument above which the asymptotic expansion is used. The smallest term
/// of the expansion is about `2e⁻ˣ` relative, so the branch is accurate to
/// roughly `eps^0.83` there.
pub fn switch_point<T: Real>() -> T {
    T::lit(-0.83 * T::epsilon().to_f64_lossy().ln())
}

fn check<T: Real>(x: T) -> Result<()> {
    if x.is_nan() || x < T::zero() {
        return Err(Error::arg("x", "must be a non-negative number"));
    }
    Ok(())
}

/// `I₀(x) − L₀(x)`.
pub fn i0_minus_l0<T: Real>(x: T) -> Result<SpecFunResult<T>> {
    check(x)?;
    Ok(if x < switch_point() { series_i0l0(x) } else { asymptotic_i0l0(x) })
}

/// `I₁(x) − L₋₁(x)`.
pub fn i1_minus_lm1<T: Real>(x: T) -> Result<SpecFunResult<T>> {
    check(x)?;
    Ok(if x < switch_point() { series_i1lm1(x) } else { asymptotic_i1lm1(x) })
}

/// Both differences at once; `x` must already be known non-negative.
pub(crate) fn pair_unchecked<T: Real>(x: T) -> (T, T) {
    if x < switch_point() {
        (series_i0l0(x).value, series_i1lm1(x).value)
    } else {
        (asymptotic_i0l0(x).value, asymptotic_i1lm1(x).value)
    }
}

const MAX_TERMS: usize = 1000;

/// Sums `Σ_k (even_k − odd_k)` where both sequences follow
/// `term_k = term_{k-1}·(x/2)²/d(k)`.
fn alternating_pairs<T: Real>(
    x: T,
    even0: Dw<T>,
    odd0: Dw<T>,
    even_div: impl Fn(T) -> (T, T),
    odd_div: impl Fn(T) -> (T, T),
) -> SpecFunResult<T> {
    let h2 = Dw::square_of(x * T::lit(0.5));
    let (mut even, mut odd) = (even0, odd0);
    let mut sum = even.add(odd.neg());
    let mut abs_sum = even.hi.abs() + odd.hi.abs();
    let tiny = T::epsilon() * T::epsilon();
    let mut tail = T::zero();
    for k in 1..MAX_TERMS {
        let kf = T::from_usize(k).expect("small integer");
        let (a, b) = even_div(kf);
        even = h2.mul(even).div_scalar(a).div_scalar(b);
        let (a, b) = odd_div(kf);
        odd = h2.mul(odd).div_scalar(a).div_scalar(b);
        sum = sum.add(even.add(odd.neg()));
        let step = even.hi.abs() + odd.hi.abs();
        abs_sum += step;
        tail = step;
        if kf > x && step <= tiny * sum.hi.abs() {
            break;
        }
    }
    let value = sum.value();
    let rounding = T::lit(16.0) * tiny * abs_sum + T::epsilon() * value.abs();
    SpecFunResult { value, est_error: T::lit(2.0) * tail + rounding }
}

// I₀ − L₀ = Σ_n (−1)ⁿ (x/2)ⁿ / Γ(n/2+1)²
fn series_i0l0<T: Real>(x: T) -> SpecFunResult<T> {
    let half = T::lit(0.5);
    let pi = compensated::pi::<T>();
    // odd_0 = (x/2)/Γ(3/2)² = 2x/π
    let odd0 = Dw::new(x + x).div(pi);
    alternating_pairs(x, Dw::new(T::one()), odd0, |k| (k, k), |k| (k + half, k + half))
}

// I₁ − L₋₁ = Σ_n (−1)ⁿ⁺¹ (x/2)ⁿ / (Γ(n/2+1/2) Γ(n/2+3/2))
fn series_i1lm1<T: Real>(x: T) -> SpecFunResult<T> {
    let half = T::lit(0.5);
    let pi = compensated::pi::<T>();
    // odd terms carry the + sign here, so they play the "even" role below.
    let plus0 = Dw::new(x * half);
    let minus0 = Dw::new(T::lit(2.0)).div(pi);
    alternating_pairs(x, plus0, minus0, |k| (k, k + T::one()), |k| (k - half, k + half))
}

fn asymptotic<T: Real>(first: T, x: T, ratio: impl Fn(T) -> T) -> SpecFunResult<T> {
    let inv = T::lit(4.0) / (x * x);
    let mut term = first;
    let mut sum = first;
    let mut next = first;
    for k in 1..MAX_TERMS {
        let kf = T::from_usize(k).expect("small integer");
        next = term * ratio(kf) * inv;
        if next.abs() >= term.abs() || next.abs() <= T::lit(0.25) * T::epsilon() * sum.abs() {
            break;
        }
        sum += next;
        term = next;
    }
    SpecFunResult { value: sum, est_error: next.abs() + T::lit(4.0) * T::epsilon() * sum.abs() }
}

fn asymptotic_i0l0<T: Real>(x: T) -> SpecFunResult<T> {
    let half = T::lit(0.5);
    asymptotic(T::lit(2.0) / (T::PI() * x), x, |k| (k - half) * (k - half))
}

fn asymptotic_i1lm1<T: Real>(x: T) -> SpecFunResult<T> {
    let half = T::lit(0.5);
    asymptotic(-T::lit(2.0) / (T::PI() * x * x), x, |k| (k - half) * (k + half))
}
