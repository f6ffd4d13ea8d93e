//! Double-word ("double-double" for f64) arithmetic used by the alternating
//! power series in `specfun`, where terms grow far beyond the final value.

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dw<T> {
    pub hi: T,
    pub lo: T,
}

#[inline]
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl<T: Real> Dw<T> {
    pub fn new(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    /// Splits an `f64` value (with optional low part) into a double word.
    pub fn from_f64_pair(hi: f64, lo: f64) -> Self {
        let h = T::lit(hi);
        let rest = (hi - h.to_f64_lossy()) + lo;
        let (hi, lo) = fast_two_sum(h, T::lit(rest));
        Self { hi, lo }
    }

    pub fn value(self) -> T {
        self.hi + self.lo
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = fast_two_sum(s, e + t);
        let (hi, lo) = fast_two_sum(s, e + f);
        Self { hi, lo }
    }

    pub fn mul_scalar(self, b: T) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = fast_two_sum(p, self.lo.mul_add(b, e));
        Self { hi, lo }
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = fast_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div_scalar(self, b: T) -> Self {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let r = ((self.hi - p) - e + self.lo) / b;
        let (hi, lo) = fast_two_sum(q1, r);
        Self { hi, lo }
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul_scalar(q1).neg());
        let q2 = r.hi / o.hi;
        let (hi, lo) = fast_two_sum(q1, q2);
        Self { hi, lo }
    }

    pub fn square_of(x: T) -> Self {
        let (hi, lo) = two_prod(x, x);
        Self { hi, lo }
    }
}

/// π as a double word of the target precision.
pub(crate) fn pi<T: Real>() -> Dw<T> {
    Dw::from_f64_pair(std::f64::consts::PI, 1.224_646_799_147_353_2e-16)
}
