//! A signed float with an extended binary exponent.
//!
//! Distributions of weighted sums at moderate `n` span far more than the
//! ~600 decades an `f64` covers (a seed like `exp(-sum lambda_i)` underflows
//! long before the bulk of the pmf does).  The recursions and convolutions in
//! [`crate::sumdist`] therefore carry every entry as `mantissa * 2^exponent`
//! with the mantissa normalised to `[0.5, 1)`.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ext {
    m: f64,
    e: i64,
}

/// Exponents beyond this are flushed to zero (below) or saturated (above).
const E_LIMIT: i64 = 1 << 60;

fn frexp(v: f64) -> (f64, i64) {
    if v == 0.0 || !v.is_finite() {
        return (v, 0);
    }
    let (v, bias) = if v.abs() < f64::MIN_POSITIVE {
        (v * 2f64.powi(54), -54)
    } else {
        (v, 0)
    };
    let bits = v.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, exp - 1022 + bias)
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    if m == 0.0 {
        return m;
    }
    if e > 2200 {
        return m * f64::INFINITY;
    }
    if e < -2200 {
        return m * 0.0;
    }
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
    }
    m * 2f64.powi(e as i32)
}

impl Ext {
    pub const ZERO: Ext = Ext { m: 0.0, e: 0 };
    pub const ONE: Ext = Ext { m: 0.5, e: 1 };

    pub fn from_f64(v: f64) -> Ext {
        debug_assert!(v.is_finite(), "Ext::from_f64({v})");
        let (m, e) = frexp(v);
        Ext { m, e }
    }

    /// `exp(l)`; `-inf` maps to zero.
    pub fn from_ln(l: f64) -> Ext {
        if l == f64::NEG_INFINITY {
            return Ext::ZERO;
        }
        debug_assert!(l.is_finite(), "Ext::from_ln({l})");
        let t = l / LN_2;
        if t < -(E_LIMIT as f64) {
            return Ext::ZERO;
        }
        let t = t.min(E_LIMIT as f64);
        let e = t.floor() as i64 + 1;
        let m = ((t - e as f64) * LN_2).exp();
        Ext { m, e }.normalized()
    }

    fn normalized(self) -> Ext {
        if self.m == 0.0 {
            return Ext::ZERO;
        }
        let (m, de) = frexp(self.m);
        let e = self.e.saturating_add(de);
        if e < -E_LIMIT {
            return Ext::ZERO;
        }
        Ext { m, e: e.min(E_LIMIT) }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    pub fn is_sign_negative(&self) -> bool {
        self.m < 0.0
    }

    pub fn abs(self) -> Ext {
        Ext { m: self.m.abs(), e: self.e }
    }

    /// Natural log of the absolute value.
    pub fn ln(&self) -> f64 {
        if self.m == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.m.abs().ln() + self.e as f64 * LN_2
        }
    }

    pub fn to_f64(&self) -> f64 {
        ldexp(self.m, self.e)
    }

    pub fn scale(self, f: f64) -> Ext {
        self * Ext::from_f64(f)
    }

    /// `self / other`, as a plain float; both must be nonzero or self zero.
    pub fn ratio(&self, other: &Ext) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        ldexp(self.m / other.m, self.e.saturating_sub(other.e))
    }

    pub fn cmp_abs(&self, other: &Ext) -> Ordering {
        match (self.m == 0.0, other.m == 0.0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self
                .e
                .cmp(&other.e)
                .then(self.m.abs().partial_cmp(&other.m.abs()).unwrap()),
        }
    }
}

impl Default for Ext {
    fn default() -> Self {
        Ext::ZERO
    }
}

impl Mul for Ext {
    type Output = Ext;
    fn mul(self, rhs: Ext) -> Ext {
        if self.m == 0.0 || rhs.m == 0.0 {
            return Ext::ZERO;
        }
        Ext { m: self.m * rhs.m, e: self.e.saturating_add(rhs.e) }.normalized()
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        if rhs.m == 0.0 {
            return self;
        }
        if self.m == 0.0 {
            return rhs;
        }
        let (hi, lo) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let d = hi.e.saturating_sub(lo.e);
        if d > 60 {
            return hi;
        }
        Ext { m: hi.m + lo.m * 2f64.powi(-(d as i32)), e: hi.e }.normalized()
    }
}

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext { m: -self.m, e: self.e }
    }
}

impl Sub for Ext {
    type Output = Ext;
    fn sub(self, rhs: Ext) -> Ext {
        self + (-rhs)
    }
}

impl std::iter::Sum for Ext {
    fn sum<I: Iterator<Item = Ext>>(iter: I) -> Ext {
        iter.fold(Ext::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_arithmetic() {
        for v in [1.0, -3.5, 1e-300, 7e300, 0.1] {
            assert_eq!(Ext::from_f64(v).to_f64(), v);
        }
        let a = Ext::from_f64(1.5);
        let b = Ext::from_f64(-0.25);
        assert_eq!((a + b).to_f64(), 1.25);
        assert_eq!((a * b).to_f64(), -0.375);
        assert_eq!((a - a).to_f64(), 0.0);
    }

    #[test]
    fn survives_beyond_f64_range() {
        let tiny = Ext::from_ln(-5000.0);
        assert_eq!(tiny.to_f64(), 0.0);
        assert!((tiny.ln() + 5000.0).abs() < 1e-9);
        let huge = Ext::from_ln(5000.0);
        let one = tiny * huge;
        assert!((one.to_f64() - 1.0).abs() < 1e-10);
        assert!((huge.ratio(&Ext::from_ln(4999.0)) - 1f64.exp()).abs() < 1e-9);
    }
}
