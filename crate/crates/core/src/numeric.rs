//! Small numeric helpers shared across modules.

use num_bigint::{BigInt, BigUint, Sign};
pub use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::f64::consts::LN_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// `ln k!` for `k <= 170`, from the float factorial (exact up to `22!`).
fn small_ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut f = 1.0f64;
        let mut t = vec![0.0];
        for k in 1..=170u32 {
            f *= k as f64;
            t.push(f.ln());
        }
        t
    })
}

/// `ln Gamma(x)`; integer arguments up to 171 go through the factorial table.
pub fn ln_gamma(x: f64) -> f64 {
    if x >= 1.0 && x <= 171.0 && x.fract() == 0.0 {
        return small_ln_factorials()[x as usize - 1];
    }
    statrs::function::gamma::ln_gamma(x)
}

pub fn ln_factorial(k: u64) -> f64 {
    if k <= 170 {
        small_ln_factorials()[k as usize]
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// Natural log of a positive big integer, accurate for any bit length.
pub fn ln_biguint(u: &BigUint) -> f64 {
    if u.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = u.bits();
    if bits <= 1000 {
        return u.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (u >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * LN_2
}

/// Natural log of a positive rational.
pub fn ln_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    assert!(r.is_positive(), "ln of negative rational");
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// Float value of a rational; values beyond the f64 range saturate.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let v = r.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() && v != 0.0 {
        return v;
    }
    let l = ln_rational(&r.abs());
    let s = if r.is_negative() { -1.0 } else { 1.0 };
    s * l.exp()
}

/// Exact rational value of a finite float (floats are dyadic rationals).
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::Domain(format!("non-finite value {v}")))
}

/// Parses `a/b`, an integer, or a decimal such as `0.1` or `2.5e-3`, exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Domain(format!("not a number: {text:?}"));
    if let Some((a, b)) = t.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(Error::Domain(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(a, b));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(at) => (&t[..at], t[at + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits_ok = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    let unsigned = int_part.strip_prefix(['-', '+']).unwrap_or(int_part);
    if (unsigned.is_empty() && frac_part.is_empty()) || !digits_ok(unsigned) || !digits_ok(frac_part) {
        return Err(bad());
    }
    let joined: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Ok(if shift >= 0 {
        BigRational::from_integer(joined * scale)
    } else {
        BigRational::new(joined, scale)
    })
}

pub fn big_factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn rat_int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn rat_uint(v: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, v))
}

/// `base^k` for a rational base.
pub fn rat_pow(base: &BigRational, k: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        k >>= 1;
    }
    acc
}

/// Möbius function by trial division.
pub fn mobius(mut n: u64) -> i32 {
    assert!(n >= 1);
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// `ln(exp(a) + exp(b))`.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod (G7/K15) integration of `f` over `[a, b]` to
/// absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.3).sum();
        if total <= tol {
            let value = intervals.iter().map(|iv| iv.2).collect::<CompensatedSum>().value();
            return Ok(Quadrature { value, error: total });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature did not converge: achieved error {total:e} > tolerance {tol:e}"
            )));
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Bisection for an increasing function `f` with `f(lo) < 0 < f(hi)`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= rel_tol * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        let r = |p: i64, q: i64| BigRational::new(BigInt::from(p), BigInt::from(q));
        assert_eq!(parse_rational("1/2").unwrap(), r(1, 2));
        assert_eq!(parse_rational("0.1").unwrap(), r(1, 10));
        assert_eq!(parse_rational("-2.5e-1").unwrap(), r(-1, 4));
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert_eq!(parse_rational("1e3").unwrap(), r(1000, 1));
        for bad in ["", "abc", "1/0", "1.2.3", "-", "1e"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn mobius_values() {
        let mu: Vec<i32> = (1..=10).map(mobius).collect();
        assert_eq!(mu, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn divisors_sorted() {
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(divisors(1), vec![1]);
        assert_eq!(divisors(49), vec![1, 7, 49]);
    }

    #[test]
    fn ln_of_big_values() {
        let f = big_factorial(300);
        assert!((ln_biguint(&f) - ln_gamma(301.0)).abs() < 1e-10);
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((ln_rational(&r) + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn quadrature_polynomial_and_log_singularity() {
        let q = integrate(|x| x * x, 0.0, 1.0, 1e-13).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-13);
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((q.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rational_from_float_is_exact() {
        let r = rational_from_f64(0.5).unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(1), BigInt::from(2)));
    }
}
