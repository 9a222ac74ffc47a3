//! Structure specifications, builtin families and the counting formulas.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::numeric::{
    big_factorial, divisors, ln_biguint, ln_gamma, ln_rational, mobius, rat_int, rat_pow, rat_uint,
    rational_from_f64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Assembly,
    Multiset,
    Selection,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Assembly => "assembly",
            Kind::Multiset => "multiset",
            Kind::Selection => "selection",
        })
    }
}

/// Logarithmic-class parameters: `i m_i y^i / i! -> kappa` (assemblies) or
/// `i m_i y^{-i} -> kappa` (multisets, selections).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub kappa: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Permutations,
    Mappings,
    SetPartitions,
    TwoRegular,
    Esf { kappa: BigRational },
    IntegerPartitions,
    Polynomials { q: u64 },
    DistinctParts,
    DistinctOddParts,
    SquareFree { q: u64 },
    /// Explicit finite list; `m_i = 0` beyond it.
    Explicit(Vec<BigRational>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureSpec {
    pub kind: Kind,
    pub family: Family,
    pub name: String,
    pub meta: Option<Meta>,
}

fn builtin_spec(kind: Kind, family: Family, name: &str, meta: Option<Meta>) -> StructureSpec {
    StructureSpec { kind, family, name: name.to_string(), meta }
}

impl StructureSpec {
    pub fn permutations() -> Self {
        builtin_spec(Kind::Assembly, Family::Permutations, "permutations", Some(Meta { kappa: 1.0, y: 1.0 }))
    }

    pub fn mappings() -> Self {
        let meta = Meta { kappa: 0.5, y: std::f64::consts::E };
        builtin_spec(Kind::Assembly, Family::Mappings, "mappings", Some(meta))
    }

    pub fn set_partitions() -> Self {
        builtin_spec(Kind::Assembly, Family::SetPartitions, "set_partitions", None)
    }

    pub fn two_regular() -> Self {
        builtin_spec(Kind::Assembly, Family::TwoRegular, "two_regular", Some(Meta { kappa: 0.5, y: 1.0 }))
    }

    /// Ewens sampling formula as the generalized assembly `m_i = kappa (i-1)!`.
    pub fn esf(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Spec(format!("esf kappa must be positive, got {kappa}")));
        }
        let family = Family::Esf { kappa: rational_from_f64(kappa)? };
        Ok(builtin_spec(Kind::Assembly, family, "esf", Some(Meta { kappa, y: 1.0 })))
    }

    pub fn integer_partitions() -> Self {
        builtin_spec(Kind::Multiset, Family::IntegerPartitions, "integer_partitions", None)
    }

    pub fn polynomials(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Spec(format!("polynomials need q >= 2, got {q}")));
        }
        let meta = Meta { kappa: 1.0, y: q as f64 };
        Ok(builtin_spec(Kind::Multiset, Family::Polynomials { q }, "polynomials", Some(meta)))
    }

    pub fn distinct_parts() -> Self {
        builtin_spec(Kind::Selection, Family::DistinctParts, "distinct_parts", None)
    }

    pub fn distinct_odd_parts() -> Self {
        builtin_spec(Kind::Selection, Family::DistinctOddParts, "distinct_odd_parts", None)
    }

    pub fn square_free(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::Spec(format!("square_free needs q >= 2, got {q}")));
        }
        let meta = Meta { kappa: 1.0, y: q as f64 };
        Ok(builtin_spec(Kind::Selection, Family::SquareFree { q }, "square_free", Some(meta)))
    }

    /// A user-supplied finite sequence `m_1, m_2, ...`.
    pub fn explicit(kind: Kind, m: Vec<BigRational>) -> Result<Self> {
        for (idx, v) in m.iter().enumerate() {
            if v.is_negative() {
                return Err(Error::Spec(format!("m_{} = {v} is negative", idx + 1)));
            }
            if kind == Kind::Selection && !v.is_integer() {
                return Err(Error::Spec(format!("selection needs integer m_i, m_{} = {v}", idx + 1)));
            }
        }
        Ok(StructureSpec { kind, family: Family::Explicit(m), name: "explicit".to_string(), meta: None })
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Every builtin family, with default parameters where one is needed.
    pub fn builtins() -> Vec<StructureSpec> {
        vec![
            Self::permutations(),
            Self::mappings(),
            Self::set_partitions(),
            Self::two_regular(),
            Self::esf(0.5).unwrap(),
            Self::integer_partitions(),
            Self::polynomials(2).unwrap(),
            Self::distinct_parts(),
            Self::distinct_odd_parts(),
            Self::square_free(2).unwrap(),
        ]
    }

    /// Looks up a builtin by name; `params` carries `kappa` or `q`.
    pub fn builtin(name: &str, params: &Map<String, Value>) -> Result<Self> {
        let get_f64 = |key: &str| -> Result<f64> {
            params
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Spec(format!("builtin {name} needs numeric param {key:?}")))
        };
        let get_q = || -> Result<u64> {
            params
                .get("q")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Spec(format!("builtin {name} needs integer param \"q\"")))
        };
        match name {
            "permutations" => Ok(Self::permutations()),
            "mappings" => Ok(Self::mappings()),
            "set_partitions" => Ok(Self::set_partitions()),
            "two_regular" => Ok(Self::two_regular()),
            "esf" => Self::esf(get_f64("kappa")?),
            "integer_partitions" => Ok(Self::integer_partitions()),
            "polynomials" => Self::polynomials(get_q()?),
            "distinct_parts" => Ok(Self::distinct_parts()),
            "distinct_odd_parts" => Ok(Self::distinct_odd_parts()),
            "square_free" => Self::square_free(get_q()?),
            other => Err(Error::Spec(format!("unknown builtin {other:?}"))),
        }
    }

    fn builtin_params(&self) -> Map<String, Value> {
        let mut params = Map::new();
        match &self.family {
            Family::Esf { .. } => {
                let kappa = self.meta.map(|m| m.kappa).unwrap_or(1.0);
                params.insert("kappa".into(), Value::from(kappa));
            }
            Family::Polynomials { q } | Family::SquareFree { q } => {
                params.insert("q".into(), Value::from(*q));
            }
            _ => {}
        }
        params
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(text)?;
        file.into_spec()
    }

    /// Canonical JSON form; reading it back yields an equal spec.
    pub fn to_json_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::from(self.kind.to_string()));
        match &self.family {
            Family::Explicit(m) => {
                let list = m
                    .iter()
                    .map(|v| {
                        if v.is_integer() {
                            match v.to_integer().to_u64() {
                                Some(u) => Value::from(u),
                                None => Value::from(v.to_string()),
                            }
                        } else {
                            Value::from(v.to_string())
                        }
                    })
                    .collect();
                obj.insert("m".into(), Value::Array(list));
                if let Some(meta) = self.meta {
                    obj.insert("meta".into(), serde_json::to_value(meta).unwrap());
                }
            }
            _ => {
                obj.insert("builtin".into(), Value::from(self.name.clone()));
                obj.insert("params".into(), Value::Object(self.builtin_params()));
            }
        }
        Value::Object(obj)
    }

    /// `m_i`, exactly.
    pub fn m_of(&self, i: usize) -> Result<BigRational> {
        if i < 1 {
            return Err(Error::Domain("component size index must be >= 1".into()));
        }
        let iu = i as u64;
        Ok(match &self.family {
            Family::Permutations => rat_uint(big_factorial(iu - 1)),
            Family::Mappings => rat_uint(mapping_m(iu)),
            Family::SetPartitions | Family::IntegerPartitions | Family::DistinctParts => BigRational::one(),
            Family::TwoRegular => {
                if i >= 3 {
                    rat_uint(big_factorial(iu - 1) / 2u32)
                } else {
                    BigRational::zero()
                }
            }
            Family::Esf { kappa } => kappa * rat_uint(big_factorial(iu - 1)),
            Family::Polynomials { q } | Family::SquareFree { q } => rat_uint(irreducible_count(*q, iu)),
            Family::DistinctOddParts => rat_int(i64::from(i % 2 == 1)),
            Family::Explicit(m) => m.get(i - 1).cloned().unwrap_or_else(BigRational::zero),
        })
    }

    /// `ln m_i` (`-inf` when `m_i = 0`), accurate beyond the f64 range of `m_i`.
    pub fn ln_m(&self, i: usize) -> f64 {
        assert!(i >= 1);
        let fi = i as f64;
        match &self.family {
            Family::Permutations => ln_gamma(fi),
            Family::Mappings => {
                if i <= 100 {
                    ln_biguint(&mapping_m(i as u64))
                } else {
                    ln_mapping_m(i)
                }
            }
            Family::SetPartitions | Family::IntegerPartitions | Family::DistinctParts => 0.0,
            Family::TwoRegular => {
                if i >= 3 {
                    ln_gamma(fi) - std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Esf { kappa } => ln_rational(kappa) + ln_gamma(fi),
            Family::Polynomials { q } | Family::SquareFree { q } => {
                if i <= 200 {
                    ln_biguint(&irreducible_count(*q, i as u64))
                } else {
                    ln_irreducible_count(*q, i as u64)
                }
            }
            Family::DistinctOddParts => {
                if i % 2 == 1 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Family::Explicit(m) => match m.get(i - 1) {
                Some(v) => ln_rational(v),
                None => f64::NEG_INFINITY,
            },
        }
    }

    /// `ln m_i` for `i = 1..=n`; entry 0 is unused.
    pub fn ln_m_table(&self, n: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(n + 1);
        t.push(f64::NEG_INFINITY);
        t.extend((1..=n).map(|i| self.ln_m(i)));
        t
    }
}

/// `(i-1)! * sum_{j<i} i^j / j!`, an integer.
fn mapping_m(i: u64) -> BigUint {
    let mut sum = BigUint::zero();
    let mut coef = BigUint::one();
    for j in (0..i).rev() {
        sum += BigUint::from(i).pow(j as u32) * &coef;
        if j > 0 {
            coef *= j;
        }
    }
    sum
}

fn ln_mapping_m(i: usize) -> f64 {
    // ln m = (i-1) ln i + ln sum_j exp(d_j), d_{i-1} = 0, d_{j-1} = d_j + ln(j/i)
    let li = (i as f64).ln();
    let mut d = 0.0;
    let mut acc = 1.0;
    for j in (1..i).rev() {
        d += (j as f64).ln() - li;
        if d < -45.0 {
            break;
        }
        acc += d.exp();
    }
    (i as f64 - 1.0) * li + acc.ln()
}

/// `(1/n) sum_{k|n} mu(n/k) q^k`.
pub fn irreducible_count(q: u64, n: u64) -> BigUint {
    let mut total = BigInt::zero();
    for k in divisors(n) {
        let term = BigInt::from(q).pow(k as u32);
        match mobius(n / k) {
            1 => total += term,
            -1 => total -= term,
            _ => {}
        }
    }
    (total / BigInt::from(n)).to_biguint().expect("nonnegative count")
}

fn ln_irreducible_count(q: u64, n: u64) -> f64 {
    let lq = (q as f64).ln();
    let mut corr = 0.0;
    for k in divisors(n) {
        if k == n {
            continue;
        }
        let mu = mobius(n / k);
        if mu != 0 {
            corr += mu as f64 * ((k as f64 - n as f64) * lq).exp();
        }
    }
    n as f64 * lq - (n as f64).ln() + corr.ln_1p()
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn parse_m_value(v: &Value, idx: usize) -> Result<BigRational> {
    let bad = || Error::Spec(format!("m_{} is not a nonnegative number: {v}", idx + 1));
    match v {
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                Ok(rat_int(u))
            } else if let Some(f) = num.as_f64() {
                rational_from_f64(f).map_err(|_| bad())
            } else {
                Err(bad())
            }
        }
        Value::String(s) => {
            let s = s.trim();
            if let Some((p, q)) = s.split_once('/') {
                let p: BigInt = p.trim().parse().map_err(|_| bad())?;
                let q: BigInt = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(bad());
                }
                Ok(BigRational::new(p, q))
            } else {
                let p: BigInt = s.parse().map_err(|_| bad())?;
                Ok(BigRational::from_integer(p))
            }
        }
        _ => Err(bad()),
    }
}

impl SpecFile {
    fn into_spec(self) -> Result<StructureSpec> {
        match (self.builtin, self.m) {
            (Some(name), None) => {
                let spec = StructureSpec::builtin(&name, &self.params.unwrap_or_default())?;
                if spec.kind != self.kind {
                    return Err(Error::Spec(format!(
                        "builtin {name} is a {}, but kind says {}",
                        spec.kind, self.kind
                    )));
                }
                Ok(match self.meta {
                    Some(meta) => spec.with_meta(meta),
                    None => spec,
                })
            }
            (None, Some(list)) => {
                let m = list.iter().enumerate().map(|(i, v)| parse_m_value(v, i)).collect::<Result<Vec<_>>>()?;
                let spec = StructureSpec::explicit(self.kind, m)?;
                Ok(match self.meta {
                    Some(meta) => spec.with_meta(meta),
                    None => spec,
                })
            }
            _ => Err(Error::Spec("spec needs exactly one of \"builtin\" or \"m\"".into())),
        }
    }
}

/// A component-size spectrum `a_1..a_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentVector {
    pub a: Vec<u64>,
}

impl ComponentVector {
    pub fn new(a: Vec<u64>) -> Self {
        ComponentVector { a }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `sum i a_i`.
    pub fn weight(&self) -> u64 {
        self.a.iter().enumerate().map(|(k, &c)| (k as u64 + 1) * c).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.weight() == self.n() as u64
    }

    /// Number of components `sum a_i`.
    pub fn components(&self) -> u64 {
        self.a.iter().sum()
    }

    /// Sparse `i:a_i` rendering of the nonzero entries.
    pub fn sparse(&self) -> String {
        let parts: Vec<String> = self
            .a
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, c)| format!("{}:{}", k + 1, c))
            .collect();
        parts.join(" ")
    }
}

/// `N(n, a)`, the number of structures of weight `n` with spectrum `a`.
pub fn count_n(spec: &StructureSpec, v: &ComponentVector) -> Result<BigRational> {
    if !v.is_complete() {
        return Ok(BigRational::zero());
    }
    let n = v.n() as u64;
    let mut acc = BigRational::one();
    for (k, &a) in v.a.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let i = k + 1;
        let m = spec.m_of(i)?;
        let a_fact = rat_uint(big_factorial(a));
        match spec.kind {
            Kind::Assembly => {
                let i_fact = rat_uint(big_factorial(i as u64));
                acc *= rat_pow(&(m / i_fact), a) / a_fact;
            }
            Kind::Multiset => {
                let mut rising = BigRational::one();
                for j in 0..a {
                    rising *= &m + rat_int(j);
                }
                acc *= rising / a_fact;
            }
            Kind::Selection => {
                let mut falling = BigRational::one();
                for j in 0..a {
                    falling *= &m - rat_int(j);
                }
                if falling.is_zero() || falling.is_negative() {
                    return Ok(BigRational::zero());
                }
                acc *= falling / a_fact;
            }
        }
    }
    if spec.kind == Kind::Assembly {
        acc *= rat_uint(big_factorial(n));
    }
    Ok(acc)
}

/// `p_theta(k)` for `k = 0..=n`, exactly, from the generating-function
/// recursions with `x = 1`.
///
/// The recursions run over integers after clearing denominators: with
/// `theta m_i = u_i / D`, `D^k p(k)` is an integer for assemblies, and with
/// `theta = a / b` and integer `m_i`, so is `b^k p(k)` for the other kinds.
pub fn p_total_exact_table(spec: &StructureSpec, n: usize, theta: &BigRational) -> Result<Vec<BigRational>> {
    if !theta.is_positive() {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    let m: Vec<BigRational> = (1..=n).map(|i| spec.m_of(i)).collect::<Result<_>>()?;
    let unscale = |big: Vec<BigInt>, d: &BigInt| -> Vec<BigRational> {
        let mut pow = BigInt::one();
        big.into_iter()
            .map(|v| {
                let r = BigRational::new(v, pow.clone());
                pow *= d;
                r
            })
            .collect()
    };
    match spec.kind {
        Kind::Assembly => {
            let tm: Vec<BigRational> = m.iter().map(|v| theta * v).collect();
            let d = tm.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            // u_i = theta m_i D
            let u: Vec<BigInt> = tm.iter().map(|v| (v * BigRational::from(d.clone())).to_integer()).collect();
            let mut d_pow = vec![BigInt::one()];
            for i in 1..n {
                let next = &d_pow[i - 1] * &d;
                d_pow.push(next);
            }
            // P(k) = sum_i C(k-1, i-1) u_i D^{i-1} P(k-i)
            let w: Vec<BigInt> = u.iter().zip(&d_pow).map(|(a, b)| a * b).collect();
            let mut p = vec![BigInt::one()];
            for k in 1..=n {
                let mut s = BigInt::zero();
                let mut binom = BigInt::one();
                for i in 1..=k {
                    if i > 1 {
                        binom = binom * (k - i + 1) / (i - 1);
                    }
                    if !w[i - 1].is_zero() {
                        s += &binom * &w[i - 1] * &p[k - i];
                    }
                }
                p.push(s);
            }
            Ok(unscale(p, &d))
        }
        Kind::Multiset | Kind::Selection if m.iter().all(|v| v.is_integer()) => {
            let sign_alt = spec.kind == Kind::Selection;
            let (a, b) = (theta.numer().clone(), theta.denom().clone());
            let mut a_pow = vec![BigInt::one()];
            let mut b_pow = vec![BigInt::one()];
            for r in 1..=n {
                let (na, nb) = (&a_pow[r - 1] * &a, &b_pow[r - 1] * &b);
                a_pow.push(na);
                b_pow.push(nb);
            }
            // G(i) = b^i g(i) = sum_{d r = i} (+-) d m_d a^r b^{i-r}
            let mut g = vec![BigInt::zero(); n + 1];
            for d in 1..=n {
                let md = m[d - 1].to_integer();
                if md.is_zero() {
                    continue;
                }
                let dm = md * d;
                for r in 1..=n / d {
                    let i = d * r;
                    let term = &dm * &a_pow[r] * &b_pow[i - r];
                    if sign_alt && r % 2 == 0 {
                        g[i] -= term;
                    } else {
                        g[i] += term;
                    }
                }
            }
            // k P(k) = sum_i G(i) P(k-i), P(k) = b^k p(k)
            let mut p = vec![BigInt::one()];
            for k in 1..=n {
                let mut s = BigInt::zero();
                for i in 1..=k {
                    if !g[i].is_zero() && !p[k - i].is_zero() {
                        s += &g[i] * &p[k - i];
                    }
                }
                p.push(s / k);
            }
            Ok(unscale(p, &b))
        }
        Kind::Multiset | Kind::Selection => {
            let sign_alt = spec.kind == Kind::Selection;
            let mut p = vec![BigRational::one()];
            let mut g = vec![BigRational::zero(); n + 1];
            let mut theta_pow = vec![BigRational::one()];
            for r in 1..=n {
                let next = &theta_pow[r - 1] * theta;
                theta_pow.push(next);
            }
            for d in 1..=n {
                if m[d - 1].is_zero() {
                    continue;
                }
                let dm = rat_int(d as u64) * &m[d - 1];
                for r in 1..=n / d {
                    let term = &dm * &theta_pow[r];
                    if sign_alt && r % 2 == 0 {
                        g[d * r] -= term;
                    } else {
                        g[d * r] += term;
                    }
                }
            }
            for k in 1..=n {
                let mut s = BigRational::zero();
                for i in 1..=k {
                    if !g[i].is_zero() && !p[k - i].is_zero() {
                        s += &g[i] * &p[k - i];
                    }
                }
                p.push(s / rat_int(k as u64));
            }
            Ok(p)
        }
    }
}

/// `p_theta(n) = sum_k p(n, k) theta^k`, exactly.
pub fn p_total_exact(spec: &StructureSpec, n: usize, theta: &BigRational) -> Result<BigRational> {
    Ok(p_total_exact_table(spec, n, theta)?.pop().unwrap())
}

/// `ln p_theta(n)` by inverting the closed form for `P_theta(T_n = n)` at the
/// given `x`.
pub fn ln_p_total(spec: &StructureSpec, n: usize, theta: f64, x: f64) -> Result<f64> {
    let params = crate::indep_process::TiltedParams::new(x, theta)?;
    let table = crate::sumdist::PTotalTable::new(spec, n, &params)?;
    Ok(table.ln_p(n))
}

/// `p_theta(n)` as a float (may overflow to infinity for large `n`).
pub fn p_total(spec: &StructureSpec, n: usize, theta: f64, x: f64) -> Result<f64> {
    Ok(ln_p_total(spec, n, theta, x)?.exp())
}

/// `theta^{sum a} N(n, a) / p_theta(n)`, exactly.
pub fn uniform_pmf(spec: &StructureSpec, v: &ComponentVector, theta: &BigRational) -> Result<BigRational> {
    let count = count_n(spec, v)?;
    if count.is_zero() {
        return Ok(count);
    }
    let total = p_total_exact(spec, v.n(), theta)?;
    Ok(count * rat_pow(theta, v.components()) / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn m_values_for_builtins() {
        assert_eq!(StructureSpec::permutations().m_of(4).unwrap(), rat_int(6));
        let poly = StructureSpec::polynomials(2).unwrap();
        assert_eq!(poly.m_of(4).unwrap(), rat_int(3));
        let two = StructureSpec::two_regular();
        assert_eq!(two.m_of(2).unwrap(), rat_int(0));
        assert_eq!(two.m_of(3).unwrap(), rat_int(1));
        // connected mappings on 1, 2, 3 points: 1, 3, 17
        let maps = StructureSpec::mappings();
        let got: Vec<_> = (1..=3).map(|i| maps.m_of(i).unwrap()).collect();
        assert_eq!(got, vec![rat_int(1), rat_int(3), rat_int(17)]);
        assert!(StructureSpec::permutations().m_of(0).is_err());
    }

    #[test]
    fn ln_m_matches_exact_past_cutoffs() {
        let maps = StructureSpec::mappings();
        for i in [101usize, 150, 250] {
            let exact = ln_biguint(&mapping_m(i as u64));
            assert!((maps.ln_m(i) - exact).abs() < 1e-9 * exact, "i = {i}");
        }
        let poly = StructureSpec::polynomials(3).unwrap();
        for i in [201usize, 240] {
            let exact = ln_biguint(&irreducible_count(3, i as u64));
            assert!((poly.ln_m(i) - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn polynomial_counts_satisfy_divisor_identity() {
        for q in [2u64, 3, 4] {
            for n in 1..=30u64 {
                let s: BigUint = divisors(n).into_iter().map(|j| irreducible_count(q, j) * j).sum();
                assert_eq!(s, BigUint::from(q).pow(n as u32));
            }
        }
    }

    #[test]
    fn counting_examples() {
        let perm = StructureSpec::permutations();
        assert_eq!(count_n(&perm, &ComponentVector::new(vec![1, 1, 0])).unwrap(), rat_int(3));
        let ip = StructureSpec::integer_partitions();
        assert_eq!(count_n(&ip, &ComponentVector::new(vec![2, 1, 0, 0])).unwrap(), rat_int(1));
        let sel = StructureSpec::explicit(Kind::Selection, vec![rat_int(2), rat_int(1)]).unwrap();
        assert_eq!(count_n(&sel, &ComponentVector::new(vec![2, 0])).unwrap(), rat_int(1));
        assert_eq!(count_n(&perm, &ComponentVector::new(vec![1, 0, 0])).unwrap(), rat_int(0));
    }

    #[test]
    fn p_total_examples() {
        let one = rat_int(1);
        assert_eq!(p_total_exact(&StructureSpec::permutations(), 5, &one).unwrap(), rat_int(120));
        assert_eq!(p_total_exact(&StructureSpec::permutations(), 3, &rat_int(2)).unwrap(), rat_int(24));
        assert_eq!(p_total_exact(&StructureSpec::set_partitions(), 5, &one).unwrap(), rat_int(52));
        assert_eq!(p_total_exact(&StructureSpec::integer_partitions(), 10, &one).unwrap(), rat_int(42));
        assert_eq!(p_total_exact(&StructureSpec::distinct_parts(), 10, &one).unwrap(), rat_int(10));
        assert_eq!(p_total_exact(&StructureSpec::distinct_odd_parts(), 10, &one).unwrap(), rat_int(2));
        // monic polynomials of degree n over F_q: q^n
        assert_eq!(p_total_exact(&StructureSpec::polynomials(3).unwrap(), 6, &one).unwrap(), rat_int(729));
        // all mappings of [n]: n^n
        assert_eq!(p_total_exact(&StructureSpec::mappings(), 6, &one).unwrap(), rat_int(46656));
        // 2-regular graphs on 6 points: 70
        assert_eq!(p_total_exact(&StructureSpec::two_regular(), 6, &one).unwrap(), rat_int(70));
        // square-free monic polynomials: q^n - q^{n-1}
        assert_eq!(p_total_exact(&StructureSpec::square_free(2).unwrap(), 5, &one).unwrap(), rat_int(16));
    }

    #[test]
    fn esf_p_total_is_rising_factorial() {
        // kappa theta = 1/4 here, so the scale has to absorb both denominators
        let spec = StructureSpec::esf(0.5).unwrap();
        let got = p_total_exact_table(&spec, 4, &r(1, 2)).unwrap();
        assert_eq!(got[1..].to_vec(), vec![r(1, 4), r(5, 16), r(45, 64), r(585, 256)]);
        let got = p_total_exact(&StructureSpec::esf(1.5).unwrap(), 3, &r(2, 3)).unwrap();
        assert_eq!(got, rat_int(6));
    }

    #[test]
    fn float_p_total_independent_of_x() {
        let spec = StructureSpec::set_partitions();
        let a = ln_p_total(&spec, 30, 1.0, 2.0).unwrap();
        let b = ln_p_total(&spec, 30, 1.0, 3.5).unwrap();
        let exact = ln_rational(&p_total_exact(&spec, 30, &rat_int(1)).unwrap());
        assert!((a - b).abs() < 1e-9);
        assert!((a - exact).abs() < 1e-9);
    }

    #[test]
    fn uniform_pmf_examples() {
        let perm = StructureSpec::permutations();
        let v = ComponentVector::new(vec![0, 0, 1]);
        assert_eq!(uniform_pmf(&perm, &v, &rat_int(1)).unwrap(), r(1, 3));
        let esf = StructureSpec::permutations();
        let v = ComponentVector::new(vec![2, 0]);
        assert_eq!(uniform_pmf(&esf, &v, &rat_int(2)).unwrap(), r(2, 3));
        assert_eq!(uniform_pmf(&perm, &ComponentVector::new(vec![0, 0, 0]), &rat_int(1)).unwrap(), r(0, 1));
    }

    #[test]
    fn json_roundtrip() {
        for spec in StructureSpec::builtins() {
            let text = spec.to_json_value().to_string();
            assert_eq!(StructureSpec::from_json_str(&text).unwrap(), spec);
        }
        let text = r#"{"kind": "multiset", "m": [2, 1, "3/2"]}"#;
        let spec = StructureSpec::from_json_str(text).unwrap();
        assert_eq!(spec.m_of(3).unwrap(), r(3, 2));
        assert_eq!(spec.m_of(4).unwrap(), r(0, 1));
        let bad = r#"{"kind": "selection", "m": [0.5]}"#;
        assert!(StructureSpec::from_json_str(bad).is_err());
        let mismatch = r#"{"kind": "multiset", "builtin": "permutations"}"#;
        assert!(StructureSpec::from_json_str(mismatch).is_err());
    }
}
