//! Falling-factorial moments of component counts.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::indep_process::TiltedParams;
use crate::numeric::{big_factorial, ln_add_exp, ln_factorial, ln_gamma, rat_int, rat_pow, rat_uint, CompensatedSum};
use crate::structures::{ComponentVector, Kind, StructureSpec};
use crate::sumdist::{ln_p_total_independent, PTotalTable};

/// Orders `r_j` of a joint falling-factorial moment `E prod (C_j)_{[r_j]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentSpec {
    orders: BTreeMap<usize, u32>,
}

impl MomentSpec {
    pub fn new(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut orders = BTreeMap::new();
        for (j, r) in pairs {
            if j < 1 {
                return Err(Error::Domain("moment index must be >= 1".into()));
            }
            if r > 0 {
                *orders.entry(j).or_insert(0) += r;
            }
        }
        Ok(MomentSpec { orders })
    }

    pub fn single(j: usize, r: u32) -> Result<Self> {
        MomentSpec::new([(j, r)])
    }

    /// Parses `"1:2,3:1"` as `r_1 = 2, r_3 = 1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::Domain(format!("bad moment order {part:?}, expected j:r"));
            let (j, r) = part.split_once(':').ok_or_else(bad)?;
            pairs.push((j.trim().parse().map_err(|_| bad())?, r.trim().parse().map_err(|_| bad())?));
        }
        MomentSpec::new(pairs)
    }

    /// `m = sum j r_j`.
    pub fn weight(&self) -> usize {
        self.orders.iter().map(|(&j, &r)| j * r as usize).sum()
    }

    pub fn orders(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.orders.iter().map(|(&j, &r)| (j, r))
    }
}

impl fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.orders().map(|(j, r)| format!("{j}:{r}")).collect();
        f.write_str(&parts.join(","))
    }
}

fn assembly_moment_with(spec: &StructureSpec, n: usize, r: &MomentSpec, params: &TiltedParams, table: &PTotalTable) -> f64 {
    let m = r.weight();
    if m > n {
        return 0.0;
    }
    let ln_x = params.x.ln();
    let mut v = -(m as f64) * ln_x + ln_factorial(n as u64) - table.ln_p(n) + table.ln_p(n - m)
        - ln_factorial((n - m) as u64);
    for (j, rj) in r.orders() {
        let ln_mj = spec.ln_m(j);
        if ln_mj == f64::NEG_INFINITY {
            return 0.0;
        }
        v += rj as f64 * (params.theta.ln() + ln_mj + j as f64 * ln_x - ln_factorial(j as u64));
    }
    v.exp()
}

/// `E prod_j (C_j(n))_{[r_j]}` for an assembly under `P_theta`.
pub fn factorial_moment_assembly(spec: &StructureSpec, n: usize, r: &MomentSpec, params: &TiltedParams) -> Result<f64> {
    if spec.kind != Kind::Assembly {
        return Err(Error::Domain(format!("joint moments need an assembly, {} is a {}", spec.name, spec.kind)));
    }
    if r.weight() > n {
        return Ok(0.0);
    }
    let table = PTotalTable::new(spec, n, params)?;
    Ok(assembly_moment_with(spec, n, r, params, &table))
}

/// `ln((m)(m+1)...(m+r-1))` or the falling analogue, from `ln m`.
fn ln_factorial_power(m_ln: f64, r: u32, rising: bool) -> f64 {
    let m = m_ln.exp();
    let mut acc = 0.0;
    for t in 0..r {
        let t = t as f64;
        let step = if rising { t } else { -t };
        acc += if m.is_finite() && m < 1e15 { (m + step).ln() } else { m_ln + (step / m).ln_1p() };
    }
    acc
}

fn ln_binom(a: u64, b: u64) -> f64 {
    ln_gamma(a as f64 + 1.0) - ln_gamma(b as f64 + 1.0) - ln_gamma((a - b) as f64 + 1.0)
}

/// `E (C_j(n))_{[r]}` under `P_theta`, using `x` only to tabulate `p_theta`.
pub fn factorial_moment_single(
    spec: &StructureSpec,
    n: usize,
    j: usize,
    r: u32,
    params: &TiltedParams,
) -> Result<f64> {
    if r < 1 {
        return Err(Error::Domain("moment order must be >= 1".into()));
    }
    if j < 1 {
        return Err(Error::Domain("moment index must be >= 1".into()));
    }
    if spec.kind == Kind::Assembly {
        return factorial_moment_assembly(spec, n, &MomentSpec::single(j, r)?, params);
    }
    params.validate(spec.kind)?;
    if j * r as usize > n {
        return Ok(0.0);
    }
    let ln_mj = spec.ln_m(j);
    if ln_mj == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if spec.kind == Kind::Selection {
        let mj = ln_mj.exp();
        if mj.is_finite() && mj < 1e15 && r as f64 > mj.round() {
            return Ok(0.0);
        }
    }
    let table = PTotalTable::new(spec, n, params)?;
    let ln_theta = params.theta.ln();
    let ln_pn = table.ln_p(n);
    let top = n / j;
    let term = |mm: usize| -> f64 {
        ln_binom(mm as u64 - 1, r as u64 - 1) + mm as f64 * ln_theta + table.ln_p(n - j * mm) - ln_pn
    };
    match spec.kind {
        Kind::Multiset => {
            let mut lse = f64::NEG_INFINITY;
            for mm in r as usize..=top {
                lse = ln_add_exp(lse, term(mm));
            }
            Ok((ln_factorial_power(ln_mj, r, true) + lse).exp())
        }
        Kind::Selection => {
            let mut sum = CompensatedSum::default();
            for mm in r as usize..=top {
                let sign = if (mm - r as usize) % 2 == 0 { 1.0 } else { -1.0 };
                sum.add(sign * term(mm).exp());
            }
            Ok(ln_factorial_power(ln_mj, r, false).exp() * sum.value())
        }
        Kind::Assembly => unreachable!(),
    }
}

fn ln_rising(kappa: f64, n: usize) -> f64 {
    (0..n).map(|k| (kappa + k as f64).ln()).sum()
}

/// Ewens sampling formula: `n! / kappa_(n) prod (kappa/i)^{a_i} / a_i!`.
pub fn esf_pmf(n: usize, kappa: f64, v: &ComponentVector) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    if v.n() != n || !v.is_complete() {
        return Ok(0.0);
    }
    let mut l = ln_factorial(n as u64) - ln_rising(kappa, n);
    for (k, &a) in v.a.iter().enumerate() {
        if a > 0 {
            l += a as f64 * (kappa.ln() - ((k + 1) as f64).ln()) - ln_factorial(a);
        }
    }
    Ok(l.exp())
}

/// Exact ESF probability for rational `kappa`.
pub fn esf_pmf_exact(n: usize, kappa: &BigRational, v: &ComponentVector) -> Result<BigRational> {
    if v.n() != n || !v.is_complete() {
        return Ok(BigRational::zero());
    }
    let mut rising = BigRational::one();
    for k in 0..n {
        rising *= kappa + rat_int(k as u64);
    }
    let mut acc = rat_uint(big_factorial(n as u64)) / rising;
    for (k, &a) in v.a.iter().enumerate() {
        if a > 0 {
            acc *= rat_pow(&(kappa / rat_int((k + 1) as u64)), a) / rat_uint(big_factorial(a));
        }
    }
    Ok(acc)
}

/// `E prod (C_j)_{[r_j]}` under the ESF:
/// `prod_{k<m} (n-k)/(kappa+n-1-k) * prod (kappa/j)^{r_j}`.
pub fn esf_moment(n: usize, kappa: f64, r: &MomentSpec) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    let m = r.weight();
    if m > n {
        return Ok(0.0);
    }
    let mut l = 0.0;
    for k in 0..m {
        l += ((n - k) as f64).ln() - (kappa + (n - 1 - k) as f64).ln();
    }
    for (j, rj) in r.orders() {
        l += rj as f64 * (kappa / j as f64).ln();
    }
    Ok(l.exp())
}

fn ln_p_total_any(spec: &StructureSpec, n: usize, theta: f64) -> Result<f64> {
    match ln_p_total_independent(spec, n, theta)? {
        Some(v) => Ok(v),
        None => Ok(PTotalTable::auto(spec, n, theta)?.ln_p(n)),
    }
}

/// `E theta^{K_n} = p_theta(n) / p(n)` under the uniform law.
pub fn expected_theta_k(spec: &StructureSpec, n: usize, theta: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(theta > 0.0) {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    Ok((ln_p_total_any(spec, n, theta)? - ln_p_total_any(spec, n, 1.0)?).exp())
}
