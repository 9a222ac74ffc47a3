//! Exact laws of weighted sums `R_B = sum_{i in B} i Z_i`.

use std::fmt;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::indep_process::{Process, TiltedParams};
use crate::numeric::{ln_gamma, ln_rational, rational_from_f64};
use crate::structures::{p_total_exact, Family, Kind, StructureSpec};

/// A sorted set of distinct component sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSet {
    items: Vec<usize>,
}

impl IndexSet {
    pub fn new(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        items.dedup();
        if items.first() == Some(&0) {
            return Err(Error::Domain("index sets contain sizes >= 1".into()));
        }
        Ok(IndexSet { items })
    }

    pub fn empty() -> Self {
        IndexSet::default()
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        IndexSet { items: (1..=n).collect() }
    }

    /// `{1, ..., n}` minus `self`.
    pub fn complement(&self, n: usize) -> Self {
        let mut mask = vec![false; n + 1];
        for &i in &self.items {
            if i <= n {
                mask[i] = true;
            }
        }
        IndexSet { items: (1..=n).filter(|&i| !mask[i]).collect() }
    }

    /// Parses `"1..5,7"`; the empty string is the empty set.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::Domain(format!("bad index set element {part:?}"));
            if let Some((a, b)) = part.split_once("..") {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                items.extend(a..=b);
            } else {
                items.push(part.parse().map_err(|_| bad())?);
            }
        }
        IndexSet::new(items)
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.items.last() {
            Some(&top) if top > n => Err(Error::Domain(format!("index {top} exceeds n = {n}"))),
            _ => Ok(()),
        }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn contains(&self, i: usize) -> bool {
        self.items.binary_search(&i).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn max(&self) -> usize {
        self.items.last().copied().unwrap_or(0)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.items.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

const CLAMP: f64 = 1e-13;

/// Law of a nonnegative integer variable on `0..=n_max` plus the mass above.
#[derive(Debug, Clone)]
pub struct PmfVector {
    mass: Vec<Ext>,
    tail: f64,
}

impl PmfVector {
    /// Builds from entries, clamping float dust and deriving the tail.
    pub fn from_ext(mut mass: Vec<Ext>) -> Result<Self> {
        for (k, v) in mass.iter_mut().enumerate() {
            if v.is_sign_negative() {
                let f = v.to_f64();
                if f < -CLAMP {
                    return Err(Error::Numeric(format!("negative probability {f:e} at {k}: cancellation")));
                }
                *v = Ext::ZERO;
            }
        }
        let total: f64 = mass.iter().map(Ext::to_f64).sum();
        let tail = (1.0 - total).max(0.0);
        let tail = if tail < CLAMP { 0.0 } else { tail };
        Ok(PmfVector { mass, tail })
    }

    /// Conditional laws have no mass beyond `n_max` by construction.
    fn with_zero_tail(mass: Vec<Ext>) -> Self {
        PmfVector { mass, tail: 0.0 }
    }

    pub fn point_mass(at: usize) -> Self {
        let mut mass = vec![Ext::ZERO; at + 1];
        mass[at] = Ext::ONE;
        PmfVector { mass, tail: 0.0 }
    }

    /// From plain probabilities; the tail is whatever is missing.
    pub fn from_probs(p: &[f64]) -> Result<Self> {
        PmfVector::from_ext(p.iter().map(|&v| Ext::from_f64(v)).collect())
    }

    pub fn n_max(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn p(&self, k: usize) -> f64 {
        self.mass.get(k).map(Ext::to_f64).unwrap_or(0.0)
    }

    pub fn ln_p(&self, k: usize) -> f64 {
        self.mass.get(k).map(Ext::ln).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn ext(&self, k: usize) -> Ext {
        self.mass.get(k).copied().unwrap_or(Ext::ZERO)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.mass.iter().map(Ext::to_f64).collect()
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Mean over the represented support (tail ignored).
    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(k, v)| k as f64 * v.to_f64()).sum()
    }

    /// `E|R - E R|` over the represented support.
    pub fn mean_abs_dev(&self) -> f64 {
        let mu = self.mean();
        self.mass.iter().enumerate().map(|(k, v)| (k as f64 - mu).abs() * v.to_f64()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Recursion for assemblies and multisets, convolution for selections.
    Auto,
    Recursion,
    Convolution,
}

fn seed_ln(process: &Process, b: &IndexSet) -> f64 {
    b.items().iter().map(|&i| process.law(i).ln_p0()).sum()
}

/// Nonzero `g_B(i)` for `i <= n_max`, ascending in `i`.
fn recursion_weights(process: &Process, b: &IndexSet, n_max: usize) -> Vec<(usize, Ext)> {
    let ln_x = process.params.x.ln();
    let ln_theta = process.params.theta.ln();
    let mut g = vec![Ext::ZERO; n_max + 1];
    for &k in b.items() {
        if k > n_max {
            break;
        }
        let ln_m = process.ln_m(k);
        if ln_m == f64::NEG_INFINITY {
            continue;
        }
        match process.kind {
            Kind::Assembly => {
                let ln_lambda = ln_m + ln_theta + k as f64 * ln_x - ln_gamma(k as f64 + 1.0);
                g[k] = Ext::from_ln((k as f64).ln() + ln_lambda);
            }
            Kind::Multiset | Kind::Selection => {
                let base = (k as f64).ln() + ln_m;
                for r in 1..=n_max / k {
                    let i = k * r;
                    let term = Ext::from_ln(base + r as f64 * ln_theta + i as f64 * ln_x);
                    g[i] = if process.kind == Kind::Selection && r % 2 == 0 { g[i] - term } else { g[i] + term };
                }
            }
        }
    }
    g.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect()
}

fn by_recursion(process: &Process, b: &IndexSet, n_max: usize) -> Vec<Ext> {
    seeded(odds_by_recursion(process, b, n_max), seed_ln(process, b))
}

fn by_convolution(process: &Process, b: &IndexSet, n_max: usize) -> Vec<Ext> {
    seeded(odds_by_convolution(process, b, n_max), seed_ln(process, b))
}

fn seeded(mut p: Vec<Ext>, ln_seed: f64) -> Vec<Ext> {
    let c = Ext::from_ln(ln_seed);
    for v in p.iter_mut() {
        *v = *v * c;
    }
    p
}

/// `P(R_B = k) / P(R_B = 0)` by the recursion.
fn odds_by_recursion(process: &Process, b: &IndexSet, n_max: usize) -> Vec<Ext> {
    let g = recursion_weights(process, b, n_max);
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(Ext::ONE);
    for k in 1..=n_max {
        let mut s = Ext::ZERO;
        for &(i, gi) in &g {
            if i > k {
                break;
            }
            s = s + gi * p[k - i];
        }
        p.push(s.scale(1.0 / k as f64));
    }
    p
}

/// `P(R_B = k) / P(R_B = 0)` by convolving the laws of the `Z_i`.
fn odds_by_convolution(process: &Process, b: &IndexSet, n_max: usize) -> Vec<Ext> {
    let mut p = vec![Ext::ZERO; n_max + 1];
    p[0] = Ext::ONE;
    for &i in b.items() {
        if i > n_max {
            break;
        }
        let law = process.law(i);
        let mut kmax = (n_max / i) as u64;
        if let Some(top) = law.max_support() {
            kmax = kmax.min(top);
        }
        let f: Vec<Ext> = law.ln_odds_table(kmax).into_iter().map(Ext::from_ln).collect();
        for k in (0..=n_max).rev() {
            let mut s = Ext::ZERO;
            for (j, fj) in f.iter().enumerate() {
                let step = i * j;
                if step > k {
                    break;
                }
                s = s + *fj * p[k - step];
            }
            p[k] = s;
        }
    }
    p
}

/// Law of `R_B` on `0..=n_max` from a prepared process.
pub fn pmf_from_process(process: &Process, b: &IndexSet, n_max: usize, method: Method) -> Result<PmfVector> {
    b.check_within(process.n)?;
    let use_recursion = match method {
        Method::Auto => process.kind != Kind::Selection,
        Method::Recursion => true,
        Method::Convolution => false,
    };
    let mass = if use_recursion { by_recursion(process, b, n_max) } else { by_convolution(process, b, n_max) };
    PmfVector::from_ext(mass)
}

fn process_for(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<Process> {
    Process::new(spec, n.max(b.max()), params)
}

/// Law of `R_B` on `0..=n_max` under `P_theta`.
pub fn weighted_sum_pmf(spec: &StructureSpec, b: &IndexSet, n_max: usize, params: &TiltedParams) -> Result<PmfVector> {
    weighted_sum_pmf_with(spec, b, n_max, params, Method::Auto)
}

pub fn weighted_sum_pmf_with(
    spec: &StructureSpec,
    b: &IndexSet,
    n_max: usize,
    params: &TiltedParams,
    method: Method,
) -> Result<PmfVector> {
    let process = process_for(spec, b, n_max, params)?;
    pmf_from_process(&process, b, n_max, method)
}

/// Largest entrywise gap between the signed selection recursion and the
/// all-positive convolution, relative to `max(p, 1e-6 * max p)`; errors past
/// `1e-8`.  Entries far below the window's largest are compared in absolute
/// terms.
const GAP_FLOOR: f64 = 1e-6;

pub fn selection_recursion_gap(
    spec: &StructureSpec,
    b: &IndexSet,
    n_max: usize,
    params: &TiltedParams,
) -> Result<f64> {
    let process = process_for(spec, b, n_max, params)?;
    let rec = by_recursion(&process, b, n_max);
    let conv = by_convolution(&process, b, n_max);
    let top = conv.iter().copied().max_by(|a, b| a.cmp_abs(b)).unwrap_or(Ext::ZERO).abs();
    let floor = top.scale(GAP_FLOOR);
    let mut gap: f64 = 0.0;
    for (r, c) in rec.iter().zip(&conv) {
        let diff = (*r - *c).abs();
        let scale = if c.cmp_abs(&floor) == std::cmp::Ordering::Less { floor } else { *c };
        gap = gap.max(diff.ratio(&scale));
    }
    if gap > 1e-8 {
        return Err(Error::Numeric(format!("signed recursion cancellation: relative gap {gap:e}")));
    }
    Ok(gap)
}

/// `P_theta(T_n = n)` by the recursion and, when an independent `p_theta(n)`
/// is available, by the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbT {
    pub ln_recursion: f64,
    pub ln_closed_form: Option<f64>,
}

impl ProbT {
    pub fn recursion(&self) -> f64 {
        self.ln_recursion.exp()
    }

    pub fn closed_form(&self) -> Option<f64> {
        self.ln_closed_form.map(f64::exp)
    }

    pub fn rel_gap(&self) -> Option<f64> {
        self.ln_closed_form.map(|c| (self.ln_recursion - c).exp_m1().abs())
    }
}

/// Largest `n` for which the closed form uses the exact rational `p_theta(n)`.
pub const EXACT_P_TOTAL_LIMIT: usize = 300;

/// Independent `ln p_theta(n)`: rising factorials for the Ewens family,
/// otherwise the rational recursion for moderate `n`.
pub fn ln_p_total_independent(spec: &StructureSpec, n: usize, theta: f64) -> Result<Option<f64>> {
    match &spec.family {
        Family::Permutations | Family::Esf { .. } => {
            let kappa = spec.meta.map(|m| m.kappa).unwrap_or(1.0);
            let kt = kappa * theta;
            Ok(Some((0..n).map(|k| (kt + k as f64).ln()).sum()))
        }
        _ if n <= EXACT_P_TOTAL_LIMIT => {
            let t = rational_from_f64(theta)?;
            Ok(Some(ln_rational(&p_total_exact(spec, n, &t)?)))
        }
        _ => Ok(None),
    }
}

pub fn prob_t_eq_n(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<ProbT> {
    let process = Process::new(spec, n, params)?;
    let full = IndexSet::full(n);
    let pmf = pmf_from_process(&process, &full, n, Method::Auto)?;
    let ln_recursion = pmf.ln_p(n);
    let ln_closed_form = ln_p_total_independent(spec, n, params.theta)?.map(|ln_p| {
        let mut v = ln_p + n as f64 * params.x.ln() + seed_ln(&process, &full);
        if spec.kind == Kind::Assembly {
            v -= ln_gamma(n as f64 + 1.0);
        }
        v
    });
    Ok(ProbT { ln_recursion, ln_closed_form })
}

/// The three laws behind the total-variation identity: `R_B`, `S_B` (the
/// complement sum) and `P(T_n = n)` as their convolution at `n`.
pub struct SplitLaws {
    pub r: PmfVector,
    pub s: PmfVector,
    pub t: Ext,
}

pub fn split(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<SplitLaws> {
    b.check_within(n)?;
    let process = Process::new(spec, n, params)?;
    let r = pmf_from_process(&process, b, n, Method::Auto)?;
    let s = pmf_from_process(&process, &b.complement(n), n, Method::Auto)?;
    let t: Ext = (0..=n).map(|k| r.ext(k) * s.ext(n - k)).sum();
    if t.is_zero() {
        return Err(Error::ZeroProbability(format!("P(T_n = {n}) = 0")));
    }
    Ok(SplitLaws { r, s, t })
}

/// Law of `R_B` given `T_n = n`.
pub fn conditioned_r_pmf(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<PmfVector> {
    let SplitLaws { r, s, t } = split(spec, b, n, params)?;
    let mass = (0..=n)
        .map(|k| {
            let num = r.ext(k) * s.ext(n - k);
            if num.is_zero() {
                Ext::ZERO
            } else {
                Ext::from_f64(num.ratio(&t))
            }
        })
        .collect();
    Ok(PmfVector::with_zero_tail(mass))
}

/// Joint law of `(U_B, R_B) = (sum Z_i, sum i Z_i)` over `i in B`, truncated.
#[derive(Debug, Clone)]
pub struct JointPmf {
    p: Vec<Vec<Ext>>,
}

impl JointPmf {
    pub fn u_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn n_max(&self) -> usize {
        self.p[0].len() - 1
    }

    pub fn get(&self, u: usize, r: usize) -> f64 {
        self.p[u][r].to_f64()
    }

    pub fn ext(&self, u: usize, r: usize) -> Ext {
        self.p[u][r]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().map(Ext::to_f64).sum()
    }

    /// Marginal law of `R_B`.
    pub fn marginal_r(&self) -> Result<PmfVector> {
        let mass = (0..=self.n_max()).map(|r| self.p.iter().map(|row| row[r]).sum()).collect();
        PmfVector::from_ext(mass)
    }
}

pub fn joint_sum_pmf(
    spec: &StructureSpec,
    b: &IndexSet,
    n_max: usize,
    u_max: usize,
    params: &TiltedParams,
) -> Result<JointPmf> {
    let process = process_for(spec, b, n_max, params)?;
    let mut p = vec![vec![Ext::ZERO; n_max + 1]; u_max + 1];
    p[0][0] = Ext::ONE;
    for &i in b.items() {
        let law = process.law(i);
        let mut kmax = (n_max / i).min(u_max) as u64;
        if let Some(top) = law.max_support() {
            kmax = kmax.min(top);
        }
        let f: Vec<Ext> = law.ln_pmf_table(kmax).into_iter().map(Ext::from_ln).collect();
        for u in (0..=u_max).rev() {
            for r in (0..=n_max).rev() {
                let mut s = Ext::ZERO;
                for (j, fj) in f.iter().enumerate() {
                    if j > u || i * j > r {
                        break;
                    }
                    s = s + *fj * p[u - j][r - i * j];
                }
                p[u][r] = s;
            }
        }
    }
    Ok(JointPmf { p })
}

/// `ln p_theta(k)` for `k = 0..=n`, read off the law of `T_n` at one `x`:
/// `ln p_theta(k) = ln P(T_n = k) - ln P(T_n = 0) - k ln x (+ ln k!)`.
#[derive(Debug, Clone)]
pub struct PTotalTable {
    ln_p: Vec<f64>,
}

impl PTotalTable {
    pub fn new(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<Self> {
        let process = Process::new(spec, n, params)?;
        let full = IndexSet::full(n);
        let odds = if spec.kind == Kind::Selection {
            odds_by_convolution(&process, &full, n)
        } else {
            odds_by_recursion(&process, &full, n)
        };
        let ln_x = params.x.ln();
        let ln_p = (0..=n)
            .map(|k| {
                let mut v = odds[k].ln() - k as f64 * ln_x;
                if spec.kind == Kind::Assembly {
                    v += ln_gamma(k as f64 + 1.0);
                }
                if k == 0 {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Ok(PTotalTable { ln_p })
    }

    /// Picks `x` by the exact-mean rule, falling back to a safe small value.
    pub fn auto(spec: &StructureSpec, n: usize, theta: f64) -> Result<Self> {
        let x = crate::indep_process::exact_mean_x(spec, n.max(1), theta, 1.0).unwrap_or_else(|_| {
            if spec.kind == Kind::Multiset {
                0.5 * (1.0f64).min(1.0 / theta)
            } else {
                1.0
            }
        });
        PTotalTable::new(spec, n, &TiltedParams::new(x, theta)?)
    }

    pub fn ln_p(&self, k: usize) -> f64 {
        self.ln_p[k]
    }

    pub fn n(&self) -> usize {
        self.ln_p.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat_int;
    use proptest::prelude::*;

    fn params(x: f64, theta: f64) -> TiltedParams {
        TiltedParams::new(x, theta).unwrap()
    }

    #[test]
    fn index_set_parsing() {
        assert_eq!(IndexSet::parse("1..3,7").unwrap().items(), &[1, 2, 3, 7]);
        assert!(IndexSet::parse("").unwrap().is_empty());
        assert!(IndexSet::parse("0").is_err());
        assert!(IndexSet::parse("4..2").is_err());
        assert_eq!(IndexSet::parse("2,4").unwrap().complement(5).items(), &[1, 3, 5]);
    }

    #[test]
    fn poisson_single_index() {
        let perm = StructureSpec::permutations();
        let pmf = weighted_sum_pmf(&perm, &IndexSet::new(vec![1]).unwrap(), 12, &params(1.0, 1.0)).unwrap();
        let mut fact = 1.0;
        for k in 0..=12 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((pmf.p(k) - (-1f64).exp() / fact).abs() < 1e-15);
        }
    }

    #[test]
    fn permutations_three() {
        let perm = StructureSpec::permutations();
        let pmf = weighted_sum_pmf(&perm, &IndexSet::full(3), 3, &params(1.0, 1.0)).unwrap();
        assert!((pmf.p(3) - (-11.0f64 / 6.0).exp()).abs() < 1e-15);
        let conv = weighted_sum_pmf_with(&perm, &IndexSet::full(3), 3, &params(1.0, 1.0), Method::Convolution)
            .unwrap();
        assert!((conv.p(3) - pmf.p(3)).abs() < 1e-15);
        let pt = prob_t_eq_n(&perm, 3, &params(1.0, 1.0)).unwrap();
        assert!(pt.rel_gap().unwrap() < 1e-13);
    }

    #[test]
    fn empty_set_is_point_mass() {
        for spec in StructureSpec::builtins() {
            let p = if spec.kind == Kind::Multiset { params(0.3, 1.0) } else { params(1.0, 1.0) };
            let pmf = weighted_sum_pmf(&spec, &IndexSet::empty(), 5, &p).unwrap();
            assert_eq!(pmf.p(0), 1.0);
            assert_eq!(pmf.tail(), 0.0);
        }
    }

    #[test]
    fn set_partitions_local_limit() {
        let sp = StructureSpec::set_partitions();
        let n = 50;
        let x = crate::indep_process::set_partition_x(n as f64);
        let pt = prob_t_eq_n(&sp, n, &params(x, 1.0)).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * n as f64 * (n as f64).ln()).sqrt();
        assert!((pt.recursion() / want - 1.0).abs() < 0.15, "{} vs {want}", pt.recursion());
        assert!(pt.rel_gap().unwrap() < 1e-9);
    }

    #[test]
    fn x_rescaling_changes_only_normalisation() {
        let sp = StructureSpec::set_partitions();
        let b = IndexSet::new(vec![2, 5]).unwrap();
        let a = conditioned_r_pmf(&sp, &b, 12, &params(1.0, 1.5)).unwrap();
        let c = conditioned_r_pmf(&sp, &b, 12, &params(3.0, 1.5)).unwrap();
        for k in 0..=12 {
            assert!((a.p(k) - c.p(k)).abs() < 1e-12);
        }
        let t1 = prob_t_eq_n(&sp, 12, &params(1.0, 1.0)).unwrap();
        let t3 = prob_t_eq_n(&sp, 12, &params(3.0, 1.0)).unwrap();
        let lam = |x: f64| (1..=12).map(|i| x.powi(i) / crate::numeric::ln_factorial(i as u64).exp()).sum::<f64>();
        let want = 12.0 * 3f64.ln() - lam(3.0) + lam(1.0);
        assert!((t3.ln_recursion - t1.ln_recursion - want).abs() < 1e-11);
    }

    #[test]
    fn conditioned_edge_cases() {
        let perm = StructureSpec::permutations();
        let p = params(1.0, 1.0);
        let full = conditioned_r_pmf(&perm, &IndexSet::full(6), 6, &p).unwrap();
        assert!((full.p(6) - 1.0).abs() < 1e-14);
        let none = conditioned_r_pmf(&perm, &IndexSet::empty(), 6, &p).unwrap();
        assert!((none.p(0) - 1.0).abs() < 1e-14);
        let two = StructureSpec::two_regular();
        assert!(matches!(
            conditioned_r_pmf(&two, &IndexSet::full(2), 2, &p),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn joint_examples() {
        let perm = StructureSpec::permutations();
        let p = params(1.0, 1.0);
        let j = joint_sum_pmf(&perm, &IndexSet::new(vec![1]).unwrap(), 6, 6, &p).unwrap();
        for u in 0..=6 {
            for r in 0..=6 {
                if u != r {
                    assert_eq!(j.get(u, r), 0.0);
                }
            }
        }
        let b = IndexSet::new(vec![1, 3, 4]).unwrap();
        let j = joint_sum_pmf(&perm, &b, 10, 10, &p).unwrap();
        let m = j.marginal_r().unwrap();
        let w = weighted_sum_pmf(&perm, &b, 10, &p).unwrap();
        for r in 0..=10 {
            assert!((m.p(r) - w.p(r)).abs() < 1e-12);
        }
        // cycle count of a uniform permutation of 4: Stirling numbers 6, 11, 6, 1 over 24
        let j = joint_sum_pmf(&perm, &IndexSet::full(4), 4, 4, &p).unwrap();
        let col: Vec<f64> = (0..=4).map(|u| j.get(u, 4)).collect();
        let t: f64 = col.iter().sum();
        let want = [0.0, 6.0 / 24.0, 11.0 / 24.0, 6.0 / 24.0, 1.0 / 24.0];
        for u in 0..=4 {
            assert!((col[u] / t - want[u]).abs() < 1e-12);
        }
    }

    #[test]
    fn p_total_table_matches_exact() {
        let one = rat_int(1);
        for spec in StructureSpec::builtins() {
            let table = PTotalTable::auto(&spec, 25, 1.0).unwrap();
            let exact = crate::structures::p_total_exact_table(&spec, 25, &one).unwrap();
            for k in 1..=25 {
                let e = ln_rational(&exact[k]);
                if e == f64::NEG_INFINITY {
                    assert!(table.ln_p(k) == f64::NEG_INFINITY || table.ln_p(k) < -600.0);
                } else {
                    assert!((table.ln_p(k) - e).abs() < 1e-11, "{} k={k}", spec.name);
                }
            }
        }
    }

    fn small_specs() -> Vec<StructureSpec> {
        vec![StructureSpec::set_partitions(), StructureSpec::integer_partitions(), StructureSpec::distinct_parts()]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn recursion_agrees_with_convolution(mask in proptest::collection::vec(any::<bool>(), 60), theta in 0.4f64..2.5) {
            let items: Vec<usize> = mask.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k + 1).collect();
            let b = IndexSet::new(items).unwrap();
            for spec in small_specs() {
                let x = match spec.kind {
                    Kind::Multiset => 0.9 / theta.max(1.0),
                    Kind::Assembly => 3.0,
                    // the signed series only converges for theta x < 1
                    Kind::Selection => 0.8 / theta.max(1.0),
                };
                let p = params(x, theta);
                let rec = weighted_sum_pmf_with(&spec, &b, 60, &p, Method::Recursion).unwrap();
                let conv = weighted_sum_pmf_with(&spec, &b, 60, &p, Method::Convolution).unwrap();
                for k in 0..=60 {
                    prop_assert!((rec.p(k) - conv.p(k)).abs() < 1e-10);
                }
                if spec.kind == Kind::Selection {
                    prop_assert!(selection_recursion_gap(&spec, &b, 60, &p).is_ok());
                }
            }
        }

        #[test]
        fn pmf_mass_is_consistent(n in 1usize..40, x in 0.1f64..0.95) {
            for spec in small_specs() {
                let pmf = weighted_sum_pmf(&spec, &IndexSet::full(n), n, &params(x, 1.0)).unwrap();
                let total: f64 = pmf.probs().iter().sum::<f64>() + pmf.tail();
                prop_assert!((total - 1.0).abs() < 1e-9);
                prop_assert!(pmf.tail() >= 0.0);
            }
        }
    }
}
