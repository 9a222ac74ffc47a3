//! Total-variation and Wasserstein distances, the exact `d_TV(C_B, Z_B)`
//! identity and the bounds built from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indep_process::TiltedParams;
use crate::limits::LimitLaw;
use crate::numeric::{ln_factorial, ln_gamma, CompensatedSum};
use crate::structures::StructureSpec;
use crate::sumdist::{split, weighted_sum_pmf, IndexSet, PmfVector, SplitLaws};

/// Distance bracket: the tails above `n_max` are unresolved, so the distance
/// lies between `lower` and `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvBracket {
    pub lower: f64,
    pub upper: f64,
}

pub fn tv_discrete(p: &PmfVector, q: &PmfVector) -> TvBracket {
    let top = p.n_max().max(q.n_max());
    let body: CompensatedSum = (0..=top).map(|k| (p.p(k) - q.p(k)).abs()).collect();
    let body = 0.5 * body.value();
    TvBracket {
        lower: (body + 0.5 * (p.tail() - q.tail()).abs()).min(1.0),
        upper: (body + 0.5 * (p.tail() + q.tail())).min(1.0),
    }
}

/// `sum_{i >= 1} |P(X >= i) - P(Y >= i)|`, with tail mass placed just above
/// the common support.
pub fn wasserstein_discrete(p: &PmfVector, q: &PmfVector) -> f64 {
    let top = p.n_max().max(q.n_max());
    let mut sp = p.tail();
    let mut sq = q.tail();
    let mut total = CompensatedSum::default();
    total.add((sp - sq).abs());
    for i in (1..=top).rev() {
        sp += p.p(i);
        sq += q.p(i);
        total.add((sp - sq).abs());
    }
    total.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvReport {
    /// `d_TV(C_B, Z_B)`.
    pub exact: f64,
    /// `P(R_B > n)`.
    pub lower: f64,
    /// Limit-law estimate; kept apart from the exact value.
    pub heuristic: Option<f64>,
    /// `P(R_B > n) / 2`.
    pub tail_term: f64,
    /// `sum_{r <= n} P(R_B = r) |P(S_B = n - r) / P(T_n = n) - 1| / 2`.
    pub body_term: f64,
}

fn report_from_split(laws: &SplitLaws, n: usize) -> TvReport {
    let mut body = CompensatedSum::default();
    for r in 0..=n {
        let pr = laws.r.ext(r);
        if pr.is_zero() {
            continue;
        }
        let ratio = laws.s.ext(n - r).ratio(&laws.t);
        body.add(pr.to_f64() * (ratio - 1.0).abs());
    }
    let tail = laws.r.tail();
    let tail_term = 0.5 * tail;
    let body_term = 0.5 * body.value();
    TvReport { exact: (tail_term + body_term).min(1.0), lower: tail, heuristic: None, tail_term, body_term }
}

/// `d_TV(C_B(n), Z_B)` by the exact identity, with `P(R_B > n)` as lower bound.
pub fn tv_cb_zb(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<TvReport> {
    let laws = split(spec, b, n, params)?;
    Ok(report_from_split(&laws, n))
}

/// Same, with the limit-law heuristic filled in when the spec is logarithmic.
pub fn tv_cb_zb_with_heuristic(
    spec: &StructureSpec,
    b: &IndexSet,
    n: usize,
    params: &TiltedParams,
) -> Result<TvReport> {
    let laws = split(spec, b, n, params)?;
    let mut report = report_from_split(&laws, n);
    if spec.meta.is_some() {
        let law = LimitLaw::for_spec(spec, n, params)?;
        report.heuristic = Some(heuristic_from_pmf(&laws.r, n, &law));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedBounds {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

/// Bounds on `d_TV(C*_B, Z*_B)` after conditioning on an event of
/// probability `p` (for `Z`) and `q` (for `C`) measurable on `A`.
pub fn tv_conditioned_bounds(p: f64, q: f64, d_a: f64, d_b: f64) -> Result<ConditionedBounds> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("conditioning probabilities must be positive: p = {p}, q = {q}")));
    }
    Ok(ConditionedBounds {
        b0: 0.5 * (1.0 - q / p).abs() + d_b / p,
        b1: (0.5 * d_a + d_b) / p,
        b2: 1.5 * d_b / p,
    })
}

fn heuristic_from_pmf(r: &PmfVector, n: usize, law: &LimitLaw) -> f64 {
    0.5 * law.log_derivative_at_one().abs() * r.mean_abs_dev() / n as f64
}

/// `|g'(1-)/g(1)| E|R_B - E R_B| / (2n)`.
pub fn tv_heuristic(
    spec: &StructureSpec,
    b: &IndexSet,
    n: usize,
    params: &TiltedParams,
    law: &LimitLaw,
) -> Result<f64> {
    if spec.meta.is_none() {
        return Err(Error::Domain(format!("{} has no logarithmic metadata", spec.name)));
    }
    b.check_within(n)?;
    let r = weighted_sum_pmf(spec, b, n, params)?;
    Ok(heuristic_from_pmf(&r, n, law))
}

/// `E h(Z) / P(T = t)`, an upper bound on `E h(C)` for nonnegative `h`.
pub fn overpower_bound(expectation_z: f64, prob_t: f64) -> Result<f64> {
    if !(prob_t > 0.0) {
        return Err(Error::Domain(format!("P(T = t) must be positive, got {prob_t}")));
    }
    if !(expectation_z >= 0.0) {
        return Err(Error::Domain(format!("E h(Z) must be nonnegative, got {expectation_z}")));
    }
    Ok(expectation_z / prob_t)
}

/// `F(x) = sqrt(2 pi m) 2^{m-1} / (m-1)! + 1/m! + 3 (x/e)^{-x}`, `m = floor(x)`,
/// bounding `d_b(n)` for permutations at `x = n / b`.
pub fn permutation_tv_bound(x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!("F(x) needs x >= 1, got {x}")));
    }
    let m = x.floor();
    let first = 0.5 * (2.0 * std::f64::consts::PI * m).ln() + (m - 1.0) * std::f64::consts::LN_2 - ln_gamma(m);
    let second = -ln_factorial(m as u64);
    let third = 3f64.ln() - x * (x.ln() - 1.0);
    Ok(first.exp() + second.exp() + third.exp())
}
