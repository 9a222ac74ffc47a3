//! The independent processes `Z_i` and `Y_ij` under the tilted measure.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::{bisect_increasing, ln_add_exp, ln_gamma};
use crate::structures::{Family, Kind, StructureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedParams {
    pub x: f64,
    pub theta: f64,
}

impl TiltedParams {
    pub fn new(x: f64, theta: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Parameter(format!("x must be positive and finite, got {x}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Parameter(format!("theta must be positive and finite, got {theta}")));
        }
        Ok(TiltedParams { x, theta })
    }

    pub fn validate(&self, kind: Kind) -> Result<()> {
        TiltedParams::new(self.x, self.theta)?;
        if kind == Kind::Multiset && !(self.x < 1.0 && self.theta * self.x < 1.0) {
            return Err(Error::Parameter(format!(
                "multiset needs x < 1 and theta * x < 1, got x = {}, theta = {}",
                self.x, self.theta
            )));
        }
        Ok(())
    }
}

/// `ln(-ln(1 - p))` from `ln p`, for `0 < p < 1`.
fn ln_neg_ln1m(ln_p: f64) -> f64 {
    if ln_p < -30.0 {
        ln_p + 0.5 * ln_p.exp()
    } else {
        (-(-ln_p.exp()).ln_1p()).ln()
    }
}

/// `ln(ln(1 + t))` from `ln t`.
fn ln_ln1p(ln_t: f64) -> f64 {
    if ln_t < -30.0 {
        ln_t - 0.5 * ln_t.exp()
    } else if ln_t > 30.0 {
        (ln_t + (-ln_t).exp().ln_1p()).ln()
    } else {
        ln_t.exp().ln_1p().ln()
    }
}

/// `ln(m + j)` given `ln m` (and `m` itself when it fits in a float).
fn ln_shift(m: f64, ln_m: f64, j: f64) -> f64 {
    if m.is_finite() && m < 1e15 {
        (m + j).ln()
    } else {
        ln_m + (j * (-ln_m).exp()).ln_1p()
    }
}

/// Distribution of a single `Z_i` or `Y_ij`, parameterised in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscreteLaw {
    /// Mean `lambda`.
    Poisson { ln_lambda: f64 },
    /// `P(k) = C(m+k-1, k) (1-p)^m p^k`.
    NegativeBinomial { m: f64, ln_m: f64, ln_p: f64 },
    /// `m` trials with success probability `t / (1 + t)`.
    Binomial { m: f64, ln_m: f64, ln_t: f64 },
    /// `P(k) = (1-p) p^k`.
    Geometric { ln_p: f64 },
    /// Success probability `t / (1 + t)`.
    Bernoulli { ln_t: f64 },
}

impl DiscreteLaw {
    fn as_general(&self) -> DiscreteLaw {
        match *self {
            DiscreteLaw::Geometric { ln_p } => DiscreteLaw::NegativeBinomial { m: 1.0, ln_m: 0.0, ln_p },
            DiscreteLaw::Bernoulli { ln_t } => DiscreteLaw::Binomial { m: 1.0, ln_m: 0.0, ln_t },
            other => other,
        }
    }

    fn degenerate(&self) -> bool {
        match self.as_general() {
            DiscreteLaw::Poisson { ln_lambda } => ln_lambda == f64::NEG_INFINITY,
            DiscreteLaw::NegativeBinomial { ln_m, ln_p, .. } => {
                ln_m == f64::NEG_INFINITY || ln_p == f64::NEG_INFINITY
            }
            DiscreteLaw::Binomial { ln_m, ln_t, .. } => ln_m == f64::NEG_INFINITY || ln_t == f64::NEG_INFINITY,
            _ => unreachable!(),
        }
    }

    /// `ln P(Z = 0)`.
    pub fn ln_p0(&self) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        match self.as_general() {
            DiscreteLaw::Poisson { ln_lambda } => -ln_lambda.exp(),
            DiscreteLaw::NegativeBinomial { ln_m, ln_p, .. } => -(ln_m + ln_neg_ln1m(ln_p)).exp(),
            DiscreteLaw::Binomial { ln_m, ln_t, .. } => -(ln_m + ln_ln1p(ln_t)).exp(),
            _ => unreachable!(),
        }
    }

    /// `ln P(Z = k) - ln P(Z = k - 1)` for `k >= 1`.
    fn ln_step(&self, k: u64) -> f64 {
        let kf = k as f64;
        match self.as_general() {
            DiscreteLaw::Poisson { ln_lambda } => ln_lambda - kf.ln(),
            DiscreteLaw::NegativeBinomial { m, ln_m, ln_p } => ln_shift(m, ln_m, kf - 1.0) - kf.ln() + ln_p,
            DiscreteLaw::Binomial { m, ln_m, ln_t } => {
                if m.is_finite() && m < 1e15 && kf > m.round() {
                    f64::NEG_INFINITY
                } else {
                    ln_shift(m, ln_m, 1.0 - kf) - kf.ln() + ln_t
                }
            }
            _ => unreachable!(),
        }
    }

    /// `ln P(Z = k)` for `k = 0..=kmax`.
    pub fn ln_pmf_table(&self, kmax: u64) -> Vec<f64> {
        let ln_p0 = self.ln_p0();
        self.ln_odds_table(kmax).into_iter().map(|v| v + ln_p0).collect()
    }

    /// `ln P(Z = k) - ln P(Z = 0)` for `k = 0..=kmax`, without ever forming
    /// `P(Z = 0)`.
    pub fn ln_odds_table(&self, kmax: u64) -> Vec<f64> {
        let mut t = Vec::with_capacity(kmax as usize + 1);
        let mut cur = 0.0;
        t.push(cur);
        let degenerate = self.degenerate();
        for k in 1..=kmax {
            if degenerate || cur == f64::NEG_INFINITY {
                cur = f64::NEG_INFINITY;
            } else {
                cur += self.ln_step(k);
            }
            t.push(cur);
        }
        t
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        *self.ln_pmf_table(k).last().unwrap()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// Largest value with positive probability, if finite.
    pub fn max_support(&self) -> Option<u64> {
        if self.degenerate() {
            return Some(0);
        }
        match self.as_general() {
            DiscreteLaw::Binomial { m, .. } if m.is_finite() && m < 1e15 => Some(m.round() as u64),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        match self.as_general() {
            DiscreteLaw::Poisson { ln_lambda } => ln_lambda.exp(),
            DiscreteLaw::NegativeBinomial { ln_m, ln_p, .. } => {
                (ln_m + ln_p - (-ln_p.exp()).ln_1p()).exp()
            }
            DiscreteLaw::Binomial { ln_m, ln_t, .. } => (ln_m + ln_t - ln_add_exp(0.0, ln_t)).exp(),
            _ => unreachable!(),
        }
    }

    pub fn variance(&self) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        match self.as_general() {
            DiscreteLaw::Poisson { ln_lambda } => ln_lambda.exp(),
            DiscreteLaw::NegativeBinomial { ln_m, ln_p, .. } => {
                (ln_m + ln_p - 2.0 * (-ln_p.exp()).ln_1p()).exp()
            }
            DiscreteLaw::Binomial { ln_m, ln_t, .. } => (ln_m + ln_t - 2.0 * ln_add_exp(0.0, ln_t)).exp(),
            _ => unreachable!(),
        }
    }

    /// Family name and natural-scale parameters, for display.
    pub fn describe(&self) -> (&'static str, Vec<(&'static str, f64)>) {
        match *self {
            DiscreteLaw::Poisson { ln_lambda } => ("poisson", vec![("lambda", ln_lambda.exp())]),
            DiscreteLaw::NegativeBinomial { m, ln_p, .. } => ("negative_binomial", vec![("m", m), ("p", ln_p.exp())]),
            DiscreteLaw::Binomial { m, ln_t, .. } => {
                ("binomial", vec![("m", m), ("p", (ln_t - ln_add_exp(0.0, ln_t)).exp())])
            }
            DiscreteLaw::Geometric { ln_p } => ("geometric", vec![("p", ln_p.exp())]),
            DiscreteLaw::Bernoulli { ln_t } => ("bernoulli", vec![("p", (ln_t - ln_add_exp(0.0, ln_t)).exp())]),
        }
    }
}

fn law_from_ln_m(kind: Kind, i: usize, ln_m: f64, params: &TiltedParams) -> DiscreteLaw {
    let ln_tilt = params.theta.ln() + i as f64 * params.x.ln();
    let m = ln_m.exp();
    match kind {
        Kind::Assembly => DiscreteLaw::Poisson { ln_lambda: ln_m + ln_tilt - ln_gamma(i as f64 + 1.0) },
        Kind::Multiset => DiscreteLaw::NegativeBinomial { m, ln_m, ln_p: ln_tilt },
        Kind::Selection => DiscreteLaw::Binomial { m, ln_m, ln_t: ln_tilt },
    }
}

/// Law of `Z_i`.
pub fn z_law(spec: &StructureSpec, i: usize, params: &TiltedParams) -> Result<DiscreteLaw> {
    if i < 1 {
        return Err(Error::Domain("index must be >= 1".into()));
    }
    params.validate(spec.kind)?;
    Ok(law_from_ln_m(spec.kind, i, spec.ln_m(i), params))
}

/// Law of a single refined coordinate `Y_ij`.
pub fn refined_y_law(spec: &StructureSpec, i: usize, params: &TiltedParams) -> Result<DiscreteLaw> {
    if i < 1 {
        return Err(Error::Domain("index must be >= 1".into()));
    }
    params.validate(spec.kind)?;
    let ln_tilt = params.theta.ln() + i as f64 * params.x.ln();
    Ok(match spec.kind {
        Kind::Assembly => DiscreteLaw::Poisson { ln_lambda: ln_tilt - ln_gamma(i as f64 + 1.0) },
        Kind::Multiset => DiscreteLaw::Geometric { ln_p: ln_tilt },
        Kind::Selection => DiscreteLaw::Bernoulli { ln_t: ln_tilt },
    })
}

/// The laws of `Z_1..Z_n` for one spec and parameter choice.
#[derive(Debug, Clone)]
pub struct Process {
    pub kind: Kind,
    pub n: usize,
    pub params: TiltedParams,
    ln_m: Vec<f64>,
    laws: Vec<DiscreteLaw>,
}

impl Process {
    pub fn new(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<Self> {
        params.validate(spec.kind)?;
        let ln_m = spec.ln_m_table(n);
        Ok(Self::from_ln_m(spec.kind, ln_m, params))
    }

    fn from_ln_m(kind: Kind, ln_m: Vec<f64>, params: &TiltedParams) -> Self {
        let n = ln_m.len() - 1;
        let laws = (1..=n).map(|i| law_from_ln_m(kind, i, ln_m[i], params)).collect();
        Process { kind, n, params: *params, ln_m, laws }
    }

    pub fn law(&self, i: usize) -> &DiscreteLaw {
        &self.laws[i - 1]
    }

    pub fn ln_m(&self, i: usize) -> f64 {
        self.ln_m[i]
    }

    pub fn moments(&self) -> SumMoments {
        let mut mean = 0.0;
        let mut variance = 0.0;
        for (k, law) in self.laws.iter().enumerate() {
            let i = (k + 1) as f64;
            mean += i * law.mean();
            variance += i * i * law.variance();
        }
        SumMoments { mean, variance }
    }
}

/// `E T_n` and `Var T_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn sum_moments(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<SumMoments> {
    Ok(Process::new(spec, n, params)?.moments())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    ExactMean,
    Logarithmic,
    LogarithmicTilted,
    SetPartition,
    IntegerPartition,
    DistinctPartition,
    DistinctOddPartition,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::ExactMean,
        Strategy::Logarithmic,
        Strategy::LogarithmicTilted,
        Strategy::SetPartition,
        Strategy::IntegerPartition,
        Strategy::DistinctPartition,
        Strategy::DistinctOddPartition,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ExactMean => "exact-mean",
            Strategy::Logarithmic => "logarithmic",
            Strategy::LogarithmicTilted => "logarithmic-tilted",
            Strategy::SetPartition => "set-partition",
            Strategy::IntegerPartition => "integer-partition",
            Strategy::DistinctPartition => "distinct-partition",
            Strategy::DistinctOddPartition => "distinct-odd-partition",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown strategy {s:?}")))
    }
}

/// Solves `x e^x = t` for `t > 0`.
pub fn set_partition_x(t: f64) -> f64 {
    let f = |x: f64| x * x.exp() - t;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect_increasing(f, 0.0, hi, 1e-15, 200)
}

fn mean_at(kind: Kind, ln_m: &[f64], x: f64, theta: f64) -> f64 {
    let params = TiltedParams { x, theta };
    let mut mean = 0.0;
    for i in 1..ln_m.len() {
        mean += i as f64 * law_from_ln_m(kind, i, ln_m[i], &params).mean();
    }
    mean
}

/// Chosen `x` together with the residual `|E T_n - n|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChosenX {
    pub x: f64,
    pub mean: f64,
    pub residual: f64,
}

fn require_family(spec: &StructureSpec, strategy: Strategy, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("strategy {strategy} does not apply to {}", spec.name)))
    }
}

/// Solves `E_theta T_n = n` for `x` by bisection.  `start` lets a caller
/// begin the doubling bracket somewhere other than `x = 1`.
pub fn exact_mean_x(spec: &StructureSpec, n: usize, theta: f64, start: f64) -> Result<f64> {
    let ln_m = spec.ln_m_table(n);
    let target = n as f64;
    let f = |x: f64| mean_at(spec.kind, &ln_m, x, theta) - target;
    let (lo, hi) = if spec.kind == Kind::Multiset {
        let cap = (1.0f64).min(1.0 / theta) * (1.0 - 1e-12);
        let top = f(cap);
        if top < 0.0 {
            return Err(Error::Domain(format!(
                "E T_n cannot reach n = {n}: supremum {:.6e} approached as x -> {cap}",
                top + target
            )));
        }
        let hi = start.min(cap);
        if f(hi) < 0.0 {
            (hi, cap)
        } else {
            (0.0, hi)
        }
    } else {
        let mut hi = start;
        let mut lo = 0.0;
        let mut steps = 0;
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 1000 || !hi.is_finite() {
                return Err(Error::Domain(format!("E T_n cannot reach n = {n}: no bracket found")));
            }
        }
        (lo, hi)
    };
    Ok(bisect_increasing(f, lo, hi, 1e-12, 200))
}

/// The free parameter `x` under one of the supported strategies.
pub fn choose_x(spec: &StructureSpec, n: usize, theta: f64, strategy: Strategy) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::Parameter(format!("theta must be positive, got {theta}")));
    }
    let nf = n as f64;
    match strategy {
        Strategy::ExactMean => exact_mean_x(spec, n, theta, 1.0),
        Strategy::Logarithmic | Strategy::LogarithmicTilted => {
            let meta = spec
                .meta
                .ok_or_else(|| Error::Domain(format!("strategy {strategy} needs logarithmic metadata")))?;
            let base = 1.0 / meta.y;
            if strategy == Strategy::Logarithmic {
                Ok(base)
            } else {
                let c = meta.kappa * theta - 1.0;
                Ok((-c / nf).exp() * base)
            }
        }
        Strategy::SetPartition => {
            require_family(spec, strategy, spec.family == Family::SetPartitions)?;
            Ok(set_partition_x(nf))
        }
        Strategy::IntegerPartition => {
            require_family(spec, strategy, spec.family == Family::IntegerPartitions)?;
            Ok((-std::f64::consts::PI / (6.0 * nf).sqrt()).exp())
        }
        Strategy::DistinctPartition => {
            require_family(spec, strategy, spec.family == Family::DistinctParts)?;
            Ok((-std::f64::consts::PI / (12.0 * nf).sqrt()).exp())
        }
        Strategy::DistinctOddPartition => {
            require_family(spec, strategy, spec.family == Family::DistinctOddParts)?;
            Ok((-std::f64::consts::PI / (24.0 * nf).sqrt()).exp())
        }
    }
}

/// [`choose_x`] plus the achieved `E T_n` and residual.
pub fn choose_x_report(spec: &StructureSpec, n: usize, theta: f64, strategy: Strategy) -> Result<ChosenX> {
    let x = choose_x(spec, n, theta, strategy)?;
    let ln_m = spec.ln_m_table(n);
    let mean = mean_at(spec.kind, &ln_m, x, theta);
    Ok(ChosenX { x, mean, residual: (mean - n as f64).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use proptest::prelude::*;

    fn params(x: f64, theta: f64) -> TiltedParams {
        TiltedParams::new(x, theta).unwrap()
    }

    fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len()];
        for (i, &pa) in a.iter().enumerate() {
            for (j, &pb) in b.iter().enumerate() {
                if i + j < out.len() {
                    out[i + j] += pa * pb;
                }
            }
        }
        out
    }

    fn pmf_vec(law: &DiscreteLaw, kmax: u64) -> Vec<f64> {
        law.ln_pmf_table(kmax).into_iter().map(f64::exp).collect()
    }

    #[test]
    fn z_law_examples() {
        let perm = StructureSpec::permutations();
        let law = z_law(&perm, 5, &params(1.0, 1.0)).unwrap();
        assert!((law.mean() - 0.2).abs() < 1e-15);
        assert!((law.pmf(0) - (-0.2f64).exp()).abs() < 1e-15);

        let ip = StructureSpec::integer_partitions();
        let law = z_law(&ip, 1, &params(0.5, 1.0)).unwrap();
        for k in 0..10u64 {
            assert!((law.pmf(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }

        let doubled = z_law(&perm, 3, &params(0.7, 2.0)).unwrap();
        let single = z_law(&perm, 3, &params(0.7, 1.0)).unwrap();
        assert!((doubled.mean() - 2.0 * single.mean()).abs() < 1e-15);

        assert!(matches!(z_law(&ip, 1, &params(0.6, 2.0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn refined_examples() {
        let asm = StructureSpec::set_partitions();
        let law = refined_y_law(&asm, 2, &params(1.0, 1.0)).unwrap();
        assert!((law.mean() - 0.5).abs() < 1e-15);
        let sel = StructureSpec::distinct_parts();
        let law = refined_y_law(&sel, 1, &params(1.0, 1.0)).unwrap();
        assert!((law.pmf(1) - 0.5).abs() < 1e-15);
        assert_eq!(law.pmf(2), 0.0);
        let ms = StructureSpec::integer_partitions();
        let law = refined_y_law(&ms, 3, &params(0.5, 1.0)).unwrap();
        assert!((law.pmf(1) - (7.0 / 8.0) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn convolution_of_refined_reproduces_z() {
        use crate::numeric::rat_int;
        for kind in [Kind::Assembly, Kind::Multiset, Kind::Selection] {
            let m: Vec<_> = (1..=8).map(|i| rat_int((i % 5 + 1) as i64)).collect();
            let spec = StructureSpec::explicit(kind, m).unwrap();
            let p = params(0.6, 1.3);
            for i in 1..=8usize {
                let z = pmf_vec(&z_law(&spec, i, &p).unwrap(), 12);
                let y = pmf_vec(&refined_y_law(&spec, i, &p).unwrap(), 12);
                let mut conv = vec![0.0; 13];
                conv[0] = 1.0;
                for _ in 0..(i % 5 + 1) {
                    conv = convolve(&conv, &y);
                }
                for k in 0..13 {
                    assert!((conv[k] - z[k]).abs() < 1e-12, "{kind} i={i} k={k}");
                }
            }
        }
    }

    #[test]
    fn moments_examples() {
        let perm = StructureSpec::permutations();
        for n in [1usize, 5, 40] {
            let mo = sum_moments(&perm, n, &params(1.0, 1.0)).unwrap();
            let nf = n as f64;
            assert!((mo.mean - nf).abs() < 1e-12 * nf);
            assert!((mo.variance - nf * (nf + 1.0) / 2.0).abs() < 1e-10 * nf * nf);
        }
        let ip = StructureSpec::integer_partitions();
        let n = 10_000usize;
        let x = choose_x(&ip, n, 1.0, Strategy::IntegerPartition).unwrap();
        let mo = sum_moments(&ip, n, &params(x, 1.0)).unwrap();
        let ratio = mo.variance / (n as f64).powf(1.5) / (2.0 * 6f64.sqrt() / std::f64::consts::PI);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
        let mo = sum_moments(&ip, 50, &params(1e-9, 1.0)).unwrap();
        assert!(mo.mean < 1e-8);
    }

    #[test]
    fn choose_x_examples() {
        assert!((set_partition_x(std::f64::consts::E) - 1.0).abs() < 1e-14);
        let ip = StructureSpec::integer_partitions();
        let x = choose_x(&ip, 100, 1.0, Strategy::IntegerPartition).unwrap();
        assert_eq!(x, (-std::f64::consts::PI / 600f64.sqrt()).exp());
        let poly = StructureSpec::polynomials(2).unwrap();
        assert_eq!(choose_x(&poly, 10, 1.0, Strategy::Logarithmic).unwrap(), 0.5);
        assert!(choose_x(&poly, 10, 1.0, Strategy::SetPartition).is_err());
        assert!(choose_x(&StructureSpec::set_partitions(), 10, 1.0, Strategy::Logarithmic).is_err());
    }

    #[test]
    fn exact_mean_solves_and_is_start_independent() {
        for spec in StructureSpec::builtins() {
            for theta in [0.5, 1.0, 2.0] {
                let n = 60;
                let rep = choose_x_report(&spec, n, theta, Strategy::ExactMean).unwrap();
                assert!(rep.residual <= 1e-9 * n as f64, "{} theta={theta}: {rep:?}", spec.name);
                let x2 = exact_mean_x(&spec, n, theta, 0.01).unwrap();
                assert!((x2 - rep.x).abs() <= 1e-9 * rep.x, "{}", spec.name);
            }
        }
    }

    #[test]
    fn exact_mean_reports_unreachable_target() {
        use crate::numeric::rat_int;
        let spec = StructureSpec::explicit(Kind::Selection, vec![rat_int(1), rat_int(1)]).unwrap();
        assert!(choose_x(&spec, 10, 1.0, Strategy::ExactMean).is_err());
    }

    proptest! {
        #[test]
        fn tilt_consistency(i in 1usize..8, x in 0.05f64..0.45, theta in 0.2f64..2.0) {
            for spec in [StructureSpec::set_partitions(), StructureSpec::integer_partitions(), StructureSpec::distinct_parts()] {
                let base = pmf_vec(&z_law(&spec, i, &params(x, 1.0)).unwrap(), 2000);
                let tilted = pmf_vec(&z_law(&spec, i, &params(x, theta)).unwrap(), 30);
                let norm: f64 = base.iter().enumerate().map(|(k, p)| p * theta.powi(k as i32)).filter(|v| v.is_finite()).sum();
                for k in 0..30 {
                    let want = theta.powi(k as i32) * base[k] / norm;
                    prop_assert!((tilted[k] - want).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn pmfs_sum_to_one(i in 1usize..6, x in 0.05f64..0.9) {
            for spec in [StructureSpec::mappings(), StructureSpec::polynomials(3).unwrap(), StructureSpec::square_free(2).unwrap()] {
                let x = if spec.kind == Kind::Multiset { x / 3.0 } else { x };
                let law = z_law(&spec, i, &params(x, 1.0)).unwrap();
                let total: f64 = pmf_vec(&law, 400).iter().sum();
                prop_assert!(total <= 1.0 + 1e-12);
                prop_assert!(total > 1.0 - 1e-9);
            }
        }
    }
}
