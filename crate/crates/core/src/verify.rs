//! Cross-checks of every engine against the enumeration oracle and against
//! its own alternative paths, at small `n`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::indep_process::{choose_x, choose_x_report, exact_mean_x, refined_y_law, z_law, Strategy, TiltedParams};
use crate::limits::{LimitLaw, EULER_GAMMA};
use crate::moments::{esf_moment, factorial_moment_assembly, factorial_moment_single, MomentSpec};
use crate::numeric::{divisors, integrate, rat_int, rational_to_f64};
use crate::oracle::{
    enumerate_complete, exact_joint_law, exact_functional_law, oracle_conditioned_case, oracle_refined_tv,
    oracle_tv_cb_zb, oracle_tv_rb, p_nk, restrict, ExactLaw,
};
use crate::sampler::{sample_components, sample_components_streams, RngState};
use crate::structures::{count_n, irreducible_count, p_total_exact, uniform_pmf, ComponentVector, Kind, StructureSpec};
use crate::sumdist::{
    conditioned_r_pmf, ln_p_total_independent, prob_t_eq_n, selection_recursion_gap, weighted_sum_pmf_with,
    IndexSet, Method, PTotalTable,
};
use crate::tv::{tv_cb_zb, tv_conditioned_bounds};

/// Outcome of one named cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Knobs for the suite.
#[derive(Debug, Clone, Copy)]
pub struct Config {
    /// Largest `n` for oracle comparisons (the oracle enumerates partitions).
    pub n_max: usize,
    /// Monte Carlo sample size for sampler checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config { n_max: 10, samples: 100_000, seed: 1 }
    }
}

type CheckFn = fn(&Config) -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 24] = [
    ("counts sum to p(n)", counts_sum_to_total),
    ("polynomial degree identity", polynomial_identity),
    ("uniform pmf sums to one", uniform_pmf_sums),
    ("p(n) independent of x", p_total_x_invariance),
    ("z law is a convolution of refined laws", convolution_identity),
    ("tilt consistency", tilt_consistency),
    ("exact-mean x is stable", exact_mean_stability),
    ("recursion vs convolution", recursion_vs_convolution),
    ("conditioned R_B independent of x", conditioned_x_invariance),
    ("P(T_n = n) two ways", prob_t_two_ways),
    ("selection signed recursion", selection_guard),
    ("TV identity vs oracle", tv_identity),
    ("functional contraction", functional_contraction),
    ("refined equality chain", refined_chain),
    ("conditioning bounds", conditioning_bounds),
    ("moments vs oracle", moments_vs_oracle),
    ("mean from moments vs conditioned law", mean_consistency),
    ("sampled means", sampled_means),
    ("limit law mass and transform", limit_law_checks),
    ("sampler chi-square", sampler_chi_square),
    ("sampler trial accounting", trial_accounting),
    ("sampler determinism", sampler_determinism),
    ("oracle total mass", oracle_mass),
    ("p(n,k) against p_theta(n)", oracle_pnk),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check; errors inside a check count as failures.
pub fn run_all(config: &Config) -> Vec<Check> {
    CHECKS
        .iter()
        .map(|&(name, f)| match f(config) {
            Ok((pass, detail)) => Check { name, pass, detail },
            Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
        })
        .collect()
}

fn params(x: f64, theta: f64) -> TiltedParams {
    TiltedParams { x, theta }
}

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

fn thetas() -> [BigRational; 3] {
    [half(), rat_int(1), rat_int(2)]
}

/// A valid `x` for the kind at this `theta`.
fn default_x(kind: Kind, theta: f64) -> f64 {
    match kind {
        Kind::Assembly => 0.8,
        Kind::Multiset => 0.45 / theta.max(1.0),
        Kind::Selection => 0.7,
    }
}

fn three_kinds() -> [StructureSpec; 3] {
    [StructureSpec::permutations(), StructureSpec::integer_partitions(), StructureSpec::distinct_parts()]
}

fn random_subset<R: Rng>(n: usize, rng: &mut R) -> IndexSet {
    IndexSet::new((1..=n).filter(|_| rng.random_bool(0.5)).collect()).unwrap()
}

fn subsets(n: usize) -> Vec<IndexSet> {
    (0u32..1 << n)
        .map(|mask| IndexSet::new((1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect()).unwrap())
        .collect()
}

fn worst_line(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("max gap {worst:.3e} (tol {tol:e})"))
}

fn counts_sum_to_total(c: &Config) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    for spec in StructureSpec::builtins() {
        for n in 1..=c.n_max {
            let total: BigRational = enumerate_complete(n)?.iter().map(|a| count_n(&spec, a)).sum::<Result<_>>()?;
            if total != p_total_exact(&spec, n, &rat_int(1))? {
                bad.push(format!("{} n={n}", spec.name));
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "exact".into() } else { bad.join(", ") }))
}

fn polynomial_identity(_: &Config) -> Result<(bool, String)> {
    for q in [2u64, 3] {
        for n in 1..=30u64 {
            let sum: BigUint = divisors(n).into_iter().map(|j| irreducible_count(q, j) * j).sum();
            if sum != BigUint::from(q).pow(n as u32) {
                return Ok((false, format!("q={q} n={n}")));
            }
        }
    }
    Ok((true, "sum_{j|n} j m_j = q^n for q in {2,3}, n <= 30".into()))
}

fn uniform_pmf_sums(c: &Config) -> Result<(bool, String)> {
    for spec in StructureSpec::builtins() {
        for theta in thetas() {
            for n in 1..=c.n_max {
                if p_total_exact(&spec, n, &theta)?.is_zero() {
                    continue;
                }
                let total: BigRational =
                    enumerate_complete(n)?.iter().map(|a| uniform_pmf(&spec, a, &theta)).sum::<Result<_>>()?;
                if !total.is_one() {
                    return Ok((false, format!("{} n={n} theta={theta}: {total}", spec.name)));
                }
            }
        }
    }
    Ok((true, "exact".into()))
}

fn p_total_x_invariance(_: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in StructureSpec::builtins() {
        for n in [10usize, 40] {
            let x1 = default_x(spec.kind, 1.0);
            let a = PTotalTable::new(&spec, n, &params(x1, 1.0))?.ln_p(n);
            let b = PTotalTable::new(&spec, n, &params(0.6 * x1, 1.0))?.ln_p(n);
            if a.is_finite() || b.is_finite() {
                worst = worst.max((a - b).abs());
            }
        }
    }
    // ln-scale difference of 1e-9 is a relative error of about 1e-9
    Ok(worst_line(worst, 1e-9))
}

fn pmf_table(law: &crate::indep_process::DiscreteLaw, kmax: u64) -> Vec<f64> {
    law.ln_pmf_table(kmax).into_iter().map(f64::exp).collect()
}

fn convolution_identity(_: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let specs = [
        StructureSpec::permutations(),
        StructureSpec::set_partitions(),
        StructureSpec::integer_partitions(),
        StructureSpec::polynomials(2)?,
        StructureSpec::distinct_parts(),
        StructureSpec::square_free(2)?,
    ];
    for spec in &specs {
        for i in 1..=8 {
            let m = spec.m_of(i)?;
            if !m.is_integer() || m > rat_int(5) || m.is_zero() {
                continue;
            }
            let m = rational_to_f64(&m) as usize;
            let p = params(default_x(spec.kind, 1.0), 1.0);
            let kmax = 40;
            let z = pmf_table(&z_law(spec, i, &p)?, kmax);
            let y = pmf_table(&refined_y_law(spec, i, &p)?, kmax);
            let mut conv = vec![0.0; kmax as usize + 1];
            conv[0] = 1.0;
            for _ in 0..m {
                let mut next = vec![0.0; conv.len()];
                for (k, &ck) in conv.iter().enumerate() {
                    for (j, &yj) in y.iter().enumerate().take(conv.len() - k) {
                        next[k + j] += ck * yj;
                    }
                }
                conv = next;
            }
            for (a, b) in z.iter().zip(&conv) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst_line(worst, 1e-12))
}

fn tilt_consistency(_: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in three_kinds() {
        for theta in [0.5, 2.0] {
            let x = default_x(spec.kind, theta);
            for i in 1..=6 {
                let base = pmf_table(&z_law(&spec, i, &params(x, 1.0))?, 3000);
                let tilted = pmf_table(&z_law(&spec, i, &params(x, theta))?, 30);
                let norm: f64 =
                    base.iter().enumerate().map(|(k, p)| p * theta.powi(k as i32)).filter(|v| v.is_finite()).sum();
                for (k, t) in tilted.iter().enumerate() {
                    worst = worst.max((t - theta.powi(k as i32) * base[k] / norm).abs());
                }
            }
        }
    }
    Ok(worst_line(worst, 1e-12))
}

fn exact_mean_stability(_: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for spec in StructureSpec::builtins() {
        for n in [10usize, 50] {
            let report = choose_x_report(&spec, n, 1.0, Strategy::ExactMean)?;
            residual = residual.max(report.residual / n as f64);
            for start in [0.25 * report.x, 4.0 * report.x] {
                let again = exact_mean_x(&spec, n, 1.0, start)?;
                worst = worst.max((again - report.x).abs() / report.x);
            }
        }
    }
    Ok((worst <= 1e-9 && residual <= 1e-9, format!("re-solve gap {worst:.2e}, max residual/n {residual:.2e}")))
}

fn recursion_vs_convolution(c: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut worst: f64 = 0.0;
    for spec in three_kinds() {
        for _ in 0..20 {
            let b = IndexSet::new((1..=60).filter(|_| rng.random_bool(0.2)).collect())?;
            let theta = if spec.kind == Kind::Selection { 1.0 } else { 1.5 };
            let p = params(default_x(spec.kind, theta), theta);
            let rec = weighted_sum_pmf_with(&spec, &b, 60, &p, Method::Recursion)?;
            let conv = weighted_sum_pmf_with(&spec, &b, 60, &p, Method::Convolution)?;
            for k in 0..=60 {
                worst = worst.max((rec.p(k) - conv.p(k)).abs());
            }
        }
    }
    Ok(worst_line(worst, 1e-10))
}

fn conditioned_x_invariance(c: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed + 1);
    let mut worst: f64 = 0.0;
    for spec in StructureSpec::builtins() {
        let n = 30;
        for _ in 0..5 {
            let b = random_subset(n, &mut rng);
            let x = default_x(spec.kind, 1.0);
            let r1 = match conditioned_r_pmf(&spec, &b, n, &params(x, 1.0)) {
                Err(Error::ZeroProbability(_)) => continue,
                other => other?,
            };
            let r2 = conditioned_r_pmf(&spec, &b, n, &params(0.7 * x, 1.0))?;
            for k in 0..=n {
                worst = worst.max((r1.p(k) - r2.p(k)).abs());
            }
        }
    }
    Ok(worst_line(worst, 1e-9))
}

fn prob_t_two_ways(_: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in StructureSpec::builtins() {
        for n in [10usize, 60, 200] {
            let x = choose_x(&spec, n, 1.0, Strategy::ExactMean)?;
            let pt = prob_t_eq_n(&spec, n, &params(x, 1.0))?;
            match pt.rel_gap() {
                Some(g) => worst = worst.max(g),
                None => return Ok((false, format!("{} n={n}: no closed form", spec.name))),
            }
        }
    }
    Ok(worst_line(worst, 1e-9))
}

fn selection_guard(c: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed + 2);
    let mut worst: f64 = 0.0;
    for spec in [StructureSpec::distinct_parts(), StructureSpec::distinct_odd_parts()] {
        for _ in 0..10 {
            let b = IndexSet::new((1..=40).filter(|_| rng.random_bool(0.3)).collect())?;
            worst = worst.max(selection_recursion_gap(&spec, &b, 40, &params(0.8, 1.0))?);
        }
    }
    // the guard must trip where the signed series cancels badly
    let tripped = selection_recursion_gap(&StructureSpec::distinct_parts(), &IndexSet::full(60), 60, &params(1.5, 3.0))
        .is_err();
    Ok((worst <= 1e-8 && tripped, format!("max gap {worst:.2e}; guard trips at theta x = 4.5: {tripped}")))
}

fn tv_identity(c: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed + 3);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for spec in three_kinds() {
        for theta in thetas() {
            let th = rational_to_f64(&theta);
            let p = params(default_x(spec.kind, th), th);
            let mut sets: Vec<(usize, IndexSet)> = Vec::new();
            for n in 1..=c.n_max.min(6) {
                sets.extend(subsets(n).into_iter().map(|b| (n, b)));
            }
            for n in 7..=c.n_max {
                sets.extend((0..50).map(|_| (n, random_subset(n, &mut rng))));
            }
            for (n, b) in sets {
                let engine = tv_cb_zb(&spec, &b, n, &p)?.exact;
                worst = worst.max((engine - oracle_tv_cb_zb(&spec, &b, n, &p)?).abs());
                cases += 1;
            }
        }
    }
    let (pass, line) = worst_line(worst, 1e-10);
    Ok((pass, format!("{line} over {cases} cases")))
}

fn tv_f64(p: &BTreeMap<usize, f64>, q: &BTreeMap<usize, f64>) -> f64 {
    let keys: std::collections::BTreeSet<_> = p.keys().chain(q.keys()).collect();
    0.5 * keys.into_iter().map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

fn functional_contraction(c: &Config) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed + 4);
    let mut ok = true;
    for _ in 0..500 {
        let size = rng.random_range(2..10);
        let mut draw = || {
            let w: Vec<f64> = (0..size).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).enumerate().collect::<BTreeMap<usize, f64>>()
        };
        let (p, q) = (draw(), draw());
        let h: Vec<usize> = (0..size).map(|_| rng.random_range(0..4)).collect();
        let push = |m: &BTreeMap<usize, f64>| {
            let mut out = BTreeMap::new();
            for (&k, &v) in m {
                *out.entry(h[k]).or_insert(0.0) += v;
            }
            out
        };
        ok &= tv_f64(&push(&p), &push(&q)) <= tv_f64(&p, &q) + 1e-15;
    }
    // and on exact laws: collapsing C_B to R_B cannot increase the distance
    let spec = StructureSpec::set_partitions();
    let law = exact_joint_law(&spec, 8, &rat_int(1))?;
    let b = IndexSet::new(vec![1, 2, 3])?;
    let cb = exact_functional_law(&law, |a| restrict(a, &b));
    let rb = exact_functional_law(&law, |a| a.a[0] + 2 * a.a[1] + 3 * a.a[2]);
    let uniform_b: BTreeMap<Vec<u64>, BigRational> = {
        let k = BigRational::from(BigInt::from(cb.len()));
        cb.keys().map(|v| (v.clone(), BigRational::one() / &k)).collect()
    };
    let uniform_r = {
        let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
        for (v, p) in &uniform_b {
            *out.entry(v[0] + 2 * v[1] + 3 * v[2]).or_insert_with(BigRational::zero) += p;
        }
        out
    };
    ok &= crate::oracle::exact_tv(&rb, &uniform_r) <= crate::oracle::exact_tv(&cb, &uniform_b);
    Ok((ok, "500 random maps and one exact pushforward".into()))
}

fn refined_chain(c: &Config) -> Result<(bool, String)> {
    let multiset = StructureSpec::explicit(Kind::Multiset, [2, 1, 1, 1, 1, 1].map(rat_int).to_vec())?;
    let assembly = StructureSpec::explicit(Kind::Assembly, [1, 2, 1, 1, 1, 1].map(rat_int).to_vec())?;
    let mut worst: f64 = 0.0;
    for (spec, p) in [(&multiset, params(0.5, 1.0)), (&assembly, params(1.0, 1.0))] {
        for n in 1..=c.n_max.min(6) {
            for b in subsets(n) {
                let d = oracle_refined_tv(spec, &b, n, &p)?;
                for other in [oracle_tv_cb_zb(spec, &b, n, &p)?, oracle_tv_rb(spec, &b, n, &p)?] {
                    worst = worst.max((d - other).abs());
                }
            }
        }
    }
    Ok(worst_line(worst, 1e-10))
}

fn conditioning_bounds(c: &Config) -> Result<(bool, String)> {
    let a = IndexSet::new(vec![1])?;
    let mut violations = Vec::new();
    for spec in StructureSpec::builtins() {
        let p = params(default_x(spec.kind, 1.0), 1.0);
        for n in 3..=c.n_max {
            for top in 1..=n.min(4) {
                let b = IndexSet::new((1..=top).collect())?;
                let case = match oracle_conditioned_case(&spec, &a, &b, n, &p) {
                    Err(Error::ZeroProbability(_)) => continue,
                    other => other?,
                };
                let bd = tv_conditioned_bounds(case.p, case.q, case.d_a, case.d_b)?;
                let eps = 1e-12;
                if !(case.d_star <= bd.b0 + eps && bd.b0 <= bd.b1 + eps && bd.b1 <= bd.b2 + eps) {
                    violations.push(format!("{} n={n} b={top}", spec.name));
                }
            }
        }
    }
    Ok((violations.is_empty(), if violations.is_empty() { "d* <= b0 <= b1 <= b2".into() } else { violations.join(", ") }))
}

fn falling(a: u64, r: u32) -> u64 {
    (0..r as u64).map(|t| a.saturating_sub(t)).product()
}

fn oracle_moment(law: &ExactLaw, r: &[(usize, u32)]) -> f64 {
    let mut acc = BigRational::zero();
    for (a, p) in &law.entries {
        let w: u64 = r.iter().map(|&(j, rj)| falling(a.a[j - 1], rj)).product();
        if w > 0 {
            acc += p * rat_int(w);
        }
    }
    rational_to_f64(&acc)
}

fn moments_vs_oracle(c: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in StructureSpec::builtins() {
        for theta in thetas() {
            let th = rational_to_f64(&theta);
            let p = params(default_x(spec.kind, th), th);
            for n in 1..=c.n_max {
                let law = match exact_joint_law(&spec, n, &theta) {
                    Err(Error::ZeroProbability(_)) => continue,
                    other => other?,
                };
                for j in 1..=n {
                    for r in 1..=3u32 {
                        let v = factorial_moment_single(&spec, n, j, r, &p)?;
                        let w = oracle_moment(&law, &[(j, r)]);
                        worst = worst.max((v - w).abs() / w.abs().max(1.0));
                    }
                }
                if spec.kind == Kind::Assembly && n >= 3 {
                    let r = MomentSpec::new([(1, 1), (2, 1)])?;
                    let v = factorial_moment_assembly(&spec, n, &r, &p)?;
                    let w = oracle_moment(&law, &[(1, 1), (2, 1)]);
                    worst = worst.max((v - w).abs() / w.abs().max(1.0));
                }
            }
        }
    }
    let perm = StructureSpec::permutations();
    for theta in thetas() {
        for n in 1..=c.n_max {
            let law = exact_joint_law(&perm, n, &theta)?;
            for j in 1..=n {
                let v = esf_moment(n, rational_to_f64(&theta), &MomentSpec::single(j, 2)?)?;
                worst = worst.max((v - oracle_moment(&law, &[(j, 2)])).abs());
            }
        }
    }
    Ok(worst_line(worst, 1e-10))
}

fn mean_consistency(c: &Config) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for spec in three_kinds() {
        let p = params(default_x(spec.kind, 1.0), 1.0);
        for n in 1..=c.n_max {
            for j in 1..=n {
                let law = conditioned_r_pmf(&spec, &IndexSet::new(vec![j])?, n, &p)?;
                let mean = law.mean() / j as f64;
                worst = worst.max((mean - factorial_moment_single(&spec, n, j, 1, &p)?).abs());
            }
        }
    }
    Ok(worst_line(worst, 1e-10))
}

fn sampled_means(c: &Config) -> Result<(bool, String)> {
    let n = c.n_max.max(1);
    let mut worst_z: f64 = 0.0;
    for (k, spec) in three_kinds().iter().enumerate() {
        let p = params(default_x(spec.kind, 1.0), 1.0);
        let batch = sample_components_streams(spec, n, &p, c.samples, c.seed + 10 + k as u64)?;
        for j in 1..=n.min(4) {
            let xs: Vec<f64> = batch.samples.iter().map(|a| a.a[j - 1] as f64).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
            let se = (var / xs.len() as f64).sqrt();
            let want = factorial_moment_single(spec, n, j, 1, &p)?;
            if se > 0.0 {
                worst_z = worst_z.max((m - want).abs() / se);
            } else if (m - want).abs() > 1e-12 {
                worst_z = f64::INFINITY;
            }
        }
    }
    Ok((worst_z <= 4.0, format!("max |z| {worst_z:.2} over E C_1..E C_{} at n = {n}", n.min(4))))
}

fn limit_law_checks(_: &Config) -> Result<(bool, String)> {
    let mut ok = true;
    let law = LimitLaw::new(1.0, 0.0)?;
    let mass = integrate(|z| law.density_closed_form(z).unwrap_or(f64::NAN), 0.0, 1.0, 1e-10)?.value;
    ok &= (mass - (-EULER_GAMMA).exp()).abs() < 1e-8;
    let mut worst_fe: f64 = 0.0;
    for kappa in [0.5, 1.0, 2.0] {
        for cc in [0.0, kappa - 1.0, 1.5] {
            let law = LimitLaw::new(kappa, cc)?;
            if kappa <= 1.0 {
                ok &= law.cdf(1.0)? <= 1.0;
            }
            for s in [0.0, 0.1, 1.0, 5.0] {
                worst_fe = worst_fe.max((law.laplace_psi(s)? * law.psi(cc)? - law.psi(cc + s)?).abs());
                let transform =
                    integrate(|z| (-s * z).exp() * law.density_closed_form(z).unwrap_or(f64::NAN), 1e-14, 1.0, 1e-9)?;
                ok &= transform.value <= law.laplace_psi(s)? + 1e-9;
            }
        }
    }
    Ok((ok && worst_fe <= 1e-8, format!("mass below 1 = {mass:.6}, functional equation gap {worst_fe:.2e}")))
}

fn chi_square_pvalue(observed: &[u64], expected: &[f64]) -> f64 {
    let mut cells = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            po += o as f64;
            pe += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pe > 0.0 {
        cells.push((po, pe));
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    ChiSquared::new((cells.len() - 1) as f64).map(|d| d.sf(stat)).unwrap_or(0.0)
}

fn sampler_chi_square(c: &Config) -> Result<(bool, String)> {
    let n = c.n_max.min(6);
    let mut lowest: f64 = 1.0;
    let mut stray = 0;
    for (k, spec) in three_kinds().iter().enumerate() {
        for theta in [1u64, 2] {
            let th = theta as f64;
            let p = params(default_x(spec.kind, th), th);
            let law = exact_joint_law(spec, n, &rat_int(theta))?;
            let batch = sample_components_streams(spec, n, &p, c.samples, c.seed + 20 + 2 * k as u64 + theta)?;
            let index: Vec<&ComponentVector> = law.entries.iter().map(|(a, _)| a).collect();
            let mut observed = vec![0u64; index.len()];
            for s in &batch.samples {
                match index.binary_search(&s) {
                    Ok(pos) => observed[pos] += 1,
                    Err(_) => stray += 1,
                }
            }
            let expected: Vec<f64> =
                law.entries.iter().map(|(_, q)| c.samples as f64 * rational_to_f64(q)).collect();
            lowest = lowest.min(chi_square_pvalue(&observed, &expected));
        }
    }
    Ok((lowest >= 1e-3 && stray == 0, format!("smallest p-value {lowest:.3} at n = {n}")))
}

fn trial_accounting(c: &Config) -> Result<(bool, String)> {
    let mut worst_z: f64 = 0.0;
    for (k, spec) in three_kinds().iter().enumerate() {
        let p = params(default_x(spec.kind, 1.0), 1.0);
        let batch = sample_components_streams(spec, 10, &p, c.samples / 4, c.seed + 40 + k as u64)?;
        let (t, pr) = (batch.trials as f64, batch.prob_t);
        let z = (batch.accepted as f64 - t * pr) / (t * pr * (1.0 - pr)).sqrt();
        worst_z = worst_z.max(z.abs());
    }
    Ok((worst_z <= 4.0, format!("max |z| {worst_z:.2}")))
}

fn sampler_determinism(c: &Config) -> Result<(bool, String)> {
    let spec = StructureSpec::set_partitions();
    let p = params(1.0, 1.0);
    let state = RngState::new(c.seed, 3);
    let a = sample_components(&spec, 9, &p, 500, &mut state.rng())?;
    let b = sample_components(&spec, 9, &p, 500, &mut state.rng())?;
    let s1 = sample_components_streams(&spec, 9, &p, 9000, c.seed)?;
    let s2 = sample_components_streams(&spec, 9, &p, 9000, c.seed)?;
    let same = a.samples == b.samples && a.trials == b.trials && s1.samples == s2.samples && s1.trials == s2.trials;
    Ok((same, "identical seeds give identical batches".into()))
}

fn oracle_mass(c: &Config) -> Result<(bool, String)> {
    for spec in StructureSpec::builtins() {
        for theta in thetas() {
            for n in 1..=c.n_max {
                match exact_joint_law(&spec, n, &theta) {
                    Ok(law) if !law.total().is_one() => return Ok((false, format!("{} n={n}", spec.name))),
                    Err(Error::ZeroProbability(_)) | Ok(_) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((true, "exactly one".into()))
}

fn oracle_pnk(c: &Config) -> Result<(bool, String)> {
    let n_top = c.n_max.max(1);
    for spec in StructureSpec::builtins() {
        for theta in thetas() {
            for n in 1..=n_top {
                let counts = p_nk(&spec, n)?;
                let mut pow = BigRational::one();
                let mut sum = BigRational::zero();
                for v in &counts {
                    sum += v * &pow;
                    pow *= &theta;
                }
                if sum != p_total_exact(&spec, n, &theta)? {
                    return Ok((false, format!("{} n={n} theta={theta}", spec.name)));
                }
            }
        }
    }
    // and the float closed-form path agrees with the rational one
    let float = ln_p_total_independent(&StructureSpec::mappings(), n_top, 1.0)?.unwrap_or(f64::NAN);
    let exact = (n_top as f64).ln() * n_top as f64;
    Ok(((float - exact).abs() < 1e-12, format!("exact for n <= {n_top}")))
}
