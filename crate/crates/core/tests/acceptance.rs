//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use combstruct::indep_process::{choose_x, z_law, Strategy};
use combstruct::limits::{LimitLaw, EULER_GAMMA};
use combstruct::moments::{esf_moment, factorial_moment_assembly, factorial_moment_single, MomentSpec};
use combstruct::numeric::{rat_int, rational_to_f64};
use combstruct::oracle::{
    enumerate_complete, exact_joint_law, oracle_conditioned_case, oracle_refined_tv, oracle_tv_cb_zb, oracle_tv_rb,
    ExactLaw,
};
use combstruct::sampler::sample_components_streams;
use combstruct::structures::p_total_exact;
use combstruct::sumdist::{prob_t_eq_n, weighted_sum_pmf};
use combstruct::tv::{permutation_tv_bound, tv_cb_zb, tv_conditioned_bounds, tv_heuristic};
use combstruct::{ComponentVector, Error, IndexSet, Kind, StructureSpec, TiltedParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn params(x: f64, theta: f64) -> TiltedParams {
    TiltedParams::new(x, theta).unwrap()
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn subsets(n: usize) -> Vec<IndexSet> {
    (0u32..1 << n)
        .map(|mask| IndexSet::new((1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect()).unwrap())
        .collect()
}

fn random_subset<R: Rng>(n: usize, rng: &mut R) -> IndexSet {
    IndexSet::new((1..=n).filter(|_| rng.random_bool(0.5)).collect()).unwrap()
}

/// Per-kind parameter pairs `(x, theta)` valid for the kind.
fn param_grid(kind: Kind) -> [(f64, f64); 2] {
    match kind {
        Kind::Assembly => [(1.0, 1.0), (0.7, 2.0)],
        Kind::Multiset => [(0.5, 1.0), (0.3, 2.0)],
        Kind::Selection => [(0.8, 1.0), (1.2, 0.5)],
    }
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

fn conditioning_identity() -> Outcome {
    let specs = [StructureSpec::permutations(), StructureSpec::integer_partitions(), StructureSpec::distinct_parts()];
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let x = match spec.kind {
            Kind::Assembly => 1.0,
            Kind::Multiset => 0.4,
            Kind::Selection => 0.7,
        };
        for theta in [rat(1, 2), rat(1, 1), rat(2, 1)] {
            let p = params(x, rational_to_f64(&theta));
            for n in 1..=10 {
                let law = exact_joint_law(spec, n, &theta).unwrap();
                let pt = prob_t_eq_n(spec, n, &p).unwrap().recursion();
                let laws: Vec<_> = (1..=n).map(|i| z_law(spec, i, &p).unwrap()).collect();
                for a in enumerate_complete(n).unwrap() {
                    let ln: f64 = a.a.iter().enumerate().map(|(k, &c)| laws[k].ln_pmf(c)).sum();
                    let cond = ln.exp() / pt;
                    worst = worst.max((cond - rational_to_f64(&law.prob(&a))).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max abs gap {worst:.3e}"))
}

fn prob_t_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut missing = Vec::new();
    for spec in StructureSpec::builtins() {
        for n in [50, 200] {
            let x1 = choose_x(&spec, n, 1.0, Strategy::ExactMean).unwrap();
            for x in [x1, 0.8 * x1] {
                match prob_t_eq_n(&spec, n, &params(x, 1.0)).unwrap().rel_gap() {
                    Some(g) => worst = worst.max(g),
                    None => missing.push(format!("{}@{n}", spec.name)),
                }
            }
        }
    }
    outcome(
        worst <= 1e-9 && missing.is_empty(),
        format!("max rel gap {worst:.3e} over 10 builtins x 2 n x 2 x; no closed form: {missing:?}"),
    )
}

fn tv_matches_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut mismatched_errors = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for spec in StructureSpec::builtins() {
        for (x, theta) in param_grid(spec.kind) {
            let p = params(x, theta);
            let mut check = |b: &IndexSet, n: usize| {
                match (tv_cb_zb(&spec, b, n, &p), oracle_tv_cb_zb(&spec, b, n, &p)) {
                    (Ok(engine), Ok(oracle)) => worst = worst.max((engine.exact - oracle).abs()),
                    // no structures of this weight: both sides must refuse
                    (Err(Error::ZeroProbability(_)), Err(Error::ZeroProbability(_))) => {}
                    _ => mismatched_errors += 1,
                }
                cases += 1;
            };
            for n in 1..=6 {
                for b in subsets(n) {
                    check(&b, n);
                }
            }
            for n in [8, 10] {
                for _ in 0..50 {
                    check(&random_subset(n, &mut rng), n);
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && mismatched_errors == 0,
        format!("max abs gap {worst:.3e} over {cases} cases, {mismatched_errors} error mismatches"),
    )
}

fn refined_chain() -> Outcome {
    let multiset = StructureSpec::explicit(Kind::Multiset, [2, 1, 1, 1, 1, 1].iter().map(|&v| rat_int(v)).collect()).unwrap();
    let assembly = StructureSpec::explicit(Kind::Assembly, [1, 2, 1, 1, 1, 1].iter().map(|&v| rat_int(v)).collect()).unwrap();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (spec, grid) in [(&multiset, [(0.5, 1.0), (0.3, 2.0)]), (&assembly, [(1.0, 1.0), (0.6, 0.5)])] {
        for (x, theta) in grid {
            let p = params(x, theta);
            for n in 1..=6 {
                for b in subsets(n) {
                    let d_refined = oracle_refined_tv(spec, &b, n, &p).unwrap();
                    let d_c = oracle_tv_cb_zb(spec, &b, n, &p).unwrap();
                    let d_r = oracle_tv_rb(spec, &b, n, &p).unwrap();
                    let engine = tv_cb_zb(spec, &b, n, &p).unwrap().exact;
                    for d in [d_c, d_r, engine] {
                        worst = worst.max((d - d_refined).abs());
                    }
                    cases += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max abs gap {worst:.3e} across the chain, {cases} cases"))
}

fn conditioning_bounds() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let perm = StructureSpec::permutations();
    let esf = StructureSpec::esf(0.5).unwrap();
    let p1 = params(1.0, 1.0);
    let mut max_ratio: f64 = 0.0;
    for (spec, a) in [(&perm, vec![1]), (&esf, vec![1, 2])] {
        let a_set = IndexSet::new(a.clone()).unwrap();
        for n in 3..=10 {
            for top in a.len()..=n {
                let b = IndexSet::new((1..=top).collect()).unwrap();
                let case = oracle_conditioned_case(spec, &a_set, &b, n, &p1).unwrap();
                let bounds = tv_conditioned_bounds(case.p, case.q, case.d_a, case.d_b).unwrap();
                if !(case.d_star <= bounds.b0 + 1e-12 && bounds.b0 <= bounds.b2 + 1e-12) {
                    ok = false;
                    notes.push(format!("{} n={n} b={top}: d*={} b0={} b2={}", spec.name, case.d_star, bounds.b0, bounds.b2));
                }
                max_ratio = max_ratio.max(case.d_star / bounds.b0);
            }
        }
    }
    // the worked 2-regular bound from p = e^{-3/4}, d_A = 4/n, d_B = 2b/n
    let mut worked_gap: f64 = 0.0;
    for n in [10usize, 50, 100] {
        for b in 2..=5usize {
            let (nf, bf) = (n as f64, b as f64);
            let bounds = tv_conditioned_bounds((-0.75f64).exp(), 1.0, 4.0 / nf, 2.0 * bf / nf).unwrap();
            let want = 0.75f64.exp() * 2.0 * (bf + 1.0) / nf;
            worked_gap = worked_gap.max((bounds.b1 - want).abs() / want);
        }
    }
    ok &= worked_gap <= 1e-15;
    let e = (-0.75f64).exp();
    ok &= (e - oracle_conditioned_case(&esf, &IndexSet::new(vec![1, 2]).unwrap(), &IndexSet::new(vec![1, 2]).unwrap(), 6, &p1)
        .unwrap()
        .p)
        .abs()
        < 1e-15;
    outcome(
        ok,
        format!("d* <= b0 <= b2 everywhere (max d*/b0 = {max_ratio:.3}); worked bound rel gap {worked_gap:.1e} {}", notes.join("; ")),
    )
}

fn moments_match() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut note = |v: f64, w: f64| {
        worst = worst.max((v - w).abs() / w.abs().max(1.0));
        count += 1;
    };
    // joint falling moments for assemblies
    for spec in [StructureSpec::permutations(), StructureSpec::set_partitions(), StructureSpec::mappings()] {
        for theta in [rat(1, 2), rat(1, 1), rat(2, 1)] {
            let p = params(0.8, rational_to_f64(&theta));
            for n in 1..=10 {
                let law = exact_joint_law(&spec, n, &theta).unwrap();
                for j1 in 1..=n {
                    for r1 in 1..=3u32 {
                        note(
                            factorial_moment_assembly(&spec, n, &MomentSpec::single(j1, r1).unwrap(), &p).unwrap(),
                            oracle_moment(&law, &[(j1, r1)]),
                        );
                        for j2 in j1 + 1..=n {
                            for r2 in 1..=3u32 {
                                let r = MomentSpec::new([(j1, r1), (j2, r2)]).unwrap();
                                note(
                                    factorial_moment_assembly(&spec, n, &r, &p).unwrap(),
                                    oracle_moment(&law, &[(j1, r1), (j2, r2)]),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    // single-index formulas for multisets and selections
    let singles = [
        (StructureSpec::integer_partitions(), 0.3),
        (StructureSpec::polynomials(2).unwrap(), 0.2),
        (StructureSpec::distinct_parts(), 0.7),
        (StructureSpec::square_free(2).unwrap(), 0.4),
    ];
    for (spec, x) in &singles {
        for theta in [rat(1, 2), rat(1, 1), rat(2, 1)] {
            let p = params(*x, rational_to_f64(&theta));
            for n in 1..=10 {
                let law = exact_joint_law(spec, n, &theta).unwrap();
                for j in 1..=n {
                    for r in 1..=3u32 {
                        note(factorial_moment_single(spec, n, j, r, &p).unwrap(), oracle_moment(&law, &[(j, r)]));
                    }
                }
            }
        }
    }
    // Watterson's formula against theta-biased permutations
    let perm = StructureSpec::permutations();
    for kappa in [rat(1, 2), rat(1, 1), rat(2, 1)] {
        for n in 1..=10 {
            let law = exact_joint_law(&perm, n, &kappa).unwrap();
            for j in 1..=n {
                for r in 1..=3u32 {
                    let v = esf_moment(n, rational_to_f64(&kappa), &MomentSpec::single(j, r).unwrap()).unwrap();
                    note(v, oracle_moment(&law, &[(j, r)]));
                }
            }
        }
    }
    // p_theta(n) = theta_(n) for the ESF
    let mut rising_ok = true;
    for theta in [rat(1, 2), rat(1, 1), rat(2, 1), rat(5, 1)] {
        let mut rising = BigRational::one();
        for n in 1..=20usize {
            rising *= &theta + rat_int(n as u64 - 1);
            rising_ok &= p_total_exact(&perm, n, &theta).unwrap() == rising;
        }
    }
    outcome(
        worst <= 1e-10 && rising_ok,
        format!("max rel gap {worst:.3e} over {count} moments; ESF p_theta(n) = theta_(n) exactly: {rising_ok}"),
    )
}

fn local_limit() -> Outcome {
    let target = (-EULER_GAMMA).exp();
    let n = 2000;
    let perm = n as f64 * prob_t_eq_n(&StructureSpec::permutations(), n, &params(1.0, 1.0)).unwrap().recursion();
    let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    let closed = n as f64 * (-h).exp();
    let poly = 500.0 * prob_t_eq_n(&StructureSpec::polynomials(2).unwrap(), 500, &params(0.5, 1.0)).unwrap().recursion();
    let rel_perm = (perm / target - 1.0).abs();
    let rel_poly = (poly / target - 1.0).abs();
    outcome(
        rel_perm <= 0.02 && rel_poly <= 0.10 && (perm - closed).abs() <= 1e-9 * closed,
        format!(
            "permutations n P = {perm:.6} ({:.2}% off e^-gamma = {target:.6}); polynomials q=2 n=500: {poly:.6} ({:.2}% off)",
            100.0 * rel_perm,
            100.0 * rel_poly
        ),
    )
}

fn limit_functional_equation() -> Outcome {
    let mut worst_fe: f64 = 0.0;
    let mut worst_ld: f64 = 0.0;
    let mut worst_flat: f64 = 0.0;
    let h = 1e-5;
    for kappa in [0.5, 1.0, 2.0] {
        for c in [0.0, kappa - 1.0] {
            let law = LimitLaw::new(kappa, c).unwrap();
            for s in [0.1, 1.0, 5.0] {
                let lhs = law.laplace_psi(s).unwrap() * law.psi(c).unwrap();
                worst_fe = worst_fe.max((lhs - law.psi(c + s).unwrap()).abs());
            }
            let d = (law.density_closed_form(1.0 + h).unwrap() - law.density_closed_form(1.0 - h).unwrap()) / (2.0 * h);
            let g1 = law.density(1.0).unwrap();
            if c == 0.0 {
                worst_ld = worst_ld.max((d / g1 - (kappa - 1.0)).abs());
            }
            if c == kappa - 1.0 {
                worst_flat = worst_flat.max(d.abs());
            }
        }
    }
    outcome(
        worst_fe <= 1e-8 && worst_ld <= 1e-4 && worst_flat <= 1e-4,
        format!("psi gap {worst_fe:.2e}; g'(1)/g(1) vs kappa-1 gap {worst_ld:.2e}; g'_(kappa-1)(1) {worst_flat:.2e}"),
    )
}

/// Chi-square statistic and p-value, pooling cells with expected count < 5.
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, usize, f64) {
    let mut cells = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_e > 0.0 {
        cells.push((pool_o, pool_e));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len() - 1;
    let pvalue = ChiSquared::new(df as f64).unwrap().sf(stat);
    (stat, df, pvalue)
}

fn sampler_exactness() -> Outcome {
    let n = 6;
    let count = 100_000;
    let mut ok = true;
    let mut lines = Vec::new();
    let specs = [
        (StructureSpec::permutations(), 1.0),
        (StructureSpec::integer_partitions(), 0.6),
        (StructureSpec::distinct_parts(), 1.0),
    ];
    for (k, (spec, x)) in specs.iter().enumerate() {
        let p = params(*x, 1.0);
        let law = exact_joint_law(spec, n, &rat_int(1)).unwrap();
        let batch = sample_components_streams(spec, n, &p, count, 1000 + k as u64).unwrap();
        let index: Vec<&ComponentVector> = law.entries.iter().map(|(a, _)| a).collect();
        let mut observed = vec![0u64; index.len()];
        for s in &batch.samples {
            match index.binary_search(&s) {
                Ok(pos) => observed[pos] += 1,
                Err(_) => ok = false,
            }
        }
        let expected: Vec<f64> = law.entries.iter().map(|(_, q)| count as f64 * rational_to_f64(q)).collect();
        let (stat, df, pvalue) = chi_square(&observed, &expected);
        let rate = batch.accepted as f64 / batch.trials as f64;
        let se = (batch.prob_t * (1.0 - batch.prob_t) / batch.trials as f64).sqrt();
        let z = (rate - batch.prob_t) / se;
        ok &= pvalue >= 1e-3 && z.abs() <= 4.0;
        lines.push(format!("{}: chi2={stat:.2} df={df} p={pvalue:.3} accept z={z:.2}", spec.name));
    }
    outcome(ok, lines.join("; "))
}

fn heuristic_trend() -> Outcome {
    let spec = StructureSpec::esf(2.0).unwrap();
    let b = IndexSet::new(vec![1, 2]).unwrap();
    let p = params(1.0, 1.0);
    let mut ratios = Vec::new();
    for n in [200usize, 400, 800] {
        let exact = tv_cb_zb(&spec, &b, n, &p).unwrap().exact;
        let mad = weighted_sum_pmf(&spec, &b, n, &p).unwrap().mean_abs_dev();
        let heuristic = 0.5 * (2.0f64 - 1.0).abs() * mad;
        let via_engine = tv_heuristic(&spec, &b, n, &p, &LimitLaw::for_spec(&spec, n, &p).unwrap()).unwrap() * n as f64;
        assert!((via_engine - heuristic).abs() <= 1e-12 * heuristic);
        ratios.push((n, n as f64 * exact / heuristic));
    }
    let in_envelope = ratios.iter().all(|&(_, r)| (0.5..=2.0).contains(&r));
    let gaps: Vec<f64> = ratios.iter().map(|&(_, r)| (r - 1.0).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = ratios.iter().map(|(n, r)| format!("n={n}: {r:.4}")).collect();
    outcome(
        in_envelope,
        format!("n d_TV / heuristic = [{}]; drift toward 1 monotone: {monotone}", shown.join(", ")),
    )
}

fn permutation_bound() -> Outcome {
    let perm = StructureSpec::permutations();
    let mut ok = true;
    let mut lines = Vec::new();
    for b in [2usize, 3, 4] {
        let set = IndexSet::new((1..=b).collect()).unwrap();
        let d = tv_cb_zb(&perm, &set, 20, &params(1.0, 1.0)).unwrap().exact;
        let f = permutation_tv_bound(20.0 / b as f64).unwrap();
        ok &= d <= f;
        lines.push(format!("b={b}: d={d:.3e} F={f:.3e}"));
    }
    outcome(ok, lines.join("; "))
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("conditioning identity", Some(Duration::from_secs(10)), conditioning_identity),
        ("P(T_n = n) recursion vs closed form", Some(Duration::from_secs(5)), prob_t_identities),
        ("TV identity vs oracle", Some(Duration::from_secs(60)), tv_matches_oracle),
        ("refined equality chain", None, refined_chain),
        ("conditioning bounds", None, conditioning_bounds),
        ("factorial moments", None, moments_match),
        ("logarithmic local limit", Some(Duration::from_secs(5)), local_limit),
        ("limit-law functional equation", None, limit_functional_equation),
        ("sampler exactness", None, sampler_exactness),
        ("heuristic trend", Some(Duration::from_secs(30)), heuristic_trend),
        ("permutation TV bound", None, permutation_bound),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = out.pass && in_time;
        if !pass {
            failures += 1;
        }
        let timing = match budget {
            Some(b) => format!("{:.2}s of {}s", elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        println!("{} [{:>2}] {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, k + 1, out.detail);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
