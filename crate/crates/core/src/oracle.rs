//! Brute-force ground truth for small `n`: exact laws by enumerating every
//! complete component vector, and total-variation distances computed from
//! them without any of the recursions in [`crate::sumdist`].

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::indep_process::{refined_y_law, z_law, DiscreteLaw, TiltedParams};
use crate::numeric::{big_factorial, rat_int, rat_pow, rat_uint, rational_from_f64, rational_to_f64, CompensatedSum};
use crate::structures::{count_n, ComponentVector, Kind, StructureSpec};
use crate::sumdist::IndexSet;

pub const DEFAULT_CAP: usize = 25;

/// Upper bound on the number of points any product-law enumeration may visit.
const MAX_POINTS: usize = 5_000_000;

/// All `a` with `sum i a_i = n`, in lexicographic order of `(a_1, ..., a_n)`.
pub fn enumerate_complete(n: usize) -> Result<Vec<ComponentVector>> {
    enumerate_complete_capped(n, DEFAULT_CAP)
}

pub fn enumerate_complete_capped(n: usize, cap: usize) -> Result<Vec<ComponentVector>> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let sizes: Vec<usize> = (1..=n).collect();
    let mut out: Vec<ComponentVector> = bounded_vectors(&sizes, n, usize::MAX)?
        .into_iter()
        .filter(|a| weight_of(&sizes, a) == n)
        .map(ComponentVector::new)
        .collect();
    out.sort();
    Ok(out)
}

fn weight_of(sizes: &[usize], v: &[u64]) -> usize {
    sizes.iter().zip(v).map(|(&s, &c)| s * c as usize).sum()
}

/// Every `v` with `sum sizes[k] v[k] <= budget`.
fn bounded_vectors(sizes: &[usize], budget: usize, limit: usize) -> Result<Vec<Vec<u64>>> {
    fn go(sizes: &[usize], k: usize, left: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>, limit: usize) -> bool {
        if k == sizes.len() {
            out.push(cur.clone());
            return out.len() <= limit;
        }
        for c in 0..=left / sizes[k] {
            cur.push(c as u64);
            let ok = go(sizes, k + 1, left - c * sizes[k], cur, out, limit);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    if !go(sizes, 0, budget, &mut Vec::new(), &mut out, limit) {
        return Err(Error::CapExceeded { n: budget, cap: limit });
    }
    Ok(out)
}

/// The exact law of `C(n)` under `P_theta`.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub n: usize,
    pub theta: BigRational,
    pub entries: Vec<(ComponentVector, BigRational)>,
}

impl ExactLaw {
    pub fn total(&self) -> BigRational {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn prob(&self, v: &ComponentVector) -> BigRational {
        self.entries
            .binary_search_by(|(a, _)| a.cmp(v))
            .map(|k| self.entries[k].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }
}

/// `P_theta(C(n) = a) = theta^{sum a} N(n, a) / sum_b theta^{sum b} N(n, b)`.
pub fn exact_joint_law(spec: &StructureSpec, n: usize, theta: &BigRational) -> Result<ExactLaw> {
    if !theta.is_positive() {
        return Err(Error::Domain(format!("theta must be positive, got {theta}")));
    }
    let mut entries = Vec::new();
    let mut total = BigRational::zero();
    for a in enumerate_complete(n)? {
        let w = count_n(spec, &a)? * rat_pow(theta, a.components());
        if !w.is_zero() {
            total += &w;
            entries.push((a, w));
        }
    }
    if total.is_zero() {
        return Err(Error::ZeroProbability(format!("{} has no structures of weight {n}", spec.name)));
    }
    for (_, w) in entries.iter_mut() {
        *w = &*w / &total;
    }
    Ok(ExactLaw { n, theta: theta.clone(), entries })
}

/// Law of `h(C(n))`.
pub fn exact_functional_law<K: Ord, F: Fn(&ComponentVector) -> K>(law: &ExactLaw, h: F) -> BTreeMap<K, BigRational> {
    let mut out = BTreeMap::new();
    for (a, p) in &law.entries {
        *out.entry(h(a)).or_insert_with(BigRational::zero) += p;
    }
    out
}

/// `1/2 sum |P - Q|` for two exact laws on the same space.
pub fn exact_tv<K: Ord + Clone>(p: &BTreeMap<K, BigRational>, q: &BTreeMap<K, BigRational>) -> BigRational {
    let zero = BigRational::zero();
    let mut keys: Vec<&K> = p.keys().chain(q.keys()).collect();
    keys.sort();
    keys.dedup();
    let sum: BigRational = keys
        .into_iter()
        .map(|k| (p.get(k).unwrap_or(&zero) - q.get(k).unwrap_or(&zero)).abs())
        .sum();
    sum / rat_int(2)
}

/// `p(n, k)` for `k = 0..=n`: the number of structures with `k` components.
pub fn p_nk(spec: &StructureSpec, n: usize) -> Result<Vec<BigRational>> {
    let mut out = vec![BigRational::zero(); n + 1];
    for a in enumerate_complete(n)? {
        out[a.components() as usize] += count_n(spec, &a)?;
    }
    Ok(out)
}

pub fn restrict(a: &ComponentVector, b: &IndexSet) -> Vec<u64> {
    b.items().iter().map(|&i| a.a.get(i - 1).copied().unwrap_or(0)).collect()
}

fn theta_rational(params: &TiltedParams) -> Result<BigRational> {
    rational_from_f64(params.theta)
}

/// Product law of independent coordinates with given sizes, truncated to
/// `sum sizes[k] v[k] <= n`; returns the points with their probabilities.
fn product_points(sizes: &[usize], laws: &[DiscreteLaw], n: usize) -> Result<Vec<(Vec<u64>, f64)>> {
    let tables: Vec<Vec<f64>> = sizes.iter().zip(laws).map(|(&s, l)| l.ln_pmf_table((n / s) as u64)).collect();
    Ok(bounded_vectors(sizes, n, MAX_POINTS)?
        .into_iter()
        .map(|v| {
            let ln: f64 = v.iter().enumerate().map(|(k, &c)| tables[k][c as usize]).sum();
            (v, ln.exp())
        })
        .collect())
}

/// TV between an exact law supported on `sum sizes v <= n` and a product
/// law; mass of the product beyond the window counts in full.
fn tv_against_points(exact: &BTreeMap<Vec<u64>, BigRational>, points: &[(Vec<u64>, f64)]) -> f64 {
    let mut diff = CompensatedSum::default();
    let mut covered = CompensatedSum::default();
    for (v, q) in points {
        let p = exact.get(v).map(rational_to_f64).unwrap_or(0.0);
        diff.add((p - q).abs());
        covered.add(*q);
    }
    0.5 * diff.value() + 0.5 * (1.0 - covered.value()).max(0.0)
}

fn z_laws(spec: &StructureSpec, b: &IndexSet, params: &TiltedParams) -> Result<Vec<DiscreteLaw>> {
    b.items().iter().map(|&i| z_law(spec, i, params)).collect()
}

/// `d_TV(C_B(n), Z_B)` from the enumerated law.
pub fn oracle_tv_cb_zb(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<f64> {
    b.check_within(n)?;
    params.validate(spec.kind)?;
    let law = exact_joint_law(spec, n, &theta_rational(params)?)?;
    let exact = exact_functional_law(&law, |a| restrict(a, b));
    let points = product_points(b.items(), &z_laws(spec, b, params)?, n)?;
    Ok(tv_against_points(&exact, &points))
}

/// `d_TV(R_B(n), R_B)` with `R_B(n) = sum_{i in B} i C_i(n)`, from the
/// enumerated law on one side and the enumerated product on the other.
pub fn oracle_tv_rb(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<f64> {
    b.check_within(n)?;
    params.validate(spec.kind)?;
    let law = exact_joint_law(spec, n, &theta_rational(params)?)?;
    let sizes = b.items();
    let exact = exact_functional_law(&law, |a| vec![weight_of(sizes, &restrict(a, b)) as u64]);
    let mut by_r: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    for (v, q) in product_points(sizes, &z_laws(spec, b, params)?, n)? {
        *by_r.entry(vec![weight_of(sizes, &v) as u64]).or_insert(0.0) += q;
    }
    let points: Vec<(Vec<u64>, f64)> = by_r.into_iter().collect();
    Ok(tv_against_points(&exact, &points))
}

/// Ingredients of the conditioning comparison for `A` inside `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedCase {
    /// `d_TV(C_B* , Z_B*)`: `C_B` given `C_A = 0` against `Z_B` with `Z_A = 0`.
    pub d_star: f64,
    /// `P(Z_A = 0)`.
    pub p: f64,
    /// `P(C_A(n) = 0)`.
    pub q: f64,
    pub d_a: f64,
    pub d_b: f64,
}

pub fn oracle_conditioned_case(
    spec: &StructureSpec,
    a_set: &IndexSet,
    b: &IndexSet,
    n: usize,
    params: &TiltedParams,
) -> Result<ConditionedCase> {
    b.check_within(n)?;
    if let Some(&i) = a_set.items().iter().find(|&&i| !b.contains(i)) {
        return Err(Error::Domain(format!("A must be a subset of B, {i} is not in B")));
    }
    params.validate(spec.kind)?;
    let law = exact_joint_law(spec, n, &theta_rational(params)?)?;
    let in_a: Vec<bool> = b.items().iter().map(|&i| a_set.contains(i)).collect();
    let cb = exact_functional_law(&law, |a| restrict(a, b));
    let q: BigRational = cb
        .iter()
        .filter(|(v, _)| v.iter().zip(&in_a).all(|(&c, &ia)| !ia || c == 0))
        .map(|(_, p)| p)
        .sum();
    if q.is_zero() {
        return Err(Error::ZeroProbability("P(C_A(n) = 0) is zero".into()));
    }
    let cb_star: BTreeMap<Vec<u64>, BigRational> = cb
        .iter()
        .filter(|(v, _)| v.iter().zip(&in_a).all(|(&c, &ia)| !ia || c == 0))
        .map(|(v, p)| (v.clone(), p / &q))
        .collect();

    let laws = z_laws(spec, b, params)?;
    let p: f64 = laws.iter().zip(&in_a).filter(|(_, &ia)| ia).map(|(l, _)| l.ln_p0()).sum::<f64>().exp();
    // Z_B with Z_A pinned at zero: the remaining coordinates are untouched.
    let pinned: Vec<DiscreteLaw> = laws
        .iter()
        .zip(&in_a)
        .map(|(l, &ia)| if ia { DiscreteLaw::Poisson { ln_lambda: f64::NEG_INFINITY } } else { *l })
        .collect();
    let points = product_points(b.items(), &pinned, n)?;
    let d_star = tv_against_points(&cb_star, &points);

    let d_a = oracle_tv_cb_zb(spec, a_set, n, params)?;
    let d_b = tv_against_points(&cb, &product_points(b.items(), &laws, n)?);
    Ok(ConditionedCase { d_star, p, q: rational_to_f64(&q), d_a, d_b })
}

fn integer_m(spec: &StructureSpec, i: usize) -> Result<usize> {
    let m = spec.m_of(i)?;
    if !m.is_integer() {
        return Err(Error::Domain(format!("refinement needs integer m_{i}, got {m}")));
    }
    m.to_integer()
        .to_usize()
        .filter(|&v| v <= 64)
        .ok_or_else(|| Error::Domain(format!("m_{i} = {m} is too large to refine by enumeration")))
}

/// All ways of spreading `a` items over `cells` cells.
fn compositions(a: u64, cells: usize) -> Vec<Vec<u64>> {
    fn go(left: u64, cells: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cells == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            go(left - c, cells - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if cells == 0 {
        if a == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(a, cells, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: &BigInt, k: u64) -> BigRational {
    let mut acc = BigRational::one();
    for j in 0..k {
        acc = acc * BigRational::from(n - BigInt::from(j)) / rat_int(j + 1);
    }
    acc
}

/// `P(split = d | a_i = sum d)`, the uniform law of the refinement within size `i`.
fn split_prob(kind: Kind, m: usize, d: &[u64]) -> BigRational {
    let a: u64 = d.iter().sum();
    let mb = BigInt::from(m);
    match kind {
        Kind::Assembly => {
            let mut w = rat_uint(big_factorial(a)) / rat_pow(&rat_int(m as u64), a);
            for &c in d {
                w /= rat_uint(big_factorial(c));
            }
            w
        }
        Kind::Multiset => BigRational::one() / binomial(&(mb + BigInt::from(a) - 1), a),
        Kind::Selection => {
            if d.iter().any(|&c| c > 1) {
                BigRational::zero()
            } else {
                BigRational::one() / binomial(&mb, a)
            }
        }
    }
}

/// `d_TV(D_{B*}(n), Y_{B*})` for the refined spectrum over the cells of the
/// sizes in `B`; needs small integer `m_i` for `i` in `B`.
pub fn oracle_refined_tv(spec: &StructureSpec, b: &IndexSet, n: usize, params: &TiltedParams) -> Result<f64> {
    b.check_within(n)?;
    params.validate(spec.kind)?;
    let ms: Vec<usize> = b.items().iter().map(|&i| integer_m(spec, i)).collect::<Result<_>>()?;
    let law = exact_joint_law(spec, n, &theta_rational(params)?)?;
    let mut exact: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    for (a, p) in &law.entries {
        let mut partial: Vec<(Vec<u64>, BigRational)> = vec![(Vec::new(), p.clone())];
        for (&i, &m) in b.items().iter().zip(&ms) {
            let ai = a.a[i - 1];
            let mut next = Vec::new();
            for d in compositions(ai, m) {
                let w = split_prob(spec.kind, m, &d);
                if w.is_zero() {
                    continue;
                }
                for (key, pk) in &partial {
                    let mut k2 = key.clone();
                    k2.extend_from_slice(&d);
                    next.push((k2, pk * &w));
                }
            }
            partial = next;
        }
        for (key, pk) in partial {
            *exact.entry(key).or_insert_with(BigRational::zero) += pk;
        }
    }
    let mut sizes = Vec::new();
    let mut laws = Vec::new();
    for (&i, &m) in b.items().iter().zip(&ms) {
        let y = refined_y_law(spec, i, params)?;
        for _ in 0..m {
            sizes.push(i);
            laws.push(y);
        }
    }
    let points = product_points(&sizes, &laws, n)?;
    Ok(tv_against_points(&exact, &points))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(x: f64, theta: f64) -> TiltedParams {
        TiltedParams::new(x, theta).unwrap()
    }

    #[test]
    fn enumeration_counts_partitions() {
        let want = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for n in 1..=10 {
            assert_eq!(enumerate_complete(n).unwrap().len(), want[n - 1]);
        }
        let v = enumerate_complete(4).unwrap();
        assert_eq!(v[0].a, vec![0, 0, 0, 1]);
        assert_eq!(v.last().unwrap().a, vec![4, 0, 0, 0]);
        assert!(matches!(enumerate_complete(26), Err(Error::CapExceeded { n: 26, cap: 25 })));
        assert!(enumerate_complete_capped(26, 30).is_ok());
    }

    #[test]
    fn exact_law_sums_to_one() {
        for spec in StructureSpec::builtins() {
            for theta in [rat_int(1), BigRational::new(3.into(), 2.into())] {
                let law = exact_joint_law(&spec, 7, &theta).unwrap();
                assert!(law.total().is_one(), "{}", spec.name);
            }
        }
    }

    #[test]
    fn p_nk_for_permutations_are_stirling_numbers() {
        let s = p_nk(&StructureSpec::permutations(), 5).unwrap();
        let want = [0, 24, 50, 35, 10, 1];
        for k in 0..=5 {
            assert_eq!(s[k], rat_int(want[k]));
        }
    }

    #[test]
    fn the_three_distances_agree() {
        let cases = [
            (StructureSpec::permutations(), params(1.0, 1.0)),
            (StructureSpec::set_partitions(), params(0.7, 1.3)),
            (StructureSpec::integer_partitions(), params(0.6, 1.0)),
            (StructureSpec::distinct_parts(), params(0.9, 0.8)),
        ];
        for (spec, p) in cases {
            for b in [IndexSet::new(vec![1]).unwrap(), IndexSet::new(vec![1, 3]).unwrap()] {
                let d1 = oracle_refined_tv(&spec, &b, 6, &p).unwrap();
                let d2 = oracle_tv_cb_zb(&spec, &b, 6, &p).unwrap();
                let d3 = oracle_tv_rb(&spec, &b, 6, &p).unwrap();
                assert!((d1 - d2).abs() < 1e-12 && (d2 - d3).abs() < 1e-12, "{}: {d1} {d2} {d3}", spec.name);
            }
        }
    }

    #[test]
    fn full_index_set_is_far_from_independent() {
        let spec = StructureSpec::permutations();
        let d = oracle_tv_cb_zb(&spec, &IndexSet::full(5), 5, &params(1.0, 1.0)).unwrap();
        assert!(d > 0.5);
    }

    #[test]
    fn conditioned_case_identity() {
        let spec = StructureSpec::set_partitions();
        let a = IndexSet::new(vec![2]).unwrap();
        let b = IndexSet::new(vec![1, 2]).unwrap();
        let c = oracle_conditioned_case(&spec, &a, &b, 6, &params(0.8, 1.0)).unwrap();
        assert!(c.d_star >= 0.0 && c.d_star <= 1.0);
        assert!((c.p - c.q).abs() <= c.d_a + 1e-12);
        assert!(oracle_conditioned_case(&spec, &b, &a, 6, &params(0.8, 1.0)).is_err());
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(2, 3).len(), 6);
        assert_eq!(compositions(0, 0).len(), 1);
        let total: BigRational = compositions(3, 2).iter().map(|d| split_prob(Kind::Assembly, 2, d)).sum();
        assert!(total.is_one());
    }
}
