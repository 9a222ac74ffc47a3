//! Exact samplers for `C(n)` and the refined `D(n)` by rejection from the
//! independent process.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)` and
//! switched to stream `stream`; the same `(seed, stream)` pair reproduces the
//! same draws bit for bit.  Within one trial the indices are visited from `n`
//! down to `1`, skipping over zero coordinates with exponential jumps on the
//! cumulative hazard `sum -ln P(Z_i = 0)`, and the trial is abandoned as soon
//! as the partial weighted sum passes `n`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indep_process::{Process, TiltedParams};
use crate::structures::{ComponentVector, Kind, StructureSpec};
use crate::sumdist::{pmf_from_process, IndexSet, Method};

/// Smallest `P(T_n = n)` the rejection sampler accepts to work with.
pub const MIN_ACCEPTANCE: f64 = 1e-12;

/// Samples per stream when a batch is split across streams.
pub const STREAM_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngState { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub samples: Vec<ComponentVector>,
    pub trials: u64,
    pub accepted: u64,
    /// Exact `P_theta(T_n = n)`, the acceptance probability.
    pub prob_t: f64,
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        let e = -(-u).ln_1p();
        if e > 0.0 {
            return e;
        }
    }
}

/// Precomputed tables for repeated trials at fixed `(spec, n, params)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    /// `suffix[i] = sum_{j >= i} -ln P(Z_j = 0)`, `suffix[n + 1] = 0`.
    suffix: Vec<f64>,
    /// Cumulative law of `Z_i` given `Z_i >= 1`, over `1..=n/i`.
    cond: Vec<Vec<f64>>,
    prob_t: f64,
}

enum Trial {
    Accepted,
    Rejected,
}

impl Sampler {
    pub fn new(spec: &StructureSpec, n: usize, params: &TiltedParams) -> Result<Self> {
        let process = Process::new(spec, n, params)?;
        let pmf = pmf_from_process(&process, &IndexSet::full(n), n, Method::Auto)?;
        let prob_t = pmf.p(n);
        if !(prob_t >= MIN_ACCEPTANCE) {
            return Err(Error::Numeric(format!(
                "acceptance probability P(T_n = n) = {prob_t:e} is below {MIN_ACCEPTANCE:e}; choose x closer to the mean-matching value"
            )));
        }
        Ok(Self::from_process(&process, prob_t))
    }

    fn from_process(process: &Process, prob_t: f64) -> Self {
        let n = process.n;
        let mut suffix = vec![0.0; n + 2];
        let mut cond = vec![Vec::new(); n + 1];
        for i in (1..=n).rev() {
            let law = process.law(i);
            let h = -law.ln_p0();
            suffix[i] = suffix[i + 1] + h;
            if h > 0.0 {
                let ln_pos = (-(-h).exp_m1()).ln();
                let mut kmax = (n / i) as u64;
                if let Some(top) = law.max_support() {
                    kmax = kmax.min(top);
                }
                let table = law.ln_pmf_table(kmax);
                let mut acc = 0.0;
                cond[i] = table[1..]
                    .iter()
                    .map(|l| {
                        acc += (l - ln_pos).exp();
                        acc
                    })
                    .collect();
            }
        }
        Sampler { n, suffix, cond, prob_t }
    }

    pub fn prob_t(&self) -> f64 {
        self.prob_t
    }

    /// One draw of the independent process, stopping early once the weighted
    /// sum exceeds `n`.  Returns the (possibly partial) sum, capped at `n + 1`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [u64]) -> u64 {
        a.iter_mut().for_each(|v| *v = 0);
        let n = self.n as u64;
        let mut sum = 0u64;
        let mut j = self.n;
        while j >= 1 {
            let target = self.suffix[j + 1] + exp1(rng);
            if self.suffix[1] < target {
                break;
            }
            let i = self.suffix[1..=j].partition_point(|&s| s >= target);
            let table = &self.cond[i];
            let u: f64 = rng.random();
            let idx = table.partition_point(|&c| c <= u);
            if idx >= table.len() {
                return n + 1;
            }
            let k = idx as u64 + 1;
            sum += i as u64 * k;
            if sum > n {
                return n + 1;
            }
            a[i - 1] = k;
            j = i - 1;
        }
        sum
    }

    fn trial<R: Rng + ?Sized>(&self, rng: &mut R, a: &mut [u64]) -> Trial {
        if self.draw(rng, a) == self.n as u64 {
            Trial::Accepted
        } else {
            Trial::Rejected
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> SampleBatch {
        let mut samples = Vec::with_capacity(count);
        let mut a = vec![0u64; self.n];
        let mut trials = 0u64;
        while samples.len() < count {
            trials += 1;
            if let Trial::Accepted = self.trial(rng, &mut a) {
                samples.push(ComponentVector::new(a.clone()));
            }
        }
        let accepted = samples.len() as u64;
        SampleBatch { samples, trials, accepted, prob_t: self.prob_t }
    }
}

/// `count` exact draws of `C(n)` under `P_theta`.
pub fn sample_components<R: Rng + ?Sized>(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    count: usize,
    rng: &mut R,
) -> Result<SampleBatch> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    Ok(Sampler::new(spec, n, params)?.sample(count, rng))
}

/// Splits `count` into chunks of [`STREAM_CHUNK`], draws chunk `k` from
/// stream `k` of `seed`, in parallel, and concatenates in stream order.
pub fn sample_components_streams(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if n < 1 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let sampler = Sampler::new(spec, n, params)?;
    let chunks = count.div_ceil(STREAM_CHUNK);
    let parts: Vec<SampleBatch> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let size = STREAM_CHUNK.min(count - k * STREAM_CHUNK);
            let mut rng = RngState::new(seed, k as u64).rng();
            sampler.sample(size, &mut rng)
        })
        .collect();
    let mut out = SampleBatch { samples: Vec::with_capacity(count), trials: 0, accepted: 0, prob_t: sampler.prob_t };
    for part in parts {
        out.samples.extend(part.samples);
        out.trials += part.trials;
        out.accepted += part.accepted;
    }
    Ok(out)
}

/// Unconditioned draws of `T_n`; values above `n` are reported as `n + 1`.
pub fn sample_t_values<R: Rng + ?Sized>(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let process = Process::new(spec, n, params)?;
    let sampler = Sampler::from_process(&process, f64::NAN);
    let mut a = vec![0u64; n];
    Ok((0..count).map(|_| sampler.draw(rng, &mut a)).collect())
}

/// One refined draw: for each size `i` with `C_i > 0`, the occupied cells
/// `(j, D_ij)` among the `m_i` labelled structures of that size (`j` is
/// 0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinedSample {
    pub n: usize,
    pub parts: Vec<(usize, Vec<(u128, u64)>)>,
}

impl RefinedSample {
    /// Collapses back to the component spectrum.
    pub fn spectrum(&self) -> ComponentVector {
        let mut a = vec![0u64; self.n];
        for (i, cells) in &self.parts {
            a[i - 1] = cells.iter().map(|c| c.1).sum();
        }
        ComponentVector::new(a)
    }
}

/// Floyd's algorithm: a uniform `k`-subset of `0..n`, sorted.
fn floyd_subset<R: Rng + ?Sized>(n: u128, k: u64, rng: &mut R) -> Vec<u128> {
    let mut chosen = BTreeSet::new();
    let k = k as u128;
    for j in (n - k)..n {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}

fn split_cells<R: Rng + ?Sized>(kind: Kind, a: u64, m: u128, rng: &mut R) -> Vec<(u128, u64)> {
    match kind {
        Kind::Assembly => {
            let mut counts = BTreeMap::new();
            for _ in 0..a {
                *counts.entry(rng.random_range(0..m)).or_insert(0u64) += 1;
            }
            counts.into_iter().collect()
        }
        Kind::Multiset => {
            // stars and bars: a stars among a + m - 1 slots
            let stars = floyd_subset(a as u128 + m - 1, a, rng);
            let mut counts = BTreeMap::new();
            for (k, s) in stars.into_iter().enumerate() {
                *counts.entry(s - k as u128).or_insert(0u64) += 1;
            }
            counts.into_iter().collect()
        }
        Kind::Selection => {
            assert!(a as u128 <= m, "selection drew {a} of only {m} structures");
            floyd_subset(m, a, rng).into_iter().map(|j| (j, 1)).collect()
        }
    }
}

/// Exact draws of the refined process `D(n)`: draw `C(n)`, then split each
/// `C_i` over the `m_i` cells from the conditional law of `Y_i1..Y_im_i`
/// given their sum.
pub fn sample_refined<R: Rng + ?Sized>(
    spec: &StructureSpec,
    n: usize,
    params: &TiltedParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<RefinedSample>> {
    let batch = sample_components(spec, n, params, count, rng)?;
    let mut m_cache: BTreeMap<usize, u128> = BTreeMap::new();
    let mut out = Vec::with_capacity(count);
    for c in &batch.samples {
        let mut parts = Vec::new();
        for (k, &a) in c.a.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let i = k + 1;
            let m = match m_cache.get(&i) {
                Some(&m) => m,
                None => {
                    let exact = spec.m_of(i)?;
                    let m = if exact.is_integer() { exact.to_integer().to_u128() } else { None }.ok_or_else(|| {
                        Error::Domain(format!("refined sampling needs integer m_{i} below 2^128, got {exact}"))
                    })?;
                    m_cache.insert(i, m);
                    m
                }
            };
            parts.push((i, split_cells(spec.kind, a, m, rng)));
        }
        out.push(RefinedSample { n, parts });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary { mean, variance, std_error: (variance / n).sqrt() }
    }
}

/// Per-sample statistics of a batch of spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistics {
    pub count: usize,
    /// Number of components `K_n`.
    pub k: Summary,
    /// Largest component size `L_n`.
    pub largest: Summary,
    /// Number of distinct component sizes `J_n`.
    pub distinct: Summary,
    /// Size of a uniformly chosen component `D_n`.
    pub uniform_component: Summary,
    /// Size of the component containing a uniformly chosen point `D*_n`.
    pub size_biased_component: Summary,
}

pub fn component_count(a: &ComponentVector) -> u64 {
    a.components()
}

pub fn largest_component(a: &ComponentVector) -> u64 {
    a.a.iter().rposition(|&c| c > 0).map(|k| k as u64 + 1).unwrap_or(0)
}

pub fn distinct_sizes(a: &ComponentVector) -> u64 {
    a.a.iter().filter(|&&c| c > 0).count() as u64
}

fn pick_by_weight<R: Rng + ?Sized>(a: &ComponentVector, size_biased: bool, rng: &mut R) -> u64 {
    let total: u64 = if size_biased { a.weight() } else { a.components() };
    let mut t = rng.random_range(0..total);
    for (k, &c) in a.a.iter().enumerate() {
        let w = if size_biased { (k as u64 + 1) * c } else { c };
        if t < w {
            return k as u64 + 1;
        }
        t -= w;
    }
    unreachable!("weights sum to the total")
}

pub fn statistics<R: Rng + ?Sized>(samples: &[ComponentVector], rng: &mut R) -> Result<Statistics> {
    if samples.is_empty() {
        return Err(Error::Domain("statistics of an empty batch".into()));
    }
    let col = |f: &dyn Fn(&ComponentVector) -> u64| -> Vec<f64> { samples.iter().map(|s| f(s) as f64).collect() };
    let k = col(&component_count);
    let largest = col(&largest_component);
    let distinct = col(&distinct_sizes);
    let mut uniform = Vec::with_capacity(samples.len());
    let mut biased = Vec::with_capacity(samples.len());
    for s in samples {
        uniform.push(pick_by_weight(s, false, rng) as f64);
        biased.push(pick_by_weight(s, true, rng) as f64);
    }
    Ok(Statistics {
        count: samples.len(),
        k: Summary::of(&k),
        largest: Summary::of(&largest),
        distinct: Summary::of(&distinct),
        uniform_component: Summary::of(&uniform),
        size_biased_component: Summary::of(&biased),
    })
}
