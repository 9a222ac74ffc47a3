use std::fmt;

use combstruct::indep_process::{choose_x_report, ChosenX};
use combstruct::limits::limit_law_check_seeded;
use combstruct::moments::{esf_moment, esf_pmf, esf_pmf_exact, factorial_moment_assembly, factorial_moment_single, MomentSpec};
use combstruct::numeric::{ln_rational, rational_to_f64, BigRational};
use combstruct::oracle::{exact_joint_law, oracle_tv_cb_zb};
use combstruct::sampler::{component_count, largest_component, sample_components_streams, statistics, RngState};
use combstruct::structures::p_total_exact_table;
use combstruct::sumdist::{prob_t_eq_n, PTotalTable, EXACT_P_TOTAL_LIMIT};
use combstruct::tv::{tv_cb_zb, tv_cb_zb_with_heuristic};
use combstruct::verify::{run_all, Config};
use combstruct::{ComponentVector, Error, IndexSet, Kind, LimitLaw, Result, Strategy, StructureSpec, TiltedParams};
use rayon::prelude::*;

use crate::output::{Cell, Table};

/// Largest `n` at which `tv` and `moments` also run the enumeration oracle.
const ORACLE_N: usize = 12;

const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy)]
pub enum XChoice {
    Fixed(f64),
    Strategy(Strategy),
}

impl fmt::Display for XChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XChoice::Fixed(x) => write!(f, "{x}"),
            XChoice::Strategy(s) => write!(f, "{s}"),
        }
    }
}

pub struct Ctx {
    pub spec: Option<StructureSpec>,
    pub ns: Vec<usize>,
    pub bsets: Vec<IndexSet>,
    pub x: XChoice,
    /// Whether `--choose-x` was given, as opposed to the default strategy.
    pub strategy_given: bool,
    pub theta: BigRational,
    pub kappa: BigRational,
    pub seed: u64,
    pub samples: Option<usize>,
    pub moment: Option<MomentSpec>,
    pub vector: Option<ComponentVector>,
    pub points: usize,
    pub summary_only: bool,
}

impl Ctx {
    pub fn check_domain(&self) -> Result<()> {
        for (name, v) in [("theta", &self.theta), ("kappa", &self.kappa)] {
            if !(rational_to_f64(v) > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let XChoice::Fixed(x) = self.x {
            TiltedParams::new(x, 1.0)?;
        }
        if self.samples == Some(0) {
            return Err(Error::Domain("--samples must be positive".into()));
        }
        Ok(())
    }

    pub fn samples_for(&self, command: &str) -> usize {
        self.samples.unwrap_or(match command {
            "verify" => Config::default().samples,
            "limit" => 0,
            _ => DEFAULT_SAMPLES,
        })
    }

    fn spec(&self) -> &StructureSpec {
        self.spec.as_ref().expect("command reads a spec")
    }

    fn theta_f(&self) -> f64 {
        rational_to_f64(&self.theta)
    }

    fn single_n(&self) -> Result<usize> {
        match self.ns.as_slice() {
            [n] => Ok(*n),
            _ => Err(Error::Domain("this command takes a single --n".into())),
        }
    }

    fn params(&self, n: usize) -> Result<TiltedParams> {
        let spec = self.spec();
        let x = match self.x {
            XChoice::Fixed(x) => x,
            XChoice::Strategy(s) => combstruct::indep_process::choose_x(spec, n, self.theta_f(), s)?,
        };
        let p = TiltedParams::new(x, self.theta_f())?;
        p.validate(spec.kind)?;
        Ok(p)
    }

    fn pairs(&self) -> Vec<(usize, &IndexSet)> {
        self.ns.iter().flat_map(|&n| self.bsets.iter().map(move |b| (n, b))).collect()
    }
}

fn set_cell(b: &IndexSet) -> Cell {
    Cell::Text(format!("{{{b}}}"))
}

pub fn tv(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let mut t = Table::new(
        "tv",
        &["n", "B", "x", "exact", "lower_bound", "tail_term", "body_term", "heuristic", "oracle", "oracle_gap"],
    );
    let rows: Vec<Vec<Cell>> = ctx
        .pairs()
        .into_par_iter()
        .map(|(n, b)| -> Result<Vec<Cell>> {
            b.check_within(n)?;
            let p = ctx.params(n)?;
            let report = if spec.meta.is_some() {
                tv_cb_zb_with_heuristic(spec, b, n, &p)?
            } else {
                tv_cb_zb(spec, b, n, &p)?
            };
            let oracle = if n <= ORACLE_N { Some(oracle_tv_cb_zb(spec, b, n, &p)?) } else { None };
            Ok(vec![
                n.into(),
                set_cell(b),
                p.x.into(),
                report.exact.into(),
                report.lower.into(),
                report.tail_term.into(),
                report.body_term.into(),
                report.heuristic.into(),
                oracle.into(),
                oracle.map(|o| (o - report.exact).abs()).into(),
            ])
        })
        .collect::<Result<_>>()?;
    t.rows = rows;
    Ok(vec![t])
}

pub fn prob_t(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let mut t = Table::new(
        "prob_t",
        &["n", "x", "theta", "recursion", "closed_form", "rel_gap", "ln_recursion", "ln_closed_form"],
    );
    for &n in &ctx.ns {
        let p = ctx.params(n)?;
        let pt = prob_t_eq_n(spec, n, &p)?;
        t.push(vec![
            n.into(),
            p.x.into(),
            p.theta.into(),
            pt.recursion().into(),
            pt.closed_form().into(),
            pt.rel_gap().into(),
            pt.ln_recursion.into(),
            pt.ln_closed_form.into(),
        ]);
    }
    Ok(vec![t])
}

pub fn pofn(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let n = ctx.single_n()?;
    let mut t = Table::new("pofn", &["k", "p_theta", "ln_p_theta"]);
    if n <= EXACT_P_TOTAL_LIMIT {
        for (k, v) in p_total_exact_table(spec, n, &ctx.theta)?.into_iter().enumerate() {
            let ln = if v == BigRational::from_integer(0.into()) { f64::NEG_INFINITY } else { ln_rational(&v) };
            t.push(vec![k.into(), Cell::Text(v.to_string()), ln.into()]);
        }
    } else {
        let table = PTotalTable::new(spec, n, &ctx.params(n)?)?;
        for k in 0..=n {
            t.push(vec![k.into(), Cell::Null, table.ln_p(k).into()]);
        }
    }
    Ok(vec![t])
}

fn falling(a: u64, r: u32) -> f64 {
    (0..r as u64).map(|t| a.saturating_sub(t) as f64).product()
}

fn default_moments(n: usize) -> Result<Vec<MomentSpec>> {
    let mut out = Vec::new();
    for j in 1..=n {
        for r in 1..=2 {
            out.push(MomentSpec::single(j, r)?);
        }
    }
    Ok(out)
}

pub fn moments(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let n = ctx.single_n()?;
    let p = ctx.params(n)?;
    let list = match &ctx.moment {
        Some(m) => vec![m.clone()],
        None => default_moments(n)?,
    };
    let law = if n <= ORACLE_N { Some(exact_joint_law(spec, n, &ctx.theta)?) } else { None };
    let mut t = Table::new("moments", &["moment", "value", "oracle", "oracle_gap"]);
    for m in &list {
        let orders: Vec<(usize, u32)> = m.orders().collect();
        let value = match (spec.kind, orders.as_slice()) {
            (Kind::Assembly, _) => factorial_moment_assembly(spec, n, m, &p)?,
            (_, [(j, r)]) => factorial_moment_single(spec, n, *j, *r, &p)?,
            _ => {
                return Err(Error::Domain(format!(
                    "joint moments need an assembly; {} is a {}",
                    spec.name, spec.kind
                )))
            }
        };
        let oracle = law.as_ref().map(|law| {
            law.entries
                .iter()
                .map(|(v, prob)| {
                    let w: f64 = orders.iter().map(|&(j, r)| falling(v.a.get(j - 1).copied().unwrap_or(0), r)).product();
                    w * rational_to_f64(prob)
                })
                .sum::<f64>()
        });
        t.push(vec![
            Cell::Text(m.to_string()),
            value.into(),
            oracle.into(),
            oracle.map(|o| (o - value).abs()).into(),
        ]);
    }
    Ok(vec![t])
}

pub fn sample(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let n = ctx.single_n()?;
    let p = ctx.params(n)?;
    let count = ctx.samples_for("sample");
    let batch = sample_components_streams(spec, n, &p, count, ctx.seed)?;
    let mut tables = Vec::new();
    if !ctx.summary_only {
        let mut t = Table::new("samples", &["index", "components", "largest", "spectrum"]);
        for (i, v) in batch.samples.iter().enumerate() {
            t.push(vec![i.into(), component_count(v).into(), largest_component(v).into(), Cell::Text(v.sparse())]);
        }
        tables.push(t);
    }
    let mut rng = RngState::new(ctx.seed, u64::MAX).rng();
    let stats = statistics(&batch.samples, &mut rng)?;
    let mut t = Table::new("statistics", &["statistic", "mean", "variance", "std_error"]);
    for (name, s) in [
        ("components", stats.k),
        ("largest", stats.largest),
        ("distinct_sizes", stats.distinct),
        ("uniform_component", stats.uniform_component),
        ("size_biased_component", stats.size_biased_component),
    ] {
        t.push(vec![name.into(), s.mean.into(), s.variance.into(), s.std_error.into()]);
    }
    tables.push(t);
    let trials = batch.trials as f64;
    let pt = batch.prob_t;
    let z = (batch.accepted as f64 - trials * pt) / (trials * pt * (1.0 - pt)).sqrt();
    let mut t = Table::new("acceptance", &["x", "trials", "accepted", "rate", "prob_t", "z"]);
    t.push(vec![
        p.x.into(),
        batch.trials.into(),
        batch.accepted.into(),
        (batch.accepted as f64 / trials).into(),
        pt.into(),
        z.into(),
    ]);
    tables.push(t);
    Ok(tables)
}

pub fn choose_x(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let mut t = Table::new("choose_x", &["n", "strategy", "x", "mean", "residual"]);
    for &n in &ctx.ns {
        let rows: Vec<(Strategy, ChosenX)> = match ctx.x {
            XChoice::Fixed(_) => return Err(Error::Domain("choose-x takes --choose-x <strategy>, not --x".into())),
            XChoice::Strategy(s) if ctx.strategy_given => vec![(s, choose_x_report(spec, n, ctx.theta_f(), s)?)],
            XChoice::Strategy(_) => {
                let mut rows = Vec::new();
                for s in Strategy::ALL {
                    match choose_x_report(spec, n, ctx.theta_f(), s) {
                        Ok(c) => rows.push((s, c)),
                        Err(Error::Domain(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                rows
            }
        };
        for (s, c) in rows {
            t.push(vec![n.into(), Cell::Text(s.to_string()), c.x.into(), c.mean.into(), c.residual.into()]);
        }
    }
    Ok(vec![t])
}

pub fn limit(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    let samples = ctx.samples_for("limit");
    let mut local = Table::new("local", &["n", "x", "kappa", "c", "n_prob_t", "g_c_1", "rel_gap"]);
    let mut density = Table::new("density", &["n", "z", "g_c"]);
    let mut cdf = Table::new("cdf", &["n", "z", "empirical", "limit"]);
    for &n in &ctx.ns {
        let p = ctx.params(n)?;
        let check = limit_law_check_seeded(spec, n, &p, samples, RngState::new(ctx.seed, n as u64))?;
        let law: LimitLaw = check.law;
        local.push(vec![
            n.into(),
            p.x.into(),
            law.kappa.into(),
            law.c.into(),
            check.n_prob_t.into(),
            check.predicted.into(),
            check.rel_gap.into(),
        ]);
        for i in 0..ctx.points {
            let z = i as f64 / (ctx.points - 1) as f64;
            density.push(vec![n.into(), z.into(), law.density(z)?.into()]);
        }
        for (z, emp, lim) in check.cdf_rows {
            cdf.push(vec![n.into(), z.into(), emp.into(), lim.into()]);
        }
    }
    let mut tables = vec![local, density];
    if samples > 0 {
        tables.push(cdf);
    }
    Ok(tables)
}

pub fn esf(ctx: &Ctx) -> Result<Vec<Table>> {
    let n = ctx.single_n()?;
    let kappa = rational_to_f64(&ctx.kappa);
    if let Some(v) = &ctx.vector {
        let mut t = Table::new("esf_pmf", &["vector", "pmf", "exact"]);
        let exact = esf_pmf_exact(n, &ctx.kappa, v)?;
        t.push(vec![Cell::Text(v.sparse()), esf_pmf(n, kappa, v)?.into(), Cell::Text(exact.to_string())]);
        return Ok(vec![t]);
    }
    let list = match &ctx.moment {
        Some(m) => vec![m.clone()],
        None => default_moments(n)?,
    };
    let mut t = Table::new("esf_moments", &["moment", "value"]);
    for m in &list {
        t.push(vec![Cell::Text(m.to_string()), esf_moment(n, kappa, m)?.into()]);
    }
    // E K_n = sum_{i<n} kappa / (kappa + i)
    let mean_k: f64 = (0..n).map(|i| kappa / (kappa + i as f64)).sum();
    let mut k = Table::new("esf_components", &["n", "kappa", "mean_components"]);
    k.push(vec![n.into(), kappa.into(), mean_k.into()]);
    Ok(vec![t, k])
}

pub fn heuristic(ctx: &Ctx) -> Result<Vec<Table>> {
    let spec = ctx.spec();
    if spec.meta.is_none() {
        return Err(Error::Domain(format!("{} has no logarithmic metadata", spec.name)));
    }
    let mut t = Table::new("heuristic", &["n", "B", "x", "exact", "heuristic", "n_exact", "n_heuristic", "ratio"]);
    let rows: Vec<Vec<Cell>> = ctx
        .pairs()
        .into_par_iter()
        .map(|(n, b)| -> Result<Vec<Cell>> {
            b.check_within(n)?;
            let p = ctx.params(n)?;
            let report = tv_cb_zb_with_heuristic(spec, b, n, &p)?;
            let h = report.heuristic.unwrap_or(f64::NAN);
            let nf = n as f64;
            Ok(vec![
                n.into(),
                set_cell(b),
                p.x.into(),
                report.exact.into(),
                h.into(),
                (nf * report.exact).into(),
                (nf * h).into(),
                (report.exact / h).into(),
            ])
        })
        .collect::<Result<_>>()?;
    t.rows = rows;
    Ok(vec![t])
}

pub fn verify(ctx: &Ctx) -> Result<(Vec<Table>, bool)> {
    let config = Config { n_max: ctx.ns[0], samples: ctx.samples_for("verify"), seed: ctx.seed };
    let checks = run_all(&config);
    let ok = checks.iter().all(|c| c.pass);
    let mut t = Table::new("verify", &["check", "pass", "detail"]);
    for c in checks {
        t.push(vec![c.name.into(), c.pass.into(), c.detail.into()]);
    }
    Ok((vec![t], ok))
}
