mod commands;
mod output;

use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use combstruct::numeric::{parse_rational, BigRational};
use combstruct::{ComponentVector, Error, IndexSet, StructureSpec};
use sha2::{Digest, Sha256};

use crate::commands::{Ctx, XChoice};
use crate::output::{render_json, render_tsv, Report, JSON_DIGITS, TSV_DIGITS};

#[derive(Parser, Debug)]
#[command(name = "combstruct", version, about = "Exact computations for random decomposable combinatorial structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// d_TV(C_B(n), Z_B) with its bound and heuristic, against the oracle at small n
    Tv,
    /// P(T_n = n) by the recursion and by the closed form
    ProbT,
    /// Table of p_theta(k), k = 0..n
    Pofn,
    /// Factorial moments of the component counts
    Moments,
    /// Exact samples of the component spectrum, with statistics
    Sample,
    /// The free parameter x and the residual |E T_n - n|
    ChooseX,
    /// Limit density and the local comparison n P(T_n = n)
    Limit,
    /// Ewens sampling formula probabilities and moments
    Esf,
    /// Limit-law heuristic for d_TV next to the exact value
    Heuristic,
    /// Oracle cross-check suite at small n
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Tv => "tv",
            Command::ProbT => "prob-t",
            Command::Pofn => "pofn",
            Command::Moments => "moments",
            Command::Sample => "sample",
            Command::ChooseX => "choose-x",
            Command::Limit => "limit",
            Command::Esf => "esf",
            Command::Heuristic => "heuristic",
            Command::Verify => "verify",
        }
    }

    fn uses_spec(self) -> bool {
        !matches!(self, Command::Esf | Command::Verify)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct Opts {
    /// Spec JSON file, or a builtin name such as `permutations` or `esf:kappa=0.5`
    #[arg(long, global = true, default_value = "permutations")]
    spec: String,
    /// Size(s) n, comma separated
    #[arg(long = "n", global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// Index set B such as "1..5,7"; repeat for several sets
    #[arg(long = "B", global = true)]
    b: Vec<String>,
    /// Free parameter x
    #[arg(long, global = true, conflicts_with = "choose_x", allow_negative_numbers = true)]
    x: Option<f64>,
    /// Strategy for x (exact-mean, logarithmic, logarithmic-tilted, set-partition, ...)
    #[arg(long = "choose-x", global = true)]
    choose_x: Option<String>,
    /// Tilt theta, as a decimal or a fraction a/b
    #[arg(long, global = true, default_value = "1", allow_hyphen_values = true)]
    theta: String,
    /// ESF parameter kappa, as a decimal or a fraction a/b
    #[arg(long, global = true, default_value = "1", allow_hyphen_values = true)]
    kappa: String,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    format: Format,
    /// Significant digits for floats (default 12 in TSV, 17 in JSON)
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=17))]
    precision: Option<u8>,
    /// Moment orders "j:r,...", e.g. "1:2,3:1"
    #[arg(long = "r", global = true)]
    r: Option<String>,
    /// Component spectrum "i:a_i,...", e.g. "1:2,3:1"
    #[arg(long, global = true)]
    vector: Option<String>,
    /// Grid points on [0, 1] for the limit density
    #[arg(long, global = true, default_value_t = 11)]
    points: usize,
    /// Print only the statistics of a sample batch
    #[arg(long, global = true)]
    summary_only: bool,
}

enum Failure {
    Flag(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numeric(_) | Error::ZeroProbability(_) => 4,
        _ => 3,
    }
}

fn load_spec(text: &str) -> Result<StructureSpec, Failure> {
    let path = std::path::Path::new(text);
    if path.is_file() {
        let body = std::fs::read_to_string(path).map_err(Error::from)?;
        return Ok(StructureSpec::from_json_str(&body)?);
    }
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut params = serde_json::Map::new();
    for (key, default) in [("kappa", "1"), ("q", "2")] {
        params.insert(key.into(), serde_json::Value::from(default.parse::<u64>().unwrap()));
    }
    for pair in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Failure::Flag(format!("bad builtin parameter {pair:?} in --spec")))?;
        let value = if k == "q" {
            serde_json::Value::from(v.parse::<u64>().map_err(|_| Failure::Flag(format!("bad q in --spec: {v:?}")))?)
        } else {
            serde_json::Value::from(v.parse::<f64>().map_err(|_| Failure::Flag(format!("bad {k} in --spec: {v:?}")))?)
        };
        params.insert(k.into(), value);
    }
    if !StructureSpec::builtins().iter().any(|s| s.name == name) {
        return Err(Failure::Flag(format!("--spec {text:?} is neither a file nor a builtin name")));
    }
    Ok(StructureSpec::builtin(name, &params)?)
}

fn parse_vector(text: &str, n: usize) -> Result<ComponentVector, Failure> {
    let mut a = vec![0u64; n];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Failure::Flag(format!("bad --vector entry {part:?}"));
        let (i, c) = part.split_once(':').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let c: u64 = c.trim().parse().map_err(|_| bad())?;
        if i < 1 || i > n {
            return Err(Failure::Core(Error::Domain(format!("--vector index {i} outside 1..={n}"))));
        }
        a[i - 1] += c;
    }
    Ok(ComponentVector::new(a))
}

fn parse_number(flag: &str, text: &str) -> Result<BigRational, Failure> {
    parse_rational(text).map_err(|_| Failure::Flag(format!("--{flag} expects a number, got {text:?}")))
}

/// Validates every flag and loads the spec; no computation happens here.
fn resolve(command: Command, opts: &Opts) -> Result<Ctx, Failure> {
    let ns = if opts.n.is_empty() { vec![10] } else { opts.n.clone() };
    if let Some(&bad) = ns.iter().find(|&&n| n < 1) {
        return Err(Failure::Core(Error::Domain(format!("n must be >= 1, got {bad}"))));
    }
    let b_texts = if opts.b.is_empty() { vec!["1".to_string()] } else { opts.b.clone() };
    let bsets = b_texts
        .iter()
        .map(|t| IndexSet::parse(t).map_err(|e| Failure::Flag(format!("--B: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let x = match (opts.x, &opts.choose_x) {
        (Some(x), _) => XChoice::Fixed(x),
        (None, Some(s)) => XChoice::Strategy(
            combstruct::Strategy::from_str(s).map_err(|_| Failure::Flag(format!("unknown --choose-x strategy {s:?}")))?,
        ),
        (None, None) => XChoice::Strategy(combstruct::Strategy::ExactMean),
    };
    let theta = parse_number("theta", &opts.theta)?;
    let kappa = parse_number("kappa", &opts.kappa)?;
    let moment = match &opts.r {
        Some(t) => Some(combstruct::moments::MomentSpec::parse(t).map_err(|e| Failure::Flag(format!("--r: {e}")))?),
        None => None,
    };
    let vector = match &opts.vector {
        Some(t) => Some(parse_vector(t, ns[0])?),
        None => None,
    };
    let spec = if command.uses_spec() { Some(load_spec(&opts.spec)?) } else { None };
    if opts.points < 2 {
        return Err(Failure::Flag("--points must be at least 2".into()));
    }
    let ctx = Ctx {
        spec,
        ns,
        bsets,
        x,
        strategy_given: opts.choose_x.is_some(),
        theta,
        kappa,
        seed: opts.seed,
        samples: opts.samples,
        moment,
        vector,
        points: opts.points,
        summary_only: opts.summary_only,
    };
    ctx.check_domain()?;
    Ok(ctx)
}

fn params_line(command: Command, opts: &Opts, ctx: &Ctx) -> Vec<(String, String)> {
    let mut p = vec![("n".to_string(), ctx.ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","))];
    let mut add = |k: &str, v: String| p.push((k.to_string(), v));
    match command {
        Command::Tv | Command::Heuristic => {
            let b: Vec<String> = ctx.bsets.iter().map(|b| format!("{{{b}}}")).collect();
            add("B", b.join(";"));
        }
        _ => {}
    }
    if command.uses_spec() {
        add("x", ctx.x.to_string());
        add("theta", ctx.theta.to_string());
    }
    match command {
        Command::Esf => add("kappa", ctx.kappa.to_string()),
        Command::Sample | Command::Limit | Command::Verify => {
            add("seed", ctx.seed.to_string());
            add("samples", ctx.samples_for(command.name()).to_string());
        }
        _ => {}
    }
    if let Some(r) = &opts.r {
        add("r", r.clone());
    }
    if let Some(v) = &ctx.vector {
        add("vector", v.sparse());
    }
    if command == Command::Limit {
        add("points", ctx.points.to_string());
    }
    p
}

fn spec_header(spec: &StructureSpec) -> (serde_json::Value, String) {
    let value = spec.to_json_value();
    let digest = Sha256::digest(value.to_string().as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    (value, hex)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("CS_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| Failure::Flag(format!("CS_THREADS must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Flag(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(String, bool), Failure> {
    configure_threads()?;
    let ctx = resolve(cli.command, &cli.opts)?;
    let (tables, ok) = match cli.command {
        Command::Tv => (commands::tv(&ctx)?, true),
        Command::ProbT => (commands::prob_t(&ctx)?, true),
        Command::Pofn => (commands::pofn(&ctx)?, true),
        Command::Moments => (commands::moments(&ctx)?, true),
        Command::Sample => (commands::sample(&ctx)?, true),
        Command::ChooseX => (commands::choose_x(&ctx)?, true),
        Command::Limit => (commands::limit(&ctx)?, true),
        Command::Esf => (commands::esf(&ctx)?, true),
        Command::Heuristic => (commands::heuristic(&ctx)?, true),
        Command::Verify => commands::verify(&ctx)?,
    };
    let report = Report {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION"),
        spec: ctx.spec.as_ref().map(spec_header),
        params: params_line(cli.command, &cli.opts, &ctx),
        tables,
    };
    let text = match cli.opts.format {
        Format::Tsv => render_tsv(&report, cli.opts.precision.map_or(TSV_DIGITS, usize::from)),
        Format::Json => render_json(&report, cli.opts.precision.map_or(JSON_DIGITS, usize::from)),
    };
    Ok((text, ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Flag(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
