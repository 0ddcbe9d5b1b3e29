mod output;
mod source;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cksvar::companion::verify_assumptions_with_budget;
use cksvar::harness::{build_example, fixtures, limit_path, run_mc, ExpectedCase, Functional, McSpec, Params};
use cksvar::jsr::{jsr_bounds_with_budget, CompanionSet, DEFAULT_BUDGET, DEFAULT_DEPTH};
use cksvar::limit::DEFAULT_GRID;
use cksvar::linalg::{self, Vector};
use cksvar::model::{validate_dgp, CksvarModel};
use cksvar::simulate::{simulate, InnovationSpec, Init};
use cksvar::vecm::{classify_case, vecm_decompose, DEFAULT_RANK_TOL};
use cksvar::CksvarError;

use output::{emit, json_to_csv, write_atomic, Table};
use source::ModelSource;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Validation { kind: String, message: String },
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        CliError::Validation { kind: kind.to_string(), message: message.into() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Io(_) | CliError::Parse(_) => 1,
        }
    }

    /// One JSON object per failure, for scripts reading standard error.
    fn reason(&self) -> Value {
        match self {
            CliError::Io(m) => json!({"error": "io", "message": m}),
            CliError::Parse(m) => json!({"error": "parse", "message": m}),
            CliError::Validation { kind, message } => json!({"error": "validation", "kind": kind, "message": message}),
        }
    }
}

impl From<CksvarError> for CliError {
    fn from(e: CksvarError) -> Self {
        let kind = match &e {
            CksvarError::Parse(m) => return CliError::Parse(m.clone()),
            CksvarError::Dgp { check, .. } => check.clone(),
            CksvarError::Dimension(_) => "dimension".into(),
            CksvarError::InvalidParameter(_) => "invalid_parameter".into(),
            CksvarError::NotPositiveDefinite(_) => "not_positive_definite".into(),
            CksvarError::RankMismatch { .. } | CksvarError::RankDeficient => "rank".into(),
            CksvarError::WrongCase(_) => "wrong_case".into(),
            CksvarError::Assumption(_) => "assumption".into(),
            CksvarError::Coherence { .. } => "coherence".into(),
            CksvarError::NotInTrendSpace { .. } => "not_in_trend_space".into(),
            CksvarError::Discontinuous(_) => "discontinuous".into(),
            CksvarError::EmptySet => "empty_set".into(),
        };
        CliError::Validation { kind, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cksvar", version, about = "Censored and kinked structural VARs: classification, checks, simulation and limits")]
struct Cli {
    /// Random seed for every stochastic command
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (a directory for `mc`); standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; tables default to csv, reports to json
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the cointegration case of a model
    Classify {
        #[command(flatten)]
        source: ModelSource,
        /// Relative rank tolerance
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
    },
    /// Check the regularity assumptions that apply to a model
    Verify {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Product length for the joint spectral radius bounds
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Simulate a path
    Simulate {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = InitKind::Zeros)]
        init: InitKind,
        /// Direction ζ for diffuse initial values √n·ζ, comma separated
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<String>,
        /// Geometric moving-average coefficient for serially correlated innovations
        #[arg(long, allow_hyphen_values = true)]
        ma_rho: Option<f64>,
        #[arg(long, default_value_t = 50)]
        ma_len: usize,
    },
    /// Draw the limit process on a uniform grid
    Limit {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_enum, default_value_t = CaseArg::Auto)]
        case: CaseArg,
        /// Number of grid intervals
        #[arg(long, default_value_t = DEFAULT_GRID)]
        m: usize,
        /// Scaled initial value (y, x), comma separated
        #[arg(long, allow_hyphen_values = true)]
        z0: Option<String>,
    },
    /// Compare scaled sample paths with the limit process by Monte Carlo
    Mc {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, default_value = "1000,4000")]
        n_list: String,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value = "terminal_value,path_sup,occupation_fraction_negative")]
        functionals: String,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Limit draws; ten times --reps when absent
        #[arg(long)]
        limit_reps: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        ks_tol: f64,
    },
    /// Bound the joint spectral radius of a matrix set
    Jsr {
        /// JSON file: a list of square matrices (lists of rows), or {"matrices": [...], "labels": [...]}
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// List the built-in examples with parameter defaults and ranges
    Examples {
        /// Print the model file of this example with default parameters instead
        #[arg(long)]
        dump: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitKind {
    Zeros,
    Diffuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    Auto,
    #[value(name = "i", alias = "1")]
    I,
    #[value(name = "ii", alias = "2")]
    Ii,
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| CliError::Parse(format!("{what}: cannot parse {v:?}"))))
        .collect()
}

fn report(cli: &Cli, v: &Value) -> Result<(), CliError> {
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(v).expect("json value serializes") + "\n",
        Format::Csv => json_to_csv(v),
    };
    emit(cli.out.as_deref(), &text)
}

fn table(cli: &Cli, t: &Table) -> Result<(), CliError> {
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => t.to_csv(),
        Format::Json => serde_json::to_string(&t.to_json()).expect("json value serializes") + "\n",
    };
    emit(cli.out.as_deref(), &text)
}

fn classify(cli: &Cli, model: &CksvarModel, tol: f64) -> Result<(), CliError> {
    let cls = classify_case(&vecm_decompose(model)?, tol)?;
    report(cli, &cls.to_json())
}

fn verify(cli: &Cli, model: &CksvarModel, tol: f64, depth: usize, budget: usize) -> Result<(), CliError> {
    let dgp = validate_dgp(model)?;
    if !dgp.ok() {
        let kind = if dgp.coherent { "DGP.3" } else { "DGP.2" };
        return Err(CliError::validation(kind, dgp.messages.join("; ")));
    }
    let rep = verify_assumptions_with_budget(model, tol, depth, budget);
    report(cli, &rep.to_json())?;
    if rep.all_ok() {
        return Ok(());
    }
    let mut reasons: Vec<String> =
        rep.case_specific.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    reasons.extend(rep.messages.iter().cloned());
    if rep.classification.is_none() {
        reasons.push("no supported cointegration case".into());
    }
    if rep.jsr.as_ref().is_some_and(|j| !j.certified_lt_one && j.lower < 1.0) {
        reasons.push("joint spectral radius not certified below one at this depth; a larger --depth may certify it".into());
    }
    Err(CliError::validation("assumption", reasons.join("; ")))
}

fn simulate_cmd(cli: &Cli, model: &CksvarModel, n: usize, init: InitKind, zeta: Option<&str>, ma: Option<(f64, usize)>) -> Result<(), CliError> {
    let init = match (init, zeta) {
        (InitKind::Zeros, None) => Init::Zeros,
        (InitKind::Zeros, Some(_)) => return Err(CliError::validation("usage", "--zeta needs --init diffuse")),
        (InitKind::Diffuse, Some(z)) => Init::Diffuse(Vector::from_vec(parse_list("zeta", z)?)),
        (InitKind::Diffuse, None) => return Err(CliError::validation("usage", "--init diffuse needs --zeta")),
    };
    let spec = match ma {
        None => InnovationSpec::iid(model.sigma.clone(), cli.seed),
        Some((rho, len)) => InnovationSpec::ma(model.sigma.clone(), InnovationSpec::geometric_weights(rho, len), cli.seed),
    };
    let path = simulate(model, n, &spec, &init)?;
    let p = model.p;
    let mut t = Table::new();
    t.push_index("t", (1..=n).map(|i| i as f64).collect());
    t.push("y", path.y.clone());
    t.push("y_plus", path.y_plus.clone());
    t.push("y_minus", path.y_minus.clone());
    for j in 0..p - 1 {
        t.push(format!("x_{}", j + 1), path.x.row(j).iter().copied().collect());
    }
    for j in 0..p {
        t.push(format!("u_{}", j + 1), path.innovations.row(j).iter().copied().collect());
    }
    table(cli, &t)
}

fn limit_cmd(cli: &Cli, model: &CksvarModel, case: CaseArg, m: usize, z0: Option<&str>) -> Result<(), CliError> {
    let z0 = z0.map(|s| parse_list::<f64>("z0", s)).transpose()?.map(Vector::from_vec);
    let expect = match case {
        CaseArg::Auto => None,
        CaseArg::I => Some(ExpectedCase::CaseI),
        CaseArg::Ii => Some(ExpectedCase::CaseIi),
    };
    let (_, lp) = limit_path(model, m, cli.seed, z0.as_ref(), expect)?;
    let mut t = Table::new();
    t.push("lambda", lp.lambda.clone());
    t.push("Y", lp.y.clone());
    for j in 0..lp.x.nrows() {
        t.push(format!("X_{}", j + 1), lp.x.row(j).iter().copied().collect());
    }
    table(cli, &t)
}

struct McArgs<'a> {
    n_list: &'a str,
    reps: usize,
    functionals: &'a str,
    grid: usize,
    limit_reps: Option<usize>,
    ks_tol: f64,
}

fn mc_cmd(cli: &Cli, model: CksvarModel, a: &McArgs) -> Result<(), CliError> {
    let n_list: Vec<usize> = parse_list("n-list", a.n_list)?;
    let functionals =
        a.functionals.split(',').map(|s| Functional::parse(s.trim())).collect::<cksvar::Result<Vec<_>>>()?;
    let mut spec = McSpec::new(model, n_list, a.reps, cli.seed);
    spec.functionals = functionals;
    spec.grid = a.grid;
    spec.ks_tol = a.ks_tol;
    if let Some(l) = a.limit_reps {
        spec.limit_reps = l;
    }
    let rep = run_mc(&spec)?;
    let mut v = serde_json::to_value(&rep).expect("report serializes");
    if let Value::Object(m) = &mut v {
        m.remove("model_samples");
        m.remove("limit_samples");
    }
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&v).expect("json value serializes") + "\n",
        Format::Csv => json_to_csv(&v),
    };
    match &cli.out {
        None => emit(None, &text)?,
        Some(dir) => {
            let ext = if cli.format == Some(Format::Csv) { "csv" } else { "json" };
            write_atomic(&dir.join(format!("report.{ext}")), &text)?;
            for f in &spec.functionals {
                let mut t = Table::new();
                t.push("model", rep.model_samples[f].clone());
                t.push("limit", rep.limit_samples[f].clone());
                write_atomic(&dir.join(format!("{}.csv", f.name())), &t.to_csv())?;
            }
        }
    }
    if rep.pass {
        Ok(())
    } else {
        let failed: Vec<String> = rep
            .ks
            .iter()
            .filter(|r| !r.pass && r.n == *spec.n_list.last().unwrap())
            .map(|r| format!("{} KS {:.4} >= {}", r.functional.name(), r.ks, r.tolerance))
            .collect();
        Err(CliError::validation("ks", failed.join("; ")))
    }
}

fn jsr_cmd(cli: &Cli, file: &Path, depth: usize, budget: usize) -> Result<(), CliError> {
    let text = fs::read_to_string(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    let (mats, labels) = match &v {
        Value::Array(_) => (v.clone(), None),
        Value::Object(o) => (
            o.get("matrices").cloned().ok_or_else(|| CliError::Parse("missing \"matrices\"".into()))?,
            o.get("labels").cloned(),
        ),
        _ => return Err(CliError::Parse("expected a list of matrices".into())),
    };
    let rows: Vec<Vec<Vec<f64>>> = serde_json::from_value(mats).map_err(|e| CliError::Parse(e.to_string()))?;
    let matrices = rows
        .iter()
        .map(|r| {
            let n = r.len();
            linalg::from_rows(r, n)
        })
        .collect::<cksvar::Result<Vec<_>>>()?;
    let set = match labels {
        None => CompanionSet::unlabeled(matrices)?,
        Some(l) => CompanionSet::new(matrices, serde_json::from_value(l).map_err(|e| CliError::Parse(e.to_string()))?)?,
    };
    let est = jsr_bounds_with_budget(&set, depth, budget)?;
    report(cli, &json!({"labels": set.labels, "estimate": est}))
}

fn examples_cmd(cli: &Cli, dump: Option<&str>) -> Result<(), CliError> {
    if let Some(name) = dump {
        let m = build_example(name, &Params::new())?;
        return emit(cli.out.as_deref(), &(m.to_json() + "\n"));
    }
    let all = fixtures();
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => report(cli, &serde_json::to_value(&all).expect("fixtures serialize")),
        Format::Csv => {
            let mut out = String::from("example,parameter,default,range\n");
            for fx in &all {
                for p in &fx.params {
                    out.push_str(&format!("{},{},{},\"{}\"\n", fx.name, p.name, output::num(p.default), p.range));
                }
            }
            emit(cli.out.as_deref(), &out)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Classify { source, tol } => classify(cli, &source.load()?, *tol),
        Command::Verify { source, tol, depth, budget } => verify(cli, &source.load()?, *tol, *depth, *budget),
        Command::Simulate { source, n, init, zeta, ma_rho, ma_len } => {
            simulate_cmd(cli, &source.load()?, *n, *init, zeta.as_deref(), ma_rho.map(|r| (r, *ma_len)))
        }
        Command::Limit { source, case, m, z0 } => limit_cmd(cli, &source.load()?, *case, *m, z0.as_deref()),
        Command::Mc { source, n_list, reps, functionals, grid, limit_reps, ks_tol } => mc_cmd(
            cli,
            source.load()?,
            &McArgs { n_list, reps: *reps, functionals, grid: *grid, limit_reps: *limit_reps, ks_tol: *ks_tol },
        ),
        Command::Jsr { file, depth, budget } => jsr_cmd(cli, file, *depth, *budget),
        Command::Examples { dump } => examples_cmd(cli, dump.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.reason());
            ExitCode::from(e.exit_code())
        }
    }
}
