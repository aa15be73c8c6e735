//! Command-line front end.
//!
//! Data goes to `--out` or standard output; human-readable notes go to
//! standard error. Exit codes: 0 success, 1 verification or certificate
//! failure, 2 configuration error, 3 data-dependent shortfall (insufficient
//! cluster, exhausted construction).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::io;
use crate::modulus::{closed_form_curve, empirical_curve, CurveSpace, Method, ModulusCurve};
use crate::sequences::{
    baseline_extract, riesz_seed, shifted_basis_seed, theorem1_extract, theorem3_construct,
    unit_basis_seed, ConstructionStatus, DEFAULT_KAPPA,
};
use crate::spaces::{LpSpace, Vector};
use crate::verify::{self, VerificationReport, SUMMARY_HEADER};

#[derive(Debug, Parser)]
#[command(name = "uconvex", version, about = "Moduli of convexity and separated sequences in l^p_d")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base RNG seed.
    #[arg(long, global = true, env = "UCONVEX_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub parallelism: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedKind {
    Basis,
    Shifted,
    Riesz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractMode {
    /// Window width from the modulus of convexity; pair values certified above `1 + δ(2ε/3)`.
    Modulus,
    /// Fixed window width `--tau`; pair values certified above `1 - tau`.
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatementArg {
    UnitFunctional,
    KadecKlee,
    Contraction,
    Modulus,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample δ(ε) on a grid.
    Modulus(ModulusArgs),
    /// Build a separated sequence by the Ramsey/greedy construction.
    Construct(ConstructArgs),
    /// Extract a cluster whose pairwise differences stay far from x.
    Extract(ExtractArgs),
    /// Randomized checks of the ε-δ statements.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ModulusArgs {
    /// Exponent p > 1.
    #[arg(long)]
    pub p: f64,
    /// Dimension; required for the empirical method.
    #[arg(long)]
    pub d: Option<usize>,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long, default_value = "0.1:2:20")]
    pub eps: String,
    /// clarkson, hanner or empirical; defaults to the closed form for p.
    #[arg(long)]
    pub method: Option<String>,
    /// Random candidate pairs per ε for the empirical method.
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Exponent p > 1.
    #[arg(long)]
    pub p: f64,
    /// Dimension.
    #[arg(long)]
    pub d: usize,
    /// Seed sequence.
    #[arg(long, value_enum, default_value = "shifted")]
    pub sequence: SeedKind,
    /// Seed length; defaults to the largest that fits.
    #[arg(long)]
    pub n: Option<usize>,
    /// Riesz seed slack: vectors are `(1 - eta)`-separated.
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Riesz seed random candidates per vector.
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub seed_args: SeedArgs,
    #[arg(long, default_value_t = 1000)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub seed_args: SeedArgs,
    #[arg(long, value_enum, default_value = "modulus")]
    pub mode: ExtractMode,
    /// Sequence CSV, one vector per row; replaces `--sequence`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use the standard basis vector e_i as x.
    #[arg(long, default_value_t = 0, conflicts_with = "x")]
    pub x_index: usize,
    /// Explicit comma-separated coordinates of x.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Separation constant; defaults to the measured separation.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Window width as a fraction of δ(2ε/3).
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Baseline window width.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Statements to check; all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub statement: Vec<StatementArg>,
    /// Exponents.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,3")]
    pub p: Vec<f64>,
    /// Dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2,8")]
    pub d: Vec<usize>,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long, default_value = "0.5,1,1.9")]
    pub eps: String,
    /// Kept trials per cell.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Contraction ranks.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub rank: Vec<usize>,
    /// Check a stored curve (CSV or JSON) instead of the sampled statements.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Modulus(a) => cmd_modulus(&cli.common, a),
        Command::Construct(a) => cmd_construct(&cli.common, a),
        Command::Extract(a) => cmd_extract(&cli.common, a),
        Command::Verify(a) => cmd_verify(&cli.common, a),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Grid syntax or a comma-separated list.
fn parse_eps(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        return io::parse_grid(spec);
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("eps list `{spec}`: `{s}` is not a number")))
        })
        .collect()
}

fn cmd_modulus(common: &Common, a: &ModulusArgs) -> Result<i32> {
    let grid = parse_eps(&a.eps)?;
    let method = match &a.method {
        Some(m) => m.parse()?,
        None if a.p >= 2.0 => Method::Clarkson,
        None => Method::Hanner,
    };
    let curve = match method {
        Method::Empirical => {
            let d = a.d.ok_or_else(|| Error::Config("the empirical method needs --d".into()))?;
            let space = LpSpace::new(a.p, d)?;
            let curve = empirical_curve(&space, &grid, a.budget, common.seed)?;
            for pt in curve.points() {
                pt.check_witness(&space)?;
            }
            curve
        }
        m => {
            LpSpace::new(a.p, 1)?;
            closed_form_curve(a.p, m, &grid)?
        }
    };
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => io::curve_to_csv(&curve),
        Format::Json => io::to_json(&curve)?,
    };
    emit(common.out.as_deref(), &text)?;
    Ok(0)
}

fn build_seed(a: &SeedArgs, space: &LpSpace, seed: u64) -> Result<(Vec<Vector>, String)> {
    let d = space.dim();
    match a.sequence {
        SeedKind::Basis => {
            let n = a.n.unwrap_or(d);
            Ok((unit_basis_seed(space, n)?, format!("basis n={n}")))
        }
        SeedKind::Shifted => {
            let n = a.n.unwrap_or(d.saturating_sub(1));
            if n == 0 {
                return Err(Error::Config("the shifted seed needs d >= 2".into()));
            }
            Ok((shifted_basis_seed(space, n)?, format!("shifted n={n}")))
        }
        SeedKind::Riesz => {
            let n = a.n.unwrap_or(d);
            let (v, cert) = riesz_seed(space, n, a.eta, a.budget, seed)?;
            if v.len() < n {
                eprintln!("riesz seed stopped at {} of {n} vectors", v.len());
            }
            if !cert.pass {
                return Err(Error::Certificate("riesz seed failed its own certificate".into()));
            }
            Ok((v, format!("riesz n={n} eta={} budget={} seed={seed}", a.eta, a.budget)))
        }
    }
}

fn cmd_construct(common: &Common, a: &ConstructArgs) -> Result<i32> {
    let s = &a.seed_args;
    let space = LpSpace::new(s.p, s.d)?;
    let (seed, label) = build_seed(s, &space, common.seed)?;
    let trace = theorem3_construct(&space, &seed, &label, a.max_len)?;
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => io::to_json(&trace)?,
        Format::Csv => io::sequence_to_csv(&trace.output),
    };
    emit(common.out.as_deref(), &text)?;
    let sep = trace
        .final_certificate
        .min_pairwise
        .map(io::fmt_f64)
        .unwrap_or_else(|| "none".into());
    eprintln!(
        "branch={} outputs={} separation={} target={} status={}",
        serde_json::to_value(trace.branch)?.as_str().unwrap_or_default(),
        trace.output.len(),
        sep,
        io::fmt_f64(trace.target),
        serde_json::to_value(trace.status)?.as_str().unwrap_or_default(),
    );
    Ok(match trace.status {
        ConstructionStatus::Completed => 0,
        ConstructionStatus::Exhausted => 3,
    })
}

fn cmd_extract(common: &Common, a: &ExtractArgs) -> Result<i32> {
    let s = &a.seed_args;
    let space = LpSpace::new(s.p, s.d)?;
    let seq = match &a.input {
        Some(path) => io::sequence_from_csv(&std::fs::read_to_string(path)?)?,
        None => build_seed(s, &space, common.seed)?.0,
    };
    let x = match &a.x {
        Some(coords) => io::sequence_from_csv(coords)?.remove(0),
        None => {
            if a.x_index >= space.dim() {
                return Err(Error::Config(format!("--x-index {} is not below d = {}", a.x_index, space.dim())));
            }
            Vector::basis(space.dim(), a.x_index)
        }
    };
    let result = match a.mode {
        ExtractMode::Modulus => {
            let eps = match a.eps {
                Some(e) => e,
                None => crate::sequences::separation(&space, &seq)?.min(2.0),
            };
            theorem1_extract(&space, &seq, &x, eps, a.kappa).map(|r| {
                eprintln!(
                    "selected={} pair_min={} guaranteed={}",
                    r.selected.len(),
                    io::fmt_f64(r.pair_min),
                    io::fmt_f64(r.guaranteed)
                );
                io::to_json(&r)
            })
        }
        ExtractMode::Baseline => baseline_extract(&space, &seq, &x, a.tau).map(|r| {
            eprintln!(
                "selected={} pair_min={} certified={}",
                r.selected.len(),
                io::fmt_f64(r.pair_min),
                io::fmt_f64(r.certified)
            );
            io::to_json(&r)
        }),
    };
    match result {
        Ok(text) => {
            emit(common.out.as_deref(), &text?)?;
            Ok(0)
        }
        Err(Error::InsufficientCluster(diag)) => {
            eprintln!("insufficient cluster: {diag}");
            emit(common.out.as_deref(), &io::to_json(&*diag)?)?;
            Ok(3)
        }
        Err(e) => Err(e),
    }
}

fn read_curve(path: &Path, p: Option<f64>) -> Result<ModulusCurve> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return io::curve_from_json(&text);
    }
    let p = p.ok_or_else(|| Error::Config("a CSV curve needs a single --p".into()))?;
    io::curve_from_csv(&text, CurveSpace { p, dim: None })
}

fn cmd_verify(common: &Common, a: &VerifyArgs) -> Result<i32> {
    if a.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let mut reports: Vec<VerificationReport> = Vec::new();
    if let Some(path) = &a.curve {
        let p = (a.p.len() == 1).then(|| a.p[0]);
        reports.push(verify::check_modulus_properties(&read_curve(path, p)?)?);
    } else {
        let all = [
            StatementArg::UnitFunctional,
            StatementArg::KadecKlee,
            StatementArg::Contraction,
            StatementArg::Modulus,
        ];
        let statements: &[StatementArg] = if a.statement.is_empty() { &all } else { &a.statement };
        let eps_list = parse_eps(&a.eps)?;
        let mut cell = 0u64;
        for st in statements {
            if *st == StatementArg::Modulus {
                let grid = io::parse_grid("0.02:2:100")?;
                for &p in &a.p {
                    let method = if p >= 2.0 { Method::Clarkson } else { Method::Hanner };
                    LpSpace::new(p, 1)?;
                    reports.push(verify::check_modulus_properties(&closed_form_curve(p, method, &grid)?)?);
                }
                continue;
            }
            for &p in &a.p {
                for &d in &a.d {
                    let space = LpSpace::new(p, d)?;
                    for &eps in &eps_list {
                        let ranks: &[usize] = if *st == StatementArg::Contraction { &a.rank } else { &[1] };
                        for &k in ranks {
                            let seed = common.seed.wrapping_add(cell);
                            cell += 1;
                            let rep = match st {
                                StatementArg::UnitFunctional => verify::check_lemma23(&space, eps, a.trials, seed)?,
                                StatementArg::KadecKlee => verify::check_thm2_condition3(&space, eps, a.trials, seed)?,
                                StatementArg::Contraction => verify::check_remark45(&space, eps, a.trials, k, seed)?,
                                StatementArg::Modulus => unreachable!(),
                            };
                            reports.push(rep);
                        }
                    }
                }
            }
        }
    }

    let mut summary = format!("{SUMMARY_HEADER}\n");
    for r in &reports {
        summary.push_str(&r.summary_line());
        summary.push('\n');
    }
    let format = common.format.unwrap_or(Format::Csv);
    match (format, common.out.as_deref()) {
        (Format::Csv, out) => emit(out, &summary)?,
        (Format::Json, Some(out)) => {
            emit(Some(out), &io::to_json(&reports)?)?;
            print!("{summary}");
        }
        (Format::Json, None) => {
            emit(None, &io::to_json(&reports)?)?;
            eprint!("{summary}");
        }
    }

    let violations: usize = reports.iter().map(|r| r.violations.len()).sum();
    let starved: Vec<&VerificationReport> = reports.iter().filter(|r| r.kept == 0).collect();
    for r in &starved {
        eprintln!("no trial satisfied the hypotheses: {}", r.summary_line());
    }
    if violations > 0 {
        eprintln!("{violations} violation(s) found");
    }
    Ok(if violations > 0 || !starved.is_empty() { 1 } else { 0 })
}

