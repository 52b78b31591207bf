//! `maxdcor`: independence testing from the command line.
//!
//! Three subcommands: `stat` (compute the aggregate statistic of two CSV
//! samples), `test` (statistic plus p-value, permutation or chi-square),
//! and `power` (Monte-Carlo power study from a preset or a config file).
//!
//! Determinism contract: with identical inputs, flags, and seed, stdout and
//! every output file are byte-identical regardless of `--threads`. Progress
//! and the run record (which includes wall-clock time) go to stderr only.
//!
//! Exit codes: 0 success; 2 usage, parse, or shape errors; 3 data that
//! violates the statistical preconditions (degenerate columns).

mod config;
mod csvio;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use maxdcor::power::presets;
use maxdcor::{
    chisquare_test, dcor_marginal_grid, max_marginal, permutation_test_with, study_point,
    ColumnPolicy, DataMatrix, Error as CoreError, Method, PermutationConfig, PowerPoint,
    PvalueMode, StudyConfig, TestKind, TestOutcome,
};

use csvio::fmt_f64;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "maxdcor", version, about = "High-dimensional independence testing")]
struct Cli {
    /// Cap the worker thread count (overrides MAXDCOR_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the aggregate statistic of a paired sample.
    Stat(StatArgs),
    /// Test independence and report a p-value.
    Test(TestArgs),
    /// Run a Monte-Carlo power study.
    Power(PowerArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Max,
    Avg,
    Full,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Max => Method::Max,
            MethodArg::Avg => Method::Avg,
            MethodArg::Full => Method::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Chisquare,
    Permutation,
}

#[derive(Args)]
struct StatArgs {
    /// CSV file with the X sample (rows = observations).
    x_file: PathBuf,
    /// CSV file with the Y sample, paired row-wise with X.
    y_file: PathBuf,
    /// Aggregate statistic.
    #[arg(long, value_enum, default_value = "max")]
    method: MethodArg,
    /// Write the full p x q marginal grid to this CSV path.
    #[arg(long, value_name = "PATH")]
    grid: Option<PathBuf>,
    /// Exclude constant columns instead of erroring.
    #[arg(long)]
    permissive_columns: bool,
}

#[derive(Args)]
struct TestArgs {
    x_file: PathBuf,
    y_file: PathBuf,
    #[arg(long, value_enum, default_value = "max")]
    method: MethodArg,
    /// P-value machinery.
    #[arg(long = "test", value_enum, default_value = "chisquare")]
    test_kind: TestArg,
    /// Permutation replicate count r.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    /// Seed for the permutation streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decision level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Report the raw ratio #(replicate > observed)/r instead of the
    /// add-one form.
    #[arg(long)]
    raw_pvalue: bool,
    #[arg(long)]
    permissive_columns: bool,
}

#[derive(Args)]
struct PowerArgs {
    /// Named preset (see `--list-presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Study configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Print the available presets and exit.
    #[arg(long)]
    list_presets: bool,
    /// Output CSV path.
    #[arg(long, default_value = "power_results.csv")]
    out: PathBuf,
    /// Master seed; every trial seed derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("MAXDCOR_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("error: thread cap must be at least 1");
            return ExitCode::from(2);
        }
        // Thread count never changes results; it only caps parallelism.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }

    let started = Instant::now();
    let outcome = match &cli.command {
        Command::Stat(args) => run_stat(args),
        Command::Test(args) => run_test(args),
        Command::Power(args) => run_power(args),
    };

    match outcome {
        Ok(record) => {
            eprintln!(
                "run: {record} version={VERSION} elapsed={:.3}s",
                started.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::DegenerateSample(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csvio::CsvError> for CliError {
    fn from(e: csvio::CsvError) -> Self {
        usage_error(e.to_string())
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        usage_error(format!("config: {e}"))
    }
}

fn policy(permissive: bool) -> ColumnPolicy {
    if permissive {
        ColumnPolicy::Permissive
    } else {
        ColumnPolicy::Strict
    }
}

fn load_pair(x_file: &Path, y_file: &Path) -> Result<(DataMatrix, DataMatrix), CliError> {
    let x = csvio::read_matrix(x_file)?;
    let y = csvio::read_matrix(y_file)?;
    if x.n() != y.n() {
        return Err(usage_error(format!(
            "shape mismatch: {} has {} rows, {} has {} rows",
            x_file.display(),
            x.n(),
            y_file.display(),
            y.n()
        )));
    }
    if x.n() < 4 {
        return Err(usage_error(format!(
            "sample too small: {} rows; the unbiased statistic requires n >= 4",
            x.n()
        )));
    }
    Ok((x, y))
}

fn run_stat(args: &StatArgs) -> Result<String, CliError> {
    let (x, y) = load_pair(&args.x_file, &args.y_file)?;
    let method: Method = args.method.into();
    let pol = policy(args.permissive_columns);

    let mut fields: Vec<(&str, String)> = vec![
        ("command", json_str("stat")),
        ("method", json_str(method.as_str())),
        ("n", x.n().to_string()),
        ("p", x.d().to_string()),
        ("q", y.d().to_string()),
    ];

    match method {
        Method::Max | Method::Avg => {
            let grid = dcor_marginal_grid(&x, &y, pol)?;
            let agg = max_marginal(&grid)?;
            let statistic = match method {
                Method::Max => agg.max_value,
                Method::Avg => agg.avg_value,
                Method::Full => unreachable!(),
            };
            fields.push(("statistic", fmt_f64(statistic)));
            if method == Method::Max {
                // 1-based dimension indices in all user output.
                fields.push(("argmax_i", (agg.argmax.0 + 1).to_string()));
                fields.push(("argmax_j", (agg.argmax.1 + 1).to_string()));
            }
            if let Some(path) = &args.grid {
                csvio::write_grid(path, grid.values(), grid.p(), grid.q())
                    .map_err(|e| usage_error(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        Method::Full => {
            if args.grid.is_some() {
                return Err(usage_error(
                    "--grid applies to the marginal methods (max, avg) only",
                ));
            }
            let outcome = chisquare_test(&x, &y, Method::Full, pol)?;
            fields.push(("statistic", fmt_f64(outcome.statistic)));
        }
    }

    println!("{}", json_object(&fields));
    Ok(format!("stat method={method}"))
}

fn run_test(args: &TestArgs) -> Result<String, CliError> {
    let (x, y) = load_pair(&args.x_file, &args.y_file)?;
    let method: Method = args.method.into();
    let pol = policy(args.permissive_columns);
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage_error(format!(
            "alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }

    let outcome: TestOutcome = match args.test_kind {
        TestArg::Chisquare => {
            if args.raw_pvalue {
                return Err(usage_error("--raw-pvalue applies to permutation tests only"));
            }
            chisquare_test(&x, &y, method, pol)?
        }
        TestArg::Permutation => permutation_test_with(
            &x,
            &y,
            method,
            &PermutationConfig {
                replicates: args.permutations,
                seed: args.seed,
                pvalue_mode: if args.raw_pvalue {
                    PvalueMode::Raw
                } else {
                    PvalueMode::PlusOne
                },
                policy: pol,
            },
        )?,
    };

    let decision = if outcome.p_value < args.alpha {
        "reject"
    } else {
        "fail_to_reject"
    };
    let fields: Vec<(&str, String)> = vec![
        ("command", json_str("test")),
        ("method", json_str(outcome.method.as_str())),
        ("test", json_str(outcome.test_kind.as_str())),
        ("n", outcome.n.to_string()),
        ("p", outcome.p.to_string()),
        ("q", outcome.q.to_string()),
        ("statistic", fmt_f64(outcome.statistic)),
        ("p_value", fmt_f64(outcome.p_value)),
        ("alpha", fmt_f64(args.alpha)),
        ("decision", json_str(decision)),
        (
            "permutations",
            outcome
                .permutations_used
                .map_or("null".to_string(), |r| r.to_string()),
        ),
        (
            "seed",
            outcome.seed.map_or("null".to_string(), |s| s.to_string()),
        ),
        (
            "pvalue_mode",
            match outcome.test_kind {
                TestKind::Permutation => {
                    json_str(if args.raw_pvalue { "raw" } else { "plus_one" })
                }
                TestKind::ChiSquare => "null".to_string(),
            },
        ),
    ];
    println!("{}", json_object(&fields));
    Ok(format!("test method={method} kind={}", outcome.test_kind))
}

fn run_power(args: &PowerArgs) -> Result<String, CliError> {
    if args.list_presets {
        for name in presets::NAMES {
            println!("{name}");
        }
        return Ok("power list-presets".to_string());
    }

    let study: StudyConfig = match (&args.preset, &args.config) {
        (Some(name), None) => presets::by_name(name).ok_or_else(|| {
            usage_error(format!(
                "unknown preset {name:?}; available presets: {}",
                presets::NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => config::parse_study_config(path)?,
        (None, None) => {
            return Err(usage_error(
                "power requires either --preset NAME or --config PATH",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    study.validate().map_err(CliError::from)?;

    let total_points: usize = study
        .curves
        .iter()
        .map(|c| c.scenarios().map(|s| s.len()).unwrap_or(0))
        .sum();

    let mut rows = String::new();
    rows.push_str(
        "family,relationship,method,test_kind,n,p,q,d,alpha,replicates,power_hat,std_err,seed\n",
    );
    let mut rows_written = 0usize;
    let mut done = 0usize;

    // Points run one by one (each parallel inside); rows land in curve
    // order so identical runs produce identical bytes. The file is
    // rewritten after every point, so an interrupted run keeps its
    // finished points.
    for curve in &study.curves {
        for scenario in curve.scenarios()? {
            let points = study_point(
                scenario,
                &study.methods,
                &study.test_kinds,
                study.alpha,
                study.replicates,
                study.permutations,
                args.seed,
            )?;
            for point in &points {
                rows.push_str(&power_row(point, args.seed));
                rows_written += 1;
            }
            done += 1;
            eprintln!(
                "power: {done}/{total_points} {} {} n={} sweep={}",
                scenario.family,
                scenario.relationship,
                scenario.n,
                scenario.sweep_value()
            );
            std::fs::write(&args.out, &rows)
                .map_err(|e| usage_error(format!("cannot write {}: {e}", args.out.display())))?;
        }
    }

    let fields: Vec<(&str, String)> = vec![
        ("command", json_str("power")),
        ("study", json_str(&study.name)),
        ("rows", rows_written.to_string()),
        ("out", json_str(&args.out.display().to_string())),
    ];
    println!("{}", json_object(&fields));
    Ok(format!("power study={} rows={rows_written}", study.name))
}

fn power_row(point: &PowerPoint, seed: u64) -> String {
    let s = &point.scenario;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        s.family,
        s.relationship,
        point.method,
        point.test_kind,
        s.n,
        s.p,
        s.q,
        s.d,
        fmt_f64(point.alpha),
        point.replicates,
        fmt_f64(point.power_hat),
        fmt_f64(point.std_err),
        seed
    )
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_object(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("{}:{v}", json_str(k)))
        .collect();
    format!("{{{}}}", body.join(","))
}
