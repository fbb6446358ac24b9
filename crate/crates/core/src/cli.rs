//! Command-line interface: sample | ustat | variance | estimate | compare | simulate.
//!
//! Exit codes: 0 success, 1 usage, 2 data/validation errors, 3 numeric or
//! degeneracy errors. Results go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::combinatorics::binom_exact;
use crate::error::Error;
use crate::fast::u_fast;
use crate::inference::{compare_networks, one_sided_p, statistic_report, StatisticId};
use crate::kernels::resolve_kernel;
use crate::matrix::{load_matrix, save_matrix, MatrixFormat};
use crate::models::ModelJson;
use crate::sim::{run_experiment, ExperimentConfig};
use crate::ustat::{u_naive_opts, UStatOptions};
use crate::varest::{
    algorithm_a_variance, variance_estimate, AlgorithmAOptions, RhoPolicy, VarMethod,
};
use crate::Result;

/// Default seed: runs are reproducible unless the user asks otherwise.
pub const DEFAULT_SEED: u64 = 42;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NETUSTAT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "netustat",
    version,
    about = "U-statistics and studentized inference on bipartite networks",
    after_help = "Thread cap: --threads wins over the NETUSTAT_THREADS environment \
                  variable; the default is the number of logical cores. The simulate \
                  benchmark always times on a single thread."
)]
struct Cli {
    /// Worker threads (default: logical cores; env NETUSTAT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit machine-readable JSON instead of the human table.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a network from a model description and write it as CSV/TSV.
    Sample(SampleArgs),
    /// Evaluate a U-statistic on a matrix.
    Ustat(UstatArgs),
    /// Estimate the asymptotic variance of a U-statistic.
    Variance(VarianceArgs),
    /// Estimate a network statistic with confidence interval and test.
    Estimate(EstimateArgs),
    /// Compare a statistic across two networks.
    Compare(CompareArgs),
    /// Run a simulation study from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Model description: a JSON file path or an inline JSON document.
    #[arg(long)]
    model: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file; format follows the extension (.tsv for tab-separated).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct UstatArgs {
    /// Matrix file (CSV/TSV by extension).
    #[arg(long)]
    matrix: PathBuf,
    /// Built-in kernel name or a .json kernel document.
    #[arg(long)]
    kernel: String,
    /// Use the whole-matrix fast path (supported kernels only).
    #[arg(long)]
    fast: bool,
    /// Bypass the enumeration-size guard.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Loo,
    #[value(name = "algoA", alias = "algo-a")]
    AlgoA,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    kernel: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
    method: MethodArg,
    /// Fixed rho in (0,1); defaults to the empirical m/(m+n).
    #[arg(long)]
    rho: Option<f64>,
    /// Pair budget for the empirical-covariance method.
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// One of: f2, g2, d, motif6, motif14.
    #[arg(long)]
    stat: String,
    /// Null value for a studentized test.
    #[arg(long)]
    null: Option<f64>,
    /// Significance level of the confidence interval.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    rho: Option<f64>,
    /// One-sided (upper tail) p-value instead of the two-sided default.
    #[arg(long)]
    one_sided: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    matrix_a: PathBuf,
    #[arg(long)]
    matrix_b: PathBuf,
    #[arg(long)]
    stat: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
}

fn rho_policy(rho: Option<f64>) -> RhoPolicy {
    match rho {
        Some(r) => RhoPolicy::Fixed(r),
        None => RhoPolicy::Empirical,
    }
}

fn print_report(report: &crate::inference::EstimateReport, as_json: bool) -> Result<()> {
    if as_json {
        let text = serde_json::to_string_pretty(report)
            .map_err(|e| Error::Config(format!("cannot serialize report: {e}")))?;
        println!("{text}");
        return Ok(());
    }
    println!("statistic   {}", report.statistic_id);
    println!("estimate    {}", report.estimate);
    println!("variance    {}", report.variance);
    println!(
        "std_error   {}",
        (report.variance / report.n_total as f64).sqrt()
    );
    println!(
        "ci          [{}, {}]  (level {})",
        report.ci_lo,
        report.ci_hi,
        1.0 - report.alpha
    );
    if let Some(z) = report.z {
        println!("z           {z}");
    }
    if let Some(p) = report.p_value {
        println!("p_value     {p}");
    }
    println!("degenerate  {}", report.degenerate);
    Ok(())
}

fn cmd_sample(args: &SampleArgs, as_json: bool) -> Result<()> {
    let text = if std::path::Path::new(&args.model).exists() {
        std::fs::read_to_string(&args.model).map_err(|source| Error::Io {
            path: args.model.clone(),
            source,
        })?
    } else {
        args.model.clone()
    };
    let model = ModelJson::from_json(&text)?.build()?;
    let sample = crate::models::sample(&model, args.m, args.n, args.seed)?;
    let format = MatrixFormat::from_path(&args.out);
    save_matrix(&sample.matrix, &args.out, format)?;
    if as_json {
        println!(
            "{}",
            json!({
                "path": args.out.display().to_string(),
                "m": args.m,
                "n": args.n,
                "seed": args.seed,
                "is_binary": sample.matrix.is_binary(),
                "model": model.description,
            })
        );
    } else {
        println!(
            "wrote {}x{} matrix ({}) to {}",
            args.m,
            args.n,
            model.description,
            args.out.display()
        );
    }
    Ok(())
}

fn cmd_ustat(args: &UstatArgs, as_json: bool) -> Result<()> {
    let y = load_matrix(&args.matrix, MatrixFormat::from_path(&args.matrix))?;
    let kernel = resolve_kernel(&args.kernel)?;
    let total_terms = binom_exact(y.m() as u64, kernel.p() as u64)?
        * binom_exact(y.n() as u64, kernel.q() as u64)?;
    if !args.fast && !args.force {
        // Surface the work estimate before a potentially huge enumeration.
        eprintln!("enumerating {total_terms} submatrices");
    }
    let start = Instant::now();
    let value = if args.fast {
        u_fast(&y, kernel.id())?
    } else {
        u_naive_opts(&y, &kernel, UStatOptions { force: args.force })?.value
    };
    let seconds = start.elapsed().as_secs_f64();
    if as_json {
        println!(
            "{}",
            json!({
                "kernel": kernel.id(),
                "value": value,
                "total_terms": total_terms.to_string(),
                "seconds": seconds,
                "fast": args.fast,
            })
        );
    } else {
        println!("kernel       {}", kernel.id());
        println!("value        {value}");
        println!("total_terms  {total_terms}");
        println!("seconds      {seconds:.6}");
    }
    Ok(())
}

fn cmd_variance(args: &VarianceArgs, as_json: bool) -> Result<()> {
    let y = load_matrix(&args.matrix, MatrixFormat::from_path(&args.matrix))?;
    let kernel = resolve_kernel(&args.kernel)?;
    let policy = rho_policy(args.rho);
    let est = match args.method {
        MethodArg::Direct => variance_estimate(&y, &kernel, policy, VarMethod::Direct)?,
        MethodArg::Loo => variance_estimate(&y, &kernel, policy, VarMethod::LeaveOneOut)?,
        MethodArg::AlgoA => algorithm_a_variance(
            &y,
            &kernel,
            policy,
            AlgorithmAOptions {
                budget: args.budget,
                seed: args.seed,
            },
        )?,
    };
    if as_json {
        println!(
            "{}",
            json!({
                "kernel": kernel.id(),
                "v10": est.v10,
                "v01": est.v01,
                "V": est.v,
                "rho": est.rho,
                "method": est.method.as_str(),
                "degenerate": est.degenerate,
            })
        );
    } else {
        println!("kernel      {}", kernel.id());
        println!("v10         {}", est.v10);
        println!("v01         {}", est.v01);
        println!("V           {}", est.v);
        println!("rho         {}", est.rho);
        println!("method      {}", est.method.as_str());
        println!("degenerate  {}", est.degenerate);
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs, as_json: bool) -> Result<()> {
    let y = load_matrix(&args.matrix, MatrixFormat::from_path(&args.matrix))?;
    let stat = StatisticId::parse(&args.stat)?;
    let mut report = statistic_report(&y, stat, rho_policy(args.rho), args.alpha, args.null)?;
    if args.one_sided {
        if let Some(z) = report.z {
            report.p_value = Some(one_sided_p(z));
            report
                .metadata
                .insert("p_value_side".into(), json!("one_sided_upper"));
        }
    }
    print_report(&report, as_json)
}

fn cmd_compare(args: &CompareArgs, as_json: bool) -> Result<()> {
    let ya = load_matrix(&args.matrix_a, MatrixFormat::from_path(&args.matrix_a))?;
    let yb = load_matrix(&args.matrix_b, MatrixFormat::from_path(&args.matrix_b))?;
    let stat = StatisticId::parse(&args.stat)?;
    let report = compare_networks(&ya, &yb, stat, rho_policy(args.rho), args.alpha)?;
    print_report(&report, as_json)
}

fn cmd_simulate(args: &SimulateArgs, as_json: bool) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let summary = run_experiment(&config)?;
    if as_json {
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
        println!("{text}");
    } else {
        println!(
            "experiment {} on statistic {} finished: {} cells, output in {}",
            summary.experiment,
            summary.statistic,
            summary.cells.len(),
            config.output_dir.display()
        );
        for cell in &summary.cells {
            match &cell.skipped {
                Some(reason) => println!("  {}: skipped ({reason})", cell.cell),
                None => println!(
                    "  {}: {} replicates, {} degenerate",
                    cell.cell, cell.replicates, cell.degenerate_count
                ),
            }
        }
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(t) = threads.or(from_env) {
        // Ignore the error when a global pool already exists (repeated
        // invocations inside one process, e.g. from tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}

/// Parse and run; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    configure_threads(cli.threads);
    let result = match &cli.command {
        Command::Sample(args) => cmd_sample(args, cli.json),
        Command::Ustat(args) => cmd_ustat(args, cli.json),
        Command::Variance(args) => cmd_variance(args, cli.json),
        Command::Estimate(args) => cmd_estimate(args, cli.json),
        Command::Compare(args) => cmd_compare(args, cli.json),
        Command::Simulate(args) => cmd_simulate(args, cli.json),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
