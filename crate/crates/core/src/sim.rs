//! Simulation studies: Q-Q samples, coverage tables and timing benchmarks.
//!
//! Experiments are described by a JSON config and emit plot-ready CSV files
//! plus a `summary.json`. Replicates are seeded by counter-based substreams
//! keyed on (cell, replicate), so a fixed config yields byte-identical
//! output for any thread count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::inference::{normal_quantile, statistic_report, studentized, StatisticId};
use crate::kernels::builtin;
use crate::matrix::BipartiteMatrix;
use crate::models::{study_model, true_expectation, ModelJson, ModelSpec, StudyModel};
use crate::rng::{mix, substream, tag};
use crate::varest::{
    algorithm_a_variance, sample_variance, variance_estimate, AlgorithmAOptions, RhoPolicy,
    VarMethod,
};
use crate::Result;

/// Declarative description of one simulation study.
///
/// `alpha` is the confidence level of the intervals under study (e.g. 0.95).
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: serde_json::Value,
    pub statistic: String,
    pub n_list: Vec<usize>,
    pub rho_list: Vec<f64>,
    #[serde(default)]
    pub epsilon_list: Option<Vec<f64>>,
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub output_dir: PathBuf,
    #[serde(default = "default_truth_budget")]
    pub mc_truth_budget: usize,
    #[serde(default)]
    pub bench: BenchOptions,
}

fn default_seed() -> u64 {
    42
}

fn default_alpha() -> f64 {
    0.95
}

fn default_truth_budget() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Qq,
    Coverage,
    Bench,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BenchOptions {
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<String>,
    /// Largest N for the empirical-covariance baseline (A).
    #[serde(default = "default_a_cap")]
    pub algo_a_max_n: usize,
    /// Largest N for direct enumeration (B).
    #[serde(default = "default_b_cap")]
    pub algo_b_max_n: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Lift the per-algorithm caps.
    #[serde(default)]
    pub force: bool,
}

fn default_algorithms() -> Vec<String> {
    vec!["A".into(), "B".into(), "C".into()]
}

fn default_a_cap() -> usize {
    24
}

fn default_b_cap() -> usize {
    512
}

fn default_warmup() -> usize {
    3
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            algorithms: default_algorithms(),
            algo_a_max_n: default_a_cap(),
            algo_b_max_n: default_b_cap(),
            warmup: default_warmup(),
            force: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid experiment config: {e}")))?;
        if config.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(config.alpha > 0.0 && config.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0,1), got {}",
                config.alpha
            )));
        }
        for &rho in &config.rho_list {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::Config(format!("rho must lie in (0,1), got {rho}")));
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Normal-approximation band for an empirical frequency of target `alpha`
/// over `k` replicates: alpha ± z₀.₉₇₅·sqrt(alpha(1−alpha)/k).
pub fn binomial_band(k: usize, alpha: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let half = normal_quantile(0.975)? * (alpha * (1.0 - alpha) / k as f64).sqrt();
    Ok((alpha - half, alpha + half))
}

/// Kolmogorov–Smirnov statistic of a sample against the standard normal.
pub fn ks_statistic_normal(zs: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = zs.iter().copied().filter(|z| z.is_finite()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (k, z) in sorted.iter().enumerate() {
        let cdf = crate::inference::normal_cdf(*z);
        d = d.max((k as f64 + 1.0) / n - cdf);
        d = d.max(cdf - k as f64 / n);
    }
    d
}

/// What a single statistic evaluation produced.
#[derive(Debug, Clone, Copy)]
struct ReplicateOutcome {
    z: f64,
    covered: bool,
    degenerate: bool,
}

#[derive(Debug, Clone)]
enum SimStatistic {
    Named(StatisticId),
    Kernel(String),
    /// Harness calibration mode: the estimate is exactly normal around the
    /// truth with unit asymptotic variance.
    SyntheticNormal,
}

fn parse_statistic(s: &str) -> Result<SimStatistic> {
    if s == "synthetic_normal" {
        return Ok(SimStatistic::SyntheticNormal);
    }
    if let Ok(named) = StatisticId::parse(s) {
        return Ok(SimStatistic::Named(named));
    }
    if builtin(s).is_ok() {
        return Ok(SimStatistic::Kernel(s.to_string()));
    }
    Err(Error::Config(format!(
        "unknown statistic {s:?}; expected f2, g2, d, motif6, motif14, synthetic_normal \
         or a built-in kernel id"
    )))
}

/// One grid cell of a study.
#[derive(Debug, Clone, Copy)]
struct Cell {
    n: usize,
    rho: f64,
    epsilon: Option<f64>,
}

impl Cell {
    fn dims(&self) -> (usize, usize) {
        let m = ((self.rho * self.n as f64).floor() as usize).max(1);
        (m, self.n - m)
    }

    fn label(&self) -> String {
        let mut s = format!("N{}_rho{}", self.n, trim_float(self.rho));
        if let Some(e) = self.epsilon {
            let _ = write!(s, "_eps{}", trim_float(e));
        }
        s
    }

    fn key(&self) -> Vec<u64> {
        let mut k = vec![self.n as u64, self.rho.to_bits()];
        if let Some(e) = self.epsilon {
            k.push(e.to_bits());
        }
        k
    }
}

fn trim_float(v: f64) -> String {
    let mut s = format!("{v}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn cells_of(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    let eps_list: Vec<Option<f64>> = match &config.epsilon_list {
        Some(list) => list.iter().map(|&e| Some(e)).collect(),
        None => vec![None],
    };
    for &n in &config.n_list {
        for &rho in &config.rho_list {
            for &epsilon in &eps_list {
                out.push(Cell { n, rho, epsilon });
            }
        }
    }
    out
}

fn model_for_cell(config: &ExperimentConfig, cell: &Cell) -> Result<ModelSpec> {
    match cell.epsilon {
        Some(e) => {
            // An epsilon grid re-parameterizes the perturbed block family.
            let is_model_ii = config
                .model
                .get("which")
                .and_then(|w| w.as_str())
                .map(|w| w.eq_ignore_ascii_case("ii") || w == "2")
                .unwrap_or(false);
            if !is_model_ii {
                return Err(Error::Config(
                    "epsilon_list requires the paper model II".into(),
                ));
            }
            study_model(StudyModel::II { epsilon: e })
        }
        None => {
            let model_json: ModelJson = serde_json::from_value(config.model.clone())
                .map_err(|e| Error::Config(format!("invalid model in config: {e}")))?;
            model_json.build()
        }
    }
}

/// Ground truth of a statistic under a model, with the standard error of
/// the Monte Carlo fallback (0 for analytic values).
fn statistic_truth(
    model: &ModelSpec,
    statistic: &SimStatistic,
    mc_budget: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    match statistic {
        SimStatistic::SyntheticNormal => Ok((0.0, 0.0)),
        SimStatistic::Kernel(id) => {
            let h = builtin(id)?;
            let est = true_expectation(model, &h, mc_budget, mix(seed, &[tag::MC_EXPECTATION]))?;
            Ok((est.value, est.std_error))
        }
        SimStatistic::Named(named) => match named {
            StatisticId::Motif6 | StatisticId::Motif14 => {
                let h = builtin(if *named == StatisticId::Motif6 {
                    "h6"
                } else {
                    "h14"
                })?;
                let est =
                    true_expectation(model, &h, mc_budget, mix(seed, &[tag::MC_EXPECTATION]))?;
                Ok((est.value, est.std_error))
            }
            _ => {
                let key = match named {
                    StatisticId::F2 => "F2",
                    StatisticId::G2 => "G2",
                    _ => "d",
                };
                model
                    .analytic
                    .stats
                    .get(key)
                    .map(|&v| (v, 0.0))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "model {} supplies no analytic truth for {}",
                            model.description,
                            named.as_str()
                        ))
                    })
            }
        },
    }
}

fn evaluate_replicate(
    model: &ModelSpec,
    statistic: &SimStatistic,
    cell: &Cell,
    truth: f64,
    alpha_level: f64,
    rep_seed: u64,
) -> Result<ReplicateOutcome> {
    let (m, n_cols) = cell.dims();
    let significance = 1.0 - alpha_level;
    if let SimStatistic::SyntheticNormal = statistic {
        // Exact-normality injection: estimate = truth + z·sqrt(V/N), V = 1.
        let z: f64 = standard_normal(&mut substream(rep_seed, &[tag::REPLICATE]));
        let n_total = m + n_cols;
        let half = normal_quantile(1.0 - significance / 2.0)? / (n_total as f64).sqrt();
        let estimate = truth + z / (n_total as f64).sqrt();
        return Ok(ReplicateOutcome {
            z,
            covered: (estimate - truth).abs() <= half,
            degenerate: false,
        });
    }
    let y = crate::models::sample(model, m, n_cols, rep_seed)?.matrix;
    let report = match statistic {
        SimStatistic::Named(named) => {
            statistic_report(&y, *named, RhoPolicy::Empirical, significance, Some(truth))
        }
        SimStatistic::Kernel(id) => {
            studentized(&y, &builtin(id)?, truth, RhoPolicy::Empirical, significance)
        }
        SimStatistic::SyntheticNormal => unreachable!(),
    };
    match report {
        Ok(r) => Ok(ReplicateOutcome {
            z: r.z.unwrap_or(f64::NAN),
            covered: truth >= r.ci_lo && truth <= r.ci_hi,
            degenerate: r.degenerate,
        }),
        Err(Error::Degenerate(_)) => Ok(ReplicateOutcome {
            z: f64::NAN,
            covered: false,
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one value per replicate is all we need.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Execution summary written to `summary.json` and returned to callers.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub statistic: String,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub cell: String,
    pub replicates: usize,
    pub degenerate_count: usize,
    pub truth: Option<f64>,
    pub truth_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
}

/// Row of `coverage.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub n: usize,
    pub rho: f64,
    pub param: Option<f64>,
    pub covered_count: usize,
    pub replicates: usize,
    pub coverage: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub truth: f64,
    pub truth_std_error: f64,
    pub degenerate_count: usize,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run_cell_replicates(
    config: &ExperimentConfig,
    model: &ModelSpec,
    statistic: &SimStatistic,
    cell: &Cell,
    truth: f64,
) -> Result<Vec<ReplicateOutcome>> {
    let cell_key = cell.key();
    (0..config.replicates)
        .into_par_iter()
        .map(|k| {
            let mut key = vec![tag::REPLICATE];
            key.extend_from_slice(&cell_key);
            key.push(k as u64);
            let rep_seed = mix(config.seed, &key);
            evaluate_replicate(model, statistic, cell, truth, config.alpha, rep_seed)
        })
        .collect()
}

/// Q-Q study: studentized values per cell plus theoretical quantiles.
pub fn run_qq(config: &ExperimentConfig) -> Result<Summary> {
    let statistic = parse_statistic(&config.statistic)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
        path: config.output_dir.display().to_string(),
        source,
    })?;
    let mut cells_summary = Vec::new();
    for cell in cells_of(config) {
        let model = model_for_cell(config, &cell)?;
        let (truth, truth_se) =
            statistic_truth(&model, &statistic, config.mc_truth_budget, config.seed)?;
        let outcomes = run_cell_replicates(config, &model, &statistic, &cell, truth)?;
        let mut finite: Vec<(usize, f64)> = Vec::new();
        let mut degenerate = 0usize;
        for (idx, o) in outcomes.iter().enumerate() {
            if o.z.is_finite() {
                finite.push((idx, o.z));
            } else {
                degenerate += 1;
            }
        }
        finite.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let k_total = config.replicates as f64;
        let mut csv = String::from("replicate,z,theoretical_q\n");
        for (rank, (idx, z)) in finite.iter().enumerate() {
            let q = normal_quantile((rank as f64 + 0.5) / k_total)?;
            let _ = writeln!(csv, "{idx},{z},{q}");
        }
        for (idx, o) in outcomes.iter().enumerate() {
            if !o.z.is_finite() {
                let _ = writeln!(csv, "{idx},nan,nan");
            }
        }
        write_file(&config.output_dir, &format!("qq_{}.csv", cell.label()), &csv)?;
        let zs: Vec<f64> = finite.iter().map(|f| f.1).collect();
        cells_summary.push(CellSummary {
            cell: cell.label(),
            replicates: config.replicates,
            degenerate_count: degenerate,
            truth: Some(truth),
            truth_std_error: Some(truth_se),
            skipped: None,
            ks_statistic: (!zs.is_empty()).then(|| ks_statistic_normal(&zs)),
        });
    }
    finish(config, "qq", cells_summary)
}

/// Coverage study: empirical CI coverage per cell with the binomial band.
pub fn run_coverage(config: &ExperimentConfig) -> Result<Summary> {
    let statistic = parse_statistic(&config.statistic)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
        path: config.output_dir.display().to_string(),
        source,
    })?;
    let (band_lo, band_hi) = binomial_band(config.replicates, config.alpha)?;
    let mut rows: Vec<CoverageRow> = Vec::new();
    let mut cells_summary = Vec::new();
    for cell in cells_of(config) {
        let model = model_for_cell(config, &cell)?;
        let (truth, truth_se) =
            statistic_truth(&model, &statistic, config.mc_truth_budget, config.seed)?;
        let outcomes = run_cell_replicates(config, &model, &statistic, &cell, truth)?;
        let covered = outcomes.iter().filter(|o| o.covered).count();
        let degenerate = outcomes.iter().filter(|o| o.degenerate).count();
        rows.push(CoverageRow {
            n: cell.n,
            rho: cell.rho,
            param: cell.epsilon,
            covered_count: covered,
            replicates: config.replicates,
            coverage: covered as f64 / config.replicates as f64,
            band_lo,
            band_hi,
            truth,
            truth_std_error: truth_se,
            degenerate_count: degenerate,
        });
        cells_summary.push(CellSummary {
            cell: cell.label(),
            replicates: config.replicates,
            degenerate_count: degenerate,
            truth: Some(truth),
            truth_std_error: Some(truth_se),
            skipped: None,
            ks_statistic: None,
        });
    }
    let mut csv = String::from(
        "n,rho,param,covered_count,replicates,coverage,band_lo,band_hi,truth,truth_std_error,degenerate_count\n",
    );
    for r in &rows {
        let param = r.param.map(trim_float).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            trim_float(r.rho),
            param,
            r.covered_count,
            r.replicates,
            r.coverage,
            r.band_lo,
            r.band_hi,
            r.truth,
            r.truth_std_error,
            r.degenerate_count
        );
    }
    write_file(&config.output_dir, "coverage.csv", &csv)?;
    finish(config, "coverage", cells_summary)
}

/// Timing benchmark of the three variance-estimation algorithms.
///
/// Only the variance-estimation call is timed (network generation is
/// excluded); warm-up runs are discarded and work is pinned to one thread
/// for comparability. Capped cells are skipped with a logged reason.
pub fn run_bench(config: &ExperimentConfig) -> Result<Summary> {
    let kernel_id = match parse_statistic(&config.statistic)? {
        SimStatistic::Kernel(id) => id,
        _ => {
            return Err(Error::Config(
                "bench requires a kernel statistic (h1 or h2)".into(),
            ))
        }
    };
    let h = builtin(&kernel_id)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
        path: config.output_dir.display().to_string(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(format!("cannot build the single-thread pool: {e}")))?;
    let mut csv =
        String::from("n,algorithm,mean_seconds,sd_seconds,estimate_mean,estimate_sd\n");
    let mut cells_summary = Vec::new();
    for cell in cells_of(config) {
        let model = model_for_cell(config, &cell)?;
        let (m, n_cols) = cell.dims();
        // Matrices generated outside the timer, shared by all algorithms.
        let matrices: Vec<BipartiteMatrix> = (0..config.replicates)
            .map(|k| {
                let rep_seed = mix(config.seed, &[tag::REPLICATE, cell.n as u64, k as u64]);
                crate::models::sample(&model, m, n_cols, rep_seed).map(|s| s.matrix)
            })
            .collect::<Result<_>>()?;
        for algo in &config.bench.algorithms {
            let algo = algo.to_uppercase();
            let cap = match algo.as_str() {
                "A" => Some(config.bench.algo_a_max_n),
                "B" => Some(config.bench.algo_b_max_n),
                "C" => None,
                other => {
                    return Err(Error::Config(format!(
                        "unknown algorithm {other:?}; expected A, B or C"
                    )))
                }
            };
            if let Some(cap) = cap {
                if cell.n > cap && !config.bench.force {
                    cells_summary.push(CellSummary {
                        cell: format!("{}_{algo}", cell.label()),
                        replicates: 0,
                        degenerate_count: 0,
                        truth: None,
                        truth_std_error: None,
                        skipped: Some(format!("N={} exceeds the algorithm {algo} cap of {cap}", cell.n)),
                        ks_statistic: None,
                    });
                    continue;
                }
            }
            let run_one = |y: &BipartiteMatrix| -> Result<f64> {
                match algo.as_str() {
                    "A" => algorithm_a_variance(
                        y,
                        &h,
                        RhoPolicy::Empirical,
                        AlgorithmAOptions {
                            budget: 1_000_000,
                            seed: config.seed,
                        },
                    )
                    .map(|e| e.v),
                    "B" => variance_estimate(y, &h, RhoPolicy::Empirical, VarMethod::Direct)
                        .map(|e| e.v),
                    _ => variance_estimate(y, &h, RhoPolicy::Empirical, VarMethod::LeaveOneOut)
                        .map(|e| e.v),
                }
            };
            let (times, estimates) = pool.install(|| -> Result<(Vec<f64>, Vec<f64>)> {
                for w in 0..config.bench.warmup.min(matrices.len()) {
                    run_one(&matrices[w])?;
                }
                let mut times = Vec::with_capacity(matrices.len());
                let mut estimates = Vec::with_capacity(matrices.len());
                for y in &matrices {
                    let start = Instant::now();
                    let v = run_one(y)?;
                    times.push(start.elapsed().as_secs_f64());
                    estimates.push(v);
                }
                Ok((times, estimates))
            })?;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let sd = |v: &[f64]| {
                if v.len() < 2 {
                    0.0
                } else {
                    sample_variance(v).sqrt()
                }
            };
            let _ = writeln!(
                csv,
                "{},{algo},{:.9},{:.9},{},{}",
                cell.n,
                mean(&times),
                sd(&times),
                mean(&estimates),
                sd(&estimates)
            );
            cells_summary.push(CellSummary {
                cell: format!("{}_{algo}", cell.label()),
                replicates: config.replicates,
                degenerate_count: 0,
                truth: None,
                truth_std_error: None,
                skipped: None,
                ks_statistic: None,
            });
        }
    }
    write_file(&config.output_dir, "bench.csv", &csv)?;
    finish(config, "bench", cells_summary)
}

/// Dispatch on the experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary> {
    match config.experiment {
        Experiment::Qq => run_qq(config),
        Experiment::Coverage => run_coverage(config),
        Experiment::Bench => run_bench(config),
    }
}

fn finish(
    config: &ExperimentConfig,
    experiment: &str,
    cells: Vec<CellSummary>,
) -> Result<Summary> {
    let summary = Summary {
        experiment: experiment.to_string(),
        statistic: config.statistic.clone(),
        seed: config.seed,
        cells,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let text = serde_json::to_string_pretty(&json!(summary))
        .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
    write_file(&config.output_dir, "summary.json", &text)?;
    Ok(summary)
}


#[cfg(test)]
mod degenerate_tests {
    use super::*;

    #[test]
    fn qq_counts_degenerate_replicates_as_nan_rows() {
        // A saturated Bernoulli model yields all-ones matrices: f2 is
        // degenerate on every replicate.
        let dir = std::env::temp_dir().join(format!("netustat_degen_{}", std::process::id()));
        let config = ExperimentConfig {
            experiment: Experiment::Qq,
            model: serde_json::json!({
                "type": "lbm", "emission": "bernoulli",
                "alpha": [1.0], "beta": [1.0], "pi": [[1.0]]
            }),
            statistic: "f2".into(),
            n_list: vec![20],
            rho_list: vec![0.5],
            epsilon_list: None,
            replicates: 6,
            seed: 5,
            alpha: 0.95,
            output_dir: dir.clone(),
            mc_truth_budget: 100,
            bench: BenchOptions::default(),
        };
        let summary = run_qq(&config).unwrap();
        assert_eq!(summary.cells[0].degenerate_count, 6);
        let csv = std::fs::read_to_string(dir.join("qq_N20_rho0.5.csv")).unwrap();
        let nan_rows = csv.lines().filter(|l| l.ends_with("nan,nan")).count();
        assert_eq!(nan_rows, 6);
        std::fs::remove_dir_all(&dir).ok();
    }
}
