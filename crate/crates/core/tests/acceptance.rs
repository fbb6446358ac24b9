//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities (run with `--nocapture` to see them).

use std::sync::Mutex;
use std::time::Instant;

/// The criteria run one at a time: several assert wall-clock budgets or
/// compare timings, which parallel test threads would distort.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial_guard() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

use rand::seq::SliceRandom;
use rand::Rng;

use netustat::fast::u_fast;
use netustat::inference::{check_gradient, compare_networks, f2_report, DeltaSpec, StatisticId};
use netustat::kernels::{builtin, extend};
use netustat::matrix::BipartiteMatrix;
use netustat::models::{d_true, sample, study_model, Graphon, Marginal, StudyModel};
use netustat::rng::substream;
use netustat::sim::{binomial_band, ks_statistic_normal, BenchOptions, Experiment, ExperimentConfig};
use netustat::ustat::{u_naive, Axis};
use netustat::varest::{
    algorithm_a_variance, covariance_estimate, sample_variance, variance_estimate,
    AlgorithmAOptions, RhoPolicy, VarMethod,
};

fn random_matrix(m: usize, n: usize, seed: u64) -> BipartiteMatrix {
    let mut rng = substream(seed, &[12_345]);
    let vals: Vec<f64> = (0..m * n)
        .map(|_| rng.random_range(0..6) as f64)
        .collect();
    BipartiteMatrix::new(m, n, vals).unwrap()
}

fn corpus() -> Vec<BipartiteMatrix> {
    let sizes = [(5, 5), (6, 9), (9, 6), (12, 13), (16, 20), (20, 25)];
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < 50 {
        let (m, n) = sizes[out.len() % sizes.len()];
        out.push(random_matrix(m, n, 7_000 + seed));
        seed += 1;
    }
    out
}

fn model_iii() -> netustat::models::ModelSpec {
    study_model(StudyModel::III {
        f2: 3.0,
        g2: 2.0,
        lambda: 1.0,
    })
    .unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let se = (sample_variance(values) / values.len() as f64).sqrt();
    (mean, se)
}

#[test]
fn criterion_1_estimator_identity() {
    let _serial = serial_guard();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (idx, y) in corpus().iter().enumerate() {
        for name in ["h1", "h2", "hD", "h6"] {
            let h = builtin(name).unwrap();
            let direct =
                variance_estimate(y, &h, RhoPolicy::Empirical, VarMethod::Direct).unwrap();
            let loo =
                variance_estimate(y, &h, RhoPolicy::Empirical, VarMethod::LeaveOneOut).unwrap();
            for (a, b) in [
                (direct.v10, loo.v10),
                (direct.v01, loo.v01),
                (direct.v, loo.v),
            ] {
                let rel = (a - b).abs() / b.abs().max(1e-12);
                worst = worst.max(rel);
                assert!(
                    rel < 1e-10,
                    "matrix {idx}, kernel {name}: direct {a} vs leave-one-out {b}"
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 1 took {secs:.1}s, budget 60s");
    println!(
        "[criterion 1] PASS — direct vs leave-one-out v-hat identical on 50 matrices \
         (worst rel gap {worst:.2e}, {secs:.1}s)"
    );
}

#[test]
fn criterion_2_fast_path_equivalence() {
    let _serial = serial_guard();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (idx, y) in corpus().iter().enumerate() {
        for name in ["h1", "h2", "hB", "hC", "hD"] {
            let h = builtin(name).unwrap();
            let naive = u_naive(y, &h).unwrap().value;
            let fast = u_fast(y, name).unwrap();
            let rel = (fast - naive).abs() / naive.abs().max(1e-12);
            worst = worst.max(rel);
            assert!(
                rel < 1e-9,
                "matrix {idx}, kernel {name}: naive {naive} vs fast {fast}"
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 2 took {secs:.1}s, budget 60s");
    println!(
        "[criterion 2] PASS — matrix-operation U-statistics match naive enumeration \
         on 50 matrices (worst rel gap {worst:.2e}, {secs:.1}s)"
    );
}

#[test]
fn criterion_3_oracle_unbiasedness() {
    let _serial = serial_guard();
    let start = Instant::now();
    let spec = model_iii();
    let h = builtin("hD").unwrap();
    let n_total = 128;
    let m = n_total / 2;
    let reps = 2000;
    let mut v10s = Vec::with_capacity(reps);
    for t in 0..reps {
        let y = sample(&spec, m, n_total - m, 310_000 + t as u64).unwrap().matrix;
        let est =
            variance_estimate(&y, &h, RhoPolicy::Fixed(0.5), VarMethod::LeaveOneOut).unwrap();
        v10s.push(est.v10);
    }
    let (mean, se) = mean_and_se(&v10s);
    let oracle = 2.0; // λ²(F₂−1)
    let band = 10.0 / n_total as f64;
    let secs = start.elapsed().as_secs_f64();
    assert!(
        (mean - oracle).abs() < 3.0 * se + band,
        "mean v10 {mean} (se {se}) vs oracle {oracle} with bias band ±{band}"
    );
    assert!(secs < 300.0, "criterion 3 took {secs:.1}s, budget 300s");
    println!(
        "[criterion 3] PASS — mean v-hat(1,0) = {mean:.5} ± {se:.5} vs oracle 2 \
         (bias band ±{band:.4}, {secs:.1}s)"
    );
}

#[test]
fn criterion_4_studentized_normality() {
    let _serial = serial_guard();
    let start = Instant::now();
    let spec = model_iii();
    let n_total = 1024;
    let m = n_total / 2;
    let reps = 300;
    let mut zs = Vec::with_capacity(reps);
    for t in 0..reps {
        let y = sample(&spec, m, n_total - m, 320_000 + t as u64).unwrap().matrix;
        let report =
            f2_report(&y, Axis::Row, RhoPolicy::Fixed(0.5), 0.05, Some(3.0)).unwrap();
        zs.push(report.z.unwrap());
    }
    let ks = ks_statistic_normal(&zs);
    let critical = 1.63 / (reps as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();
    assert!(
        ks < critical,
        "KS statistic {ks:.4} not below the 1% critical value {critical:.4}"
    );
    assert!(secs < 600.0, "criterion 4 took {secs:.1}s, budget 600s");
    println!(
        "[criterion 4] PASS — KS of 300 studentized F2 values = {ks:.4} < {critical:.4} \
         ({secs:.1}s)"
    );
}

#[test]
fn criterion_5_f2_coverage() {
    let _serial = serial_guard();
    let start = Instant::now();
    let spec = model_iii();
    let n_total = 512;
    let m = n_total / 2;
    let reps = 500;
    let mut covered = 0;
    for t in 0..reps {
        let y = sample(&spec, m, n_total - m, 330_000 + t as u64).unwrap().matrix;
        let report = f2_report(&y, Axis::Row, RhoPolicy::Fixed(0.5), 0.05, None).unwrap();
        if report.ci_lo <= 3.0 && 3.0 <= report.ci_hi {
            covered += 1;
        }
    }
    let coverage = covered as f64 / reps as f64;
    let (band_lo, band_hi) = binomial_band(reps, 0.95).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(
        coverage >= band_lo && coverage <= band_hi,
        "coverage {coverage:.4} outside [{band_lo:.4}, {band_hi:.4}]"
    );
    assert!(secs < 600.0, "criterion 5 took {secs:.1}s, budget 600s");
    println!(
        "[criterion 5] PASS — F2 coverage {coverage:.4} within [{band_lo:.4}, {band_hi:.4}] \
         over 500 replicates ({secs:.1}s)"
    );
}

#[test]
fn criterion_6_product_distance() {
    let _serial = serial_guard();
    let start = Instant::now();
    assert!((d_true(1.0) - 0.1098001).abs() < 1e-6);
    assert!((d_true(3.0) - 0.3583692).abs() < 1e-6);
    // The absolute bias of d-hat at these sizes (~1e-3 at N=256) sits below
    // the Monte Carlo noise of 100 seeds (~3e-3), so the decrease is
    // resolved with 2000 seeds, both on the raw scale and on the
    // studentized scale where the finite-N non-centering is strongest.
    let spec = study_model(StudyModel::II { epsilon: 3.0 }).unwrap();
    let truth = d_true(3.0);
    let reps = 2000;
    let run = |n_total: usize, seed0: u64| {
        let m = n_total / 2;
        let mut ds = Vec::with_capacity(reps);
        let mut zs = Vec::with_capacity(reps);
        for t in 0..reps {
            let y = sample(&spec, m, n_total - m, seed0 + t as u64).unwrap().matrix;
            let r = netustat::inference::d_report(&y, RhoPolicy::Fixed(0.5), 0.05, Some(truth))
                .unwrap();
            ds.push(r.estimate);
            zs.push(r.z.unwrap());
        }
        (mean_and_se(&ds), mean_and_se(&zs))
    };
    let ((mean_d_small, se_small), (mean_z_small, se_z_small)) = run(256, 900_000);
    let ((mean_d_large, se_large), (mean_z_large, se_z_large)) = run(1024, 900_000);
    let bias_small = (mean_d_small - truth).abs();
    let bias_large = (mean_d_large - truth).abs();
    let secs = start.elapsed().as_secs_f64();
    assert!(
        bias_large < bias_small,
        "raw bias did not decrease: N=256 gives {bias_small:.5} ± {se_small:.5}, \
         N=1024 gives {bias_large:.5} ± {se_large:.5}"
    );
    assert!(
        mean_z_large.abs() < mean_z_small.abs(),
        "studentized non-centering did not decrease: mean Z {mean_z_small:.4} ± {se_z_small:.4} \
         (N=256) vs {mean_z_large:.4} ± {se_z_large:.4} (N=1024)"
    );
    assert!(secs < 900.0, "criterion 6 took {secs:.1}s, budget 900s");
    println!(
        "[criterion 6] PASS — d_true values exact; |bias| {bias_small:.5} → {bias_large:.5} \
         and |mean Z| {:.4} → {:.4} from N=256 to N=1024 over {reps} seeds ({secs:.1}s)",
        mean_z_small.abs(),
        mean_z_large.abs()
    );
}

#[test]
fn criterion_7_benchmark_ordering() {
    let _serial = serial_guard();
    let start = Instant::now();
    let spec = model_iii();
    let h = builtin("h1").unwrap();

    // Timing at N = 128: algorithm C (leave-one-out + fast paths) must beat
    // direct enumeration (B) by at least 10×.
    let n_total = 128;
    let m = n_total / 2;
    let matrices: Vec<BipartiteMatrix> = (0..10)
        .map(|t| sample(&spec, m, n_total - m, 360_000 + t as u64).unwrap().matrix)
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    // Minimum over runs: robust against scheduler noise.
    let time_algo = |method: VarMethod| -> (f64, Vec<f64>) {
        pool.install(|| {
            for y in matrices.iter().take(3) {
                variance_estimate(y, &h, RhoPolicy::Empirical, method).unwrap();
            }
            let mut best = f64::INFINITY;
            let mut estimates = Vec::new();
            for y in &matrices {
                let t0 = Instant::now();
                let est = variance_estimate(y, &h, RhoPolicy::Empirical, method).unwrap();
                best = best.min(t0.elapsed().as_secs_f64());
                estimates.push(est.v);
            }
            (best, estimates)
        })
    };
    let (time_b, est_b) = time_algo(VarMethod::Direct);
    let (time_c, est_c) = time_algo(VarMethod::LeaveOneOut);
    assert!(
        time_c * 10.0 <= time_b,
        "algorithm C ({time_c:.6}s) not 10x faster than B ({time_b:.6}s) at N=128"
    );
    for (b, c) in est_b.iter().zip(&est_c) {
        assert!(
            (b - c).abs() <= 1e-10 * b.abs().max(1e-12),
            "B and C estimates differ: {b} vs {c}"
        );
    }

    // The bench harness caps algorithm A at N ≤ 24.
    let dir = std::env::temp_dir().join(format!("netustat_acc_bench_{}", std::process::id()));
    let config = ExperimentConfig {
        experiment: Experiment::Bench,
        model: serde_json::json!({
            "type": "paper", "which": "III", "f2": 3.0, "g2": 2.0, "lambda": 1.0
        }),
        statistic: "h1".into(),
        n_list: vec![16, 128],
        rho_list: vec![0.5],
        epsilon_list: None,
        replicates: 3,
        seed: 77,
        alpha: 0.95,
        output_dir: dir.clone(),
        mc_truth_budget: 1000,
        bench: BenchOptions::default(),
    };
    let summary = netustat::sim::run_bench(&config).unwrap();
    let skipped_a = summary
        .cells
        .iter()
        .any(|c| c.cell.contains("N128") && c.cell.ends_with("_A") && c.skipped.is_some());
    assert!(skipped_a, "algorithm A was not skipped at N=128");
    let csv = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("16,A")));
    assert!(!csv.lines().any(|l| l.starts_with("128,A")));
    std::fs::remove_dir_all(&dir).ok();

    // Algorithm A at N = 16 against the closed-form oracle for h1:
    // V = (1/ρ)·λ⁴(F₄−F₂²) + (4/(1−ρ))·λ⁴F₂²(G₂−1) at ρ = 1/2.
    let (f4, f2, g2) = match &spec.graphon {
        Graphon::Product { f, g, .. } => (f.moment(4), f.moment(2), g.moment(2)),
        _ => unreachable!(),
    };
    let oracle_v = 2.0 * (f4 - f2 * f2) + 8.0 * f2 * f2 * (g2 - 1.0);
    let seeds = 100;
    let mut estimates = Vec::with_capacity(seeds);
    for t in 0..seeds {
        let y = sample(&spec, 8, 8, 370_000 + t as u64).unwrap().matrix;
        let est = algorithm_a_variance(
            &y,
            &h,
            RhoPolicy::Fixed(0.5),
            AlgorithmAOptions::default(),
        )
        .unwrap();
        estimates.push(est.v);
    }
    let (mean_a, se_a) = mean_and_se(&estimates);
    assert!(
        (mean_a - oracle_v).abs() < 4.0 * se_a,
        "algorithm A mean {mean_a:.3} ± {se_a:.3} vs oracle {oracle_v:.3}"
    );
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 600.0, "criterion 7 took {secs:.1}s, budget 600s");
    println!(
        "[criterion 7] PASS — C/B speedup {:.0}x at N=128; B = C to 1e-10; A capped at \
         N ≤ 24 and mean {mean_a:.2} ± {se_a:.2} vs oracle {oracle_v:.2} at N=16 ({secs:.1}s)",
        time_b / time_c
    );
}

#[test]
fn criterion_8_property_suites() {
    let _serial = serial_guard();
    let start = Instant::now();

    // Kernel symmetry under random permutations.
    let mut rng = substream(88, &[1]);
    for name in ["h6", "h14", "hA", "hB", "hC", "hD", "h1", "h2"] {
        let h = builtin(name).unwrap();
        let (p, q) = (h.p(), h.q());
        for _ in 0..25 {
            let block: Vec<f64> = (0..p * q).map(|_| rng.random_range(0.0..3.0)).collect();
            let mut rows: Vec<usize> = (0..p).collect();
            let mut cols: Vec<usize> = (0..q).collect();
            rows.shuffle(&mut rng);
            cols.shuffle(&mut rng);
            let mut permuted = vec![0.0; p * q];
            for a in 0..p {
                for b in 0..q {
                    permuted[a * q + b] = block[rows[a] * q + cols[b]];
                }
            }
            let (v1, v2) = (h.eval(&block), h.eval(&permuted));
            assert!((v1 - v2).abs() < 1e-12 * v1.abs().max(1.0), "{name}");
        }
    }

    // Σ̂ symmetric PSD and v̂ ≥ 0.
    let kernels: Vec<_> = ["hA", "hB", "hC", "hD"]
        .iter()
        .map(|n| builtin(n).unwrap())
        .collect();
    let y = random_matrix(10, 11, 42);
    let cov = covariance_estimate(&y, &kernels, RhoPolicy::Empirical).unwrap();
    for r in 0..4 {
        assert!(cov.sigma[r][r] >= 0.0);
        for c in 0..4 {
            assert_eq!(cov.sigma[r][c], cov.sigma[c][r]);
        }
    }

    // Extension invariance.
    let h1 = builtin("h1").unwrap();
    let extended = extend(&h1, 2, 2).unwrap();
    let base = u_naive(&y, &h1).unwrap().value;
    let ext = u_naive(&y, &extended).unwrap().value;
    assert!((base - ext).abs() < 1e-10 * base.abs().max(1e-12));

    // Gradient vs finite differences for the built-in statistics.
    let ratio = DeltaSpec::ratio(vec![builtin("h1").unwrap(), builtin("h2").unwrap()], "f2");
    let dist = DeltaSpec::product_distance().unwrap();
    for _ in 0..20 {
        let p2: Vec<f64> = (0..2).map(|_| rng.random_range(0.4..3.0)).collect();
        check_gradient(&ratio, &p2, 1e-6).unwrap();
        let p4: Vec<f64> = (0..4).map(|_| rng.random_range(0.4..3.0)).collect();
        check_gradient(&dist, &p4, 1e-6).unwrap();
    }

    // Two-sample antisymmetry.
    let spec = model_iii();
    let a = sample(&spec, 24, 30, 91).unwrap().matrix;
    let b = sample(&spec, 26, 22, 92).unwrap().matrix;
    let ab = compare_networks(&a, &b, StatisticId::F2, RhoPolicy::Empirical, 0.05).unwrap();
    let ba = compare_networks(&b, &a, StatisticId::F2, RhoPolicy::Empirical, 0.05).unwrap();
    assert_eq!(ab.z.unwrap(), -ba.z.unwrap());

    // Full-pipeline determinism under a fixed seed across 1 and 8 threads.
    let run_with_threads = |threads: usize, dir: std::path::PathBuf| {
        let config = ExperimentConfig {
            experiment: Experiment::Qq,
            model: serde_json::json!({
                "type": "paper", "which": "III", "f2": 3.0, "g2": 2.0, "lambda": 1.0
            }),
            statistic: "f2".into(),
            n_list: vec![64],
            rho_list: vec![0.5],
            epsilon_list: None,
            replicates: 40,
            seed: 4242,
            alpha: 0.95,
            output_dir: dir,
            mc_truth_budget: 1000,
            bench: BenchOptions::default(),
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| netustat::sim::run_qq(&config).unwrap())
    };
    let dir1 = std::env::temp_dir().join(format!("netustat_acc_t1_{}", std::process::id()));
    let dir8 = std::env::temp_dir().join(format!("netustat_acc_t8_{}", std::process::id()));
    run_with_threads(1, dir1.clone());
    run_with_threads(8, dir8.clone());
    let a = std::fs::read(dir1.join("qq_N64_rho0.5.csv")).unwrap();
    let b = std::fs::read(dir8.join("qq_N64_rho0.5.csv")).unwrap();
    assert_eq!(a, b, "qq output differs between 1 and 8 threads");
    std::fs::remove_dir_all(&dir1).ok();
    std::fs::remove_dir_all(&dir8).ok();

    // Marginal step functions round out the model surface.
    let step = Marginal::Step {
        cuts: vec![0.5],
        values: vec![4.0 / 3.0, 2.0 / 3.0],
    };
    assert!((step.moment(1) - 1.0).abs() < 1e-12);

    let secs = start.elapsed().as_secs_f64();
    println!(
        "[criterion 8] PASS — symmetry, PSD, extension, gradients, antisymmetry and \
         1-vs-8-thread pipeline determinism ({secs:.1}s)"
    );
}
