//! End-to-end CLI tests: exit codes, JSON schemas, file round trips and
//! cross-process determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_netustat")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("failed to launch the binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct TempDir(tempfile::TempDir);

impl TempDir {
    fn new(label: &str) -> TempDir {
        TempDir(
            tempfile::Builder::new()
                .prefix(&format!("netustat_cli_{label}_"))
                .tempdir()
                .unwrap(),
        )
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn ustat_on_ones_matrix() {
    let dir = TempDir::new("ustat");
    let matrix = dir.path("ones.csv");
    write(&matrix, "1,1\n1,1\n");
    let out = run(&["ustat", "--matrix", matrix.to_str().unwrap(), "--kernel", "hD"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("value        1"));
    assert!(stdout(&out).contains("total_terms  4"));
}

#[test]
fn ustat_json_schema() {
    let dir = TempDir::new("ustat_json");
    let matrix = dir.path("m.csv");
    write(&matrix, "1,0,2\n0,1,1\n3,0,1\n");
    let out = run(&[
        "--json",
        "ustat",
        "--matrix",
        matrix.to_str().unwrap(),
        "--kernel",
        "h1",
        "--fast",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    assert_eq!(keys, ["fast", "kernel", "seconds", "total_terms", "value"]);
    assert_eq!(v["kernel"], "h1");
    assert_eq!(v["fast"], true);
}

#[test]
fn fast_and_naive_cli_agree() {
    let dir = TempDir::new("fastnaive");
    let matrix = dir.path("m.csv");
    write(&matrix, "1,0,2,1\n0,1,1,0\n3,0,1,2\n1,1,0,0\n");
    let value = |extra: &[&str]| -> f64 {
        let mut args = vec![
            "--json",
            "ustat",
            "--matrix",
            matrix.to_str().unwrap(),
            "--kernel",
            "h2",
        ];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        serde_json::from_str::<serde_json::Value>(&stdout(&out)).unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    let naive = value(&[]);
    let fast = value(&["--fast"]);
    assert!((naive - fast).abs() < 1e-12 * naive.abs().max(1.0));
}

#[test]
fn estimate_json_schema_is_stable() {
    let dir = TempDir::new("estimate");
    let matrix = dir.path("m.csv");
    // A fixed 6x6 count matrix.
    write(
        &matrix,
        "2,1,0,3,1,2\n1,0,1,2,0,1\n0,2,1,1,3,0\n3,1,2,0,1,1\n1,0,3,1,2,0\n2,1,0,1,0,2\n",
    );
    let out = run(&[
        "--json",
        "estimate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--stat",
        "f2",
        "--null",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    assert_eq!(
        keys,
        [
            "alpha",
            "ci_hi",
            "ci_lo",
            "degenerate",
            "estimate",
            "metadata",
            "n_total",
            "p_value",
            "statistic_id",
            "variance",
            "z"
        ]
    );
    assert_eq!(v["statistic_id"], "f2");
    assert_eq!(v["n_total"], 12);
    assert!(v["z"].is_number());
    let meta = v["metadata"].as_object().unwrap();
    for key in ["m", "n", "rho", "kernels", "covariance_weighting", "null_value"] {
        assert!(meta.contains_key(key), "metadata key {key} missing");
    }
}

#[test]
fn estimate_motif_on_weighted_data_exits_2() {
    let dir = TempDir::new("motif_weighted");
    let matrix = dir.path("m.csv");
    write(&matrix, "2,1\n1,0\n");
    let out = run(&[
        "estimate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--stat",
        "motif6",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("binary"));
}

#[test]
fn studentized_on_constant_matrix_exits_3() {
    let dir = TempDir::new("degenerate");
    let matrix = dir.path("m.csv");
    write(&matrix, "1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n");
    let out = run(&[
        "estimate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--stat",
        "motif6",
        "--null",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("degenerate"));
}

#[test]
fn missing_file_exits_2_and_usage_errors_exit_1() {
    let out = run(&["ustat", "--matrix", "/nonexistent.csv", "--kernel", "hD"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["ustat", "--matrix", "x.csv", "--kernel", "hD", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn help_covers_every_subcommand_and_flag() {
    let top = stdout(&run(&["--help"]));
    for sub in ["sample", "ustat", "variance", "estimate", "compare", "simulate"] {
        assert!(top.contains(sub), "top help missing {sub}");
    }
    assert!(top.contains("--threads"));
    assert!(top.contains("--json"));
    assert!(top.contains("NETUSTAT_THREADS"));
    let pairs: [(&str, &[&str]); 6] = [
        ("sample", &["--model", "--m", "--n", "--seed", "--out"]),
        ("ustat", &["--matrix", "--kernel", "--fast", "--force"]),
        (
            "variance",
            &["--matrix", "--kernel", "--method", "--rho", "--budget", "--seed"],
        ),
        (
            "estimate",
            &["--matrix", "--stat", "--null", "--alpha", "--rho", "--one-sided"],
        ),
        (
            "compare",
            &["--matrix-a", "--matrix-b", "--stat", "--alpha", "--rho"],
        ),
        ("simulate", &["--config"]),
    ];
    for (sub, flags) in pairs {
        let text = stdout(&run(&[sub, "--help"]));
        for flag in flags {
            assert!(text.contains(flag), "{sub} --help missing {flag}");
        }
    }
}

#[test]
fn sample_then_analyze_round_trip() {
    let dir = TempDir::new("roundtrip");
    let model = dir.path("model.json");
    write(
        &model,
        r#"{"type":"paper","which":"III","f2":3.0,"g2":2.0,"lambda":1.0}"#,
    );
    let matrix = dir.path("net.csv");
    let out = run(&[
        "sample",
        "--model",
        model.to_str().unwrap(),
        "--m",
        "40",
        "--n",
        "50",
        "--seed",
        "7",
        "--out",
        matrix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(matrix.exists());

    let out = run(&[
        "--json",
        "estimate",
        "--matrix",
        matrix.to_str().unwrap(),
        "--stat",
        "f2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let est = v["estimate"].as_f64().unwrap();
    assert!(est > 1.0 && est < 8.0, "implausible F2 estimate {est}");

    // Identical seeds give identical files.
    let matrix2 = dir.path("net2.csv");
    run(&[
        "sample",
        "--model",
        model.to_str().unwrap(),
        "--m",
        "40",
        "--n",
        "50",
        "--seed",
        "7",
        "--out",
        matrix2.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&matrix).unwrap(),
        std::fs::read(&matrix2).unwrap()
    );
}

#[test]
fn variance_methods_agree_through_cli() {
    let dir = TempDir::new("variance");
    let model = dir.path("model.json");
    write(&model, r#"{"type":"paper","which":"II","epsilon":1.0}"#);
    let matrix = dir.path("net.csv");
    run(&[
        "sample",
        "--model",
        model.to_str().unwrap(),
        "--m",
        "12",
        "--n",
        "14",
        "--seed",
        "5",
        "--out",
        matrix.to_str().unwrap(),
    ]);
    let get = |method: &str| -> serde_json::Value {
        let out = run(&[
            "--json",
            "variance",
            "--matrix",
            matrix.to_str().unwrap(),
            "--kernel",
            "h1",
            "--method",
            method,
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        serde_json::from_str(&stdout(&out)).unwrap()
    };
    let direct = get("direct");
    let loo = get("loo");
    let keys: Vec<&str> = direct.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    assert_eq!(keys, ["V", "degenerate", "kernel", "method", "rho", "v01", "v10"]);
    let (a, b) = (direct["V"].as_f64().unwrap(), loo["V"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-10 * b.abs().max(1e-12));
    // The baseline runs too, even if its estimate is noisier.
    let algo_a = get("algoA");
    assert_eq!(algo_a["method"], "algorithm_A");
}

#[test]
fn compare_cli_reports_z_and_p() {
    let dir = TempDir::new("compare");
    let model = dir.path("model.json");
    write(&model, r#"{"type":"paper","which":"I"}"#);
    let a = dir.path("a.csv");
    let b = dir.path("b.csv");
    for (path, seed) in [(&a, "1"), (&b, "2")] {
        run(&[
            "sample",
            "--model",
            model.to_str().unwrap(),
            "--m",
            "40",
            "--n",
            "40",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
    }
    let out = run(&[
        "--json",
        "compare",
        "--matrix-a",
        a.to_str().unwrap(),
        "--matrix-b",
        b.to_str().unwrap(),
        "--stat",
        "motif6",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["statistic_id"], "compare_motif6");
    assert!(v["z"].is_number());
    let p = v["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn expression_kernel_from_json_document() {
    let dir = TempDir::new("exprkernel");
    let matrix = dir.path("m.csv");
    write(&matrix, "1,2\n3,4\n");
    let kernel = dir.path("kernel.json");
    // Same functional as h1: Y[0,0]·Y[0,1].
    write(
        &kernel,
        r#"{"p":1,"q":2,"terms":[{"coef":1.0,"factors":[[0,0,1],[0,1,1]]}]}"#,
    );
    let custom = run(&[
        "--json",
        "ustat",
        "--matrix",
        matrix.to_str().unwrap(),
        "--kernel",
        kernel.to_str().unwrap(),
    ]);
    assert_eq!(custom.status.code(), Some(0), "stderr: {}", stderr(&custom));
    let custom_v: serde_json::Value = serde_json::from_str(&stdout(&custom)).unwrap();
    let builtin = run(&[
        "--json",
        "ustat",
        "--matrix",
        matrix.to_str().unwrap(),
        "--kernel",
        "h1",
    ]);
    let builtin_v: serde_json::Value = serde_json::from_str(&stdout(&builtin)).unwrap();
    assert_eq!(custom_v["value"], builtin_v["value"]);
}

#[test]
fn simulate_is_deterministic_across_processes_and_threads() {
    let dir = TempDir::new("simulate");
    let config = |out: &Path| {
        format!(
            r#"{{
  "experiment": "qq",
  "model": {{"type": "paper", "which": "III", "f2": 3.0, "g2": 2.0, "lambda": 1.0}},
  "statistic": "f2",
  "n_list": [48],
  "rho_list": [0.5],
  "replicates": 16,
  "seed": 9,
  "alpha": 0.95,
  "output_dir": {:?}
}}"#,
            out.to_str().unwrap()
        )
    };
    let out1 = dir.path("run1");
    let out8 = dir.path("run8");
    let cfg1 = dir.path("cfg1.json");
    let cfg8 = dir.path("cfg8.json");
    write(&cfg1, &config(&out1));
    write(&cfg8, &config(&out8));
    let r1 = run(&["--threads", "1", "simulate", "--config", cfg1.to_str().unwrap()]);
    assert_eq!(r1.status.code(), Some(0), "stderr: {}", stderr(&r1));
    let r8 = run(&["--threads", "8", "simulate", "--config", cfg8.to_str().unwrap()]);
    assert_eq!(r8.status.code(), Some(0), "stderr: {}", stderr(&r8));
    let a = std::fs::read(out1.join("qq_N48_rho0.5.csv")).unwrap();
    let b = std::fs::read(out8.join("qq_N48_rho0.5.csv")).unwrap();
    assert_eq!(a, b);
    // coverage experiment writes its own artifacts
    let cov_out = dir.path("cov");
    let cov_cfg = dir.path("cov.json");
    write(
        &cov_cfg,
        &format!(
            r#"{{
  "experiment": "coverage",
  "model": {{"type": "paper", "which": "II", "epsilon": 1.0}},
  "statistic": "d",
  "n_list": [48],
  "rho_list": [0.5],
  "epsilon_list": [0.5, 1.0],
  "replicates": 8,
  "seed": 3,
  "alpha": 0.95,
  "output_dir": {:?}
}}"#,
            cov_out.to_str().unwrap()
        ),
    );
    let rc = run(&["simulate", "--config", cov_cfg.to_str().unwrap()]);
    assert_eq!(rc.status.code(), Some(0), "stderr: {}", stderr(&rc));
    let csv = std::fs::read_to_string(cov_out.join("coverage.csv")).unwrap();
    assert!(csv.starts_with("n,rho,param,covered_count,replicates,coverage,band_lo,band_hi"));
    assert_eq!(csv.lines().count(), 3); // header + two epsilon cells
    assert!(cov_out.join("summary.json").exists());
}

#[test]
fn simulate_bad_config_exits_2() {
    let dir = TempDir::new("badcfg");
    let cfg = dir.path("bad.json");
    write(&cfg, "{ not json");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
