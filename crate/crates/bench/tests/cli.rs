//! End-to-end tests of the benchmark binary: exit codes, trace files,
//! config precedence, and custom data loading.

use std::path::Path;
use std::process::{Command, Output};

use grassmann_bench::{parse_trace_csv, TRACE_HEADER};
use grassmann_core::matio::write_matrix;
use nalgebra::DMatrix;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grassmann-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn read_trace(path: &Path) -> grassmann_core::solvers::SolverTrace {
    parse_trace_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn quadratic_batch_writes_one_csv_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&[
        "quadratic",
        "--n",
        "8",
        "--k",
        "3",
        "--max-iters",
        "50",
        "--warmup",
        "10",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    for name in ["cayley-sd", "geodesic-sd", "newton", "cg", "lbfgs"] {
        let path = dir.path().join(format!("quadratic-{name}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{TRACE_HEADER}\n")));
        let trace = read_trace(&path);
        assert!(!trace.is_empty());
        // The quadratic experiment has a closed form, so the error column
        // is populated.
        assert!(trace.records[0].error_to_truth.is_some());
    }
    assert!(stdout(&out).contains("closed-form optimum"));
}

#[test]
fn dimension_violations_exit_with_code_two() {
    let out = bench(&["quadratic", "--n", "16", "--k", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:"), "stderr was: {err}");
}

#[test]
fn unknown_algorithm_exits_with_code_two() {
    let out = bench(&["quadratic", "--algos", "sphere-sd"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn per_algorithm_failure_exits_with_code_one() {
    // Newton on the Karcher objective has no Hessian to assemble; the
    // batch finishes and reports the failure. Warmup is disabled so the
    // start is not already stationary.
    let out = bench(&[
        "karcher",
        "--n",
        "6",
        "--k",
        "2",
        "--m",
        "2",
        "--warmup",
        "0",
        "--algos",
        "newton,bb",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("failed"), "stdout was: {text}");
    assert!(text.contains("cayley-sd"));
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    std::fs::write(&config, r#"{"n": 8, "k": 3, "seed": 7, "algos": "bb", "max_iters": 20}"#)
        .unwrap();
    let out_dir_a = dir.path().join("a");
    let out_dir_b = dir.path().join("b");
    let out_dir_c = dir.path().join("c");
    // File seed 7 overridden by flag seed 9.
    let a = bench(&[
        "quadratic",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "9",
        "--output",
        out_dir_a.to_str().unwrap(),
    ]);
    // Plain seed 9 run, no config file beyond the same shape flags.
    let b = bench(&[
        "quadratic",
        "--n",
        "8",
        "--k",
        "3",
        "--algos",
        "bb",
        "--max-iters",
        "20",
        "--seed",
        "9",
        "--output",
        out_dir_b.to_str().unwrap(),
    ]);
    // The file's own seed for contrast.
    let c = bench(&[
        "quadratic",
        "--config",
        config.to_str().unwrap(),
        "--output",
        out_dir_c.to_str().unwrap(),
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(c.status.code(), Some(0));
    let ta = read_trace(&out_dir_a.join("quadratic-cayley-sd.csv"));
    let tb = read_trace(&out_dir_b.join("quadratic-cayley-sd.csv"));
    let tc = read_trace(&out_dir_c.join("quadratic-cayley-sd.csv"));
    assert_eq!(ta.records[0].f.to_bits(), tb.records[0].f.to_bits());
    assert_ne!(ta.records[0].f.to_bits(), tc.records[0].f.to_bits());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    std::fs::write(&config, r#"{"stepsize": 0.1}"#).unwrap();
    let out = bench(&["quadratic", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stepsize"));
}

#[test]
fn repeated_runs_agree_except_for_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "procrustes".to_string(),
            "--n".into(),
            "8".into(),
            "--k".into(),
            "3".into(),
            "--algos".into(),
            "cg,qn".into(),
            "--output".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let first_dir = dir.path().join("first");
    let second_dir = dir.path().join("second");
    assert_eq!(
        bench(&args(&first_dir).iter().map(String::as_str).collect::<Vec<_>>())
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        bench(&args(&second_dir).iter().map(String::as_str).collect::<Vec<_>>())
            .status
            .code(),
        Some(0)
    );
    for name in ["procrustes-cg.csv", "procrustes-lbfgs.csv"] {
        let ta = read_trace(&first_dir.join(name));
        let tb = read_trace(&second_dir.join(name));
        assert_eq!(ta.len(), tb.len());
        for (ra, rb) in ta.records.iter().zip(&tb.records) {
            assert_eq!(ra.iter, rb.iter);
            assert_eq!(ra.f.to_bits(), rb.f.to_bits());
            assert_eq!(ra.grad_norm.to_bits(), rb.grad_norm.to_bits());
            assert_eq!(
                ra.error_to_truth.map(f64::to_bits),
                rb.error_to_truth.map(f64::to_bits)
            );
            assert_eq!(ra.orth_deviation.to_bits(), rb.orth_deviation.to_bits());
        }
    }
}

#[test]
fn custom_cost_matrix_is_loaded_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let f_path = dir.path().join("f.txt");
    // Diagonal cost with a clear spectral split: the minimizer is the
    // span of the two smallest diagonal directions, f* = (1+2) - (5+9).
    let f = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[9.0, 1.0, 5.0, 2.0]));
    write_matrix(&f_path, &f).unwrap();
    let out = bench(&[
        "quadratic",
        "--n",
        "4",
        "--k",
        "2",
        "--data",
        f_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("-1.1"), "stdout was: {}", stdout(&out));
}

#[test]
fn karcher_anchor_files_override_the_anchor_count() {
    let dir = tempfile::tempdir().unwrap();
    // Two anchors given as involution matrices: lines at 0 and 45 degrees.
    let a0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let a1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let p0 = dir.path().join("a0.txt");
    let p1 = dir.path().join("a1.txt");
    write_matrix(&p0, &a0).unwrap();
    write_matrix(&p1, &a1).unwrap();
    let out = bench(&[
        "karcher",
        "--n",
        "2",
        "--k",
        "1",
        "--algos",
        "gd",
        "--line-search",
        "bb",
        "--data",
        p0.to_str().unwrap(),
        "--data",
        p1.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    // The mean of two lines 45 degrees apart is the 22.5-degree line,
    // at geodesic distance 2*sqrt(2)*(pi/8) from each anchor, so the
    // final objective value is twice that squared: pi^2/4.
    let d = 2.0 * 2.0f64.sqrt() * std::f64::consts::FRAC_PI_8;
    let expected = 2.0 * d * d;
    let text = stdout(&out);
    assert!(
        text.contains(&format!("{:.6}", expected)[..6]),
        "stdout was: {text}, expected value near {expected}"
    );
}

#[test]
fn wrong_data_file_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let f_path = dir.path().join("f.txt");
    write_matrix(&f_path, &DMatrix::<f64>::identity(4, 4)).unwrap();
    let out = bench(&[
        "procrustes",
        "--n",
        "4",
        "--k",
        "2",
        "--data",
        f_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
