//! The `lrsparse` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use lrsparse::DenseMatrix;
use lrsparse_cli::io::{encode_binary, load_matrix, matrix_to_csv, save_matrix};

fn lrsparse(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrsparse"))
        .args(args)
        .env("LRSPARSE_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_RPCA: &[&str] = &["--d1", "40", "--d2", "40", "--rank", "2", "--beta", "0.05"];

#[test]
fn noiseless_rpca_solve_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrsparse(&[&["solve"], SMALL_RPCA].concat(), dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let line = stdout(&out);
    let err: f64 = line
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("rel_err_x="))
        .expect("summary has rel_err_x")
        .parse()
        .unwrap();
    assert!(err <= 1e-3, "{line}");
    for key in ["rel_err_s=", "rmse=", "iters=", "secs="] {
        assert!(line.contains(key), "{line}");
    }

    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert!(lines.next().unwrap().starts_with("# config: {\"experiment\""));
    assert_eq!(lines.next().unwrap(), "iter,phase,objective,rel_err_x,rel_err_s,d2_z,D_zs,secs");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8));
    assert_eq!(rows[0][1], "init");
    assert_eq!(rows.last().unwrap()[1], "gd");
    // timing is off by default, so the secs column stays empty
    assert!(rows.iter().all(|r| r[7].is_empty()));
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = lrsparse(
            &[&["trace", "--trials", "2", "--seed", "9", "--output", path.to_str().unwrap()], SMALL_RPCA].concat(),
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        runs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert!(runs[0].len() > 100);
    assert!(runs[0] == runs[1], "traces differ");
    assert!(runs[0].lines().nth(1).unwrap().starts_with("trial,iter,phase"));
}

#[test]
fn invalid_gamma_fails_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrsparse(&["solve", "--gamma", "1.0"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("solver.gamma"), "{}", stderr(&out));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[experiment]\nrank = 2\n\n[solver]\ngama = 2.0\n").unwrap();
    let out = lrsparse(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    let msg = stderr(&out);
    assert!(msg.contains("line 5") && msg.contains("gama"), "{msg}");
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phase.toml");
    std::fs::write(
        &cfg,
        "[experiment]\nmodel = \"rpca_partial\"\nd1 = 30\nd2 = 30\nrank = 2\nbeta = 0.05\n\
         grid = [0.0, 1.0]\ntrials = 5\n\n[solver]\nmax_iters = 150\n",
    )
    .unwrap();
    let out = lrsparse(&["phase", "--config", cfg.to_str().unwrap(), "--trials", "2"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("phase_transition.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].contains("\"trials\":2"));
    assert_eq!(lines[1], "grid_value,successes,trials,success_fraction");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("0,0,2,"));
    assert!(lines[3].starts_with("1,2,2,"), "{}", lines[3]);
}

#[test]
fn rate_sweep_writes_one_row_per_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrsparse(
        &[
            &["rate", "--model", "rpca_partial", "--grid", "0.6,0.8,1", "--trials", "2"][..],
            &["--noise", "0.05", "--max-iters", "100"],
            SMALL_RPCA,
        ]
        .concat(),
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("stat_rate.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let mean: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(mean.is_finite() && mean > 0.0);
    }
}

fn seeded(rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| ((3 * i + 7 * j) as f64).sin() * 1e3f64.powf(j as f64 / 4.0 - 0.5))
}

#[test]
fn matrix_files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let m = seeded(7, 5);
    let bin = dir.path().join("m.lrsm");
    let csv = dir.path().join("m.csv");
    save_matrix(&bin, &m).unwrap();
    save_matrix(&csv, &m).unwrap();
    let from_bin = load_matrix(&bin).unwrap();
    let from_csv = load_matrix(&csv).unwrap();
    assert_eq!(from_bin.shape(), (7, 5));
    for ((a, b), c) in m.as_slice().iter().zip(from_bin.as_slice()).zip(from_csv.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), c.to_bits());
    }
    assert!(matrix_to_csv(&m).contains('e'));
}

#[test]
fn truncated_matrix_file_reports_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.lrsm");
    let bytes = encode_binary(&seeded(4, 4));
    std::fs::write(&path, &bytes[..bytes.len() - 12]).unwrap();
    let err = load_matrix(&path).unwrap_err().to_string();
    assert!(err.contains("byte offset 133") && err.contains("truncated"), "{err}");
}

#[test]
fn user_matrix_is_solved_and_outputs_saved() {
    let dir = tempfile::tempdir().unwrap();
    let truth = lrsparse::synthetic::GroundTruth::plant(30, 25, 2, 0.05, 2.0, 5).unwrap();
    let y = truth.x_star.add(&truth.s_star).unwrap();
    let input = dir.path().join("frames.csv");
    save_matrix(&input, &y).unwrap();
    let (low, sparse) = (dir.path().join("low.lrsm"), dir.path().join("sparse.csv"));
    let out = lrsparse(
        &[
            "solve",
            "--input",
            input.to_str().unwrap(),
            "--rank",
            "2",
            "--beta",
            "0.05",
            "--save-lowrank",
            low.to_str().unwrap(),
            "--save-sparse",
            sparse.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("rel_err_x=NA"));
    let x_hat = load_matrix(&low).unwrap();
    let s_hat = load_matrix(&sparse).unwrap();
    let fit = x_hat.add(&s_hat).unwrap().sub(&y).unwrap().frobenius_norm() / y.frobenius_norm();
    assert!(fit <= 1e-6, "{fit}");
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    assert!(last.ends_with(",,,,,"), "{last}");
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrsparse(&["solve", "--input", "/nonexistent/y.lrsm"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/y.lrsm"));
}
