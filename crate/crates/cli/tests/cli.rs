use std::path::Path;
use std::process::Command;

use woodbury_ls::io::{read_bench_csv, read_matrix, write_matrix};
use woodbury_ls::Matrix;
use woodbury_ls_cli::bench::{run_benchmark, BackendKind, BenchConfig};
use woodbury_ls_cli::cli::{cli_main, EXIT_IO, EXIT_SINGULAR_CAPACITANCE, EXIT_USAGE};
use woodbury_ls_cli::gen::gaussian_vec;

/// Runs the CLI in-process on a whitespace-separated argument string.
fn run(args: &str) -> i32 {
    cli_main(std::iter::once("woodbury-ls").chain(args.split_whitespace()))
}

fn write(dir: &Path, name: &str, rows: usize, cols: usize, row_major: &[f64]) -> String {
    let path = dir.join(name);
    write_matrix(
        &path,
        &Matrix::from_row_major(rows, cols, row_major).unwrap(),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

/// A = [I₂; 0], b = [3, 4, 5], U = e₃, V = e₁: the update lets the first
/// unknown see the third row, so x = [4, 4].
fn worked_files(dir: &Path) -> [String; 4] {
    [
        write(dir, "a.mtx", 3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        write(dir, "b.mtx", 3, 1, &[3.0, 4.0, 5.0]),
        write(dir, "u.mtx", 3, 1, &[0.0, 0.0, 1.0]),
        write(dir, "v.mtx", 2, 1, &[1.0, 0.0]),
    ]
}

#[test]
fn solve_worked_instance() {
    let dir = tempfile::tempdir().unwrap();
    let [a, b, u, v] = worked_files(dir.path());
    for backend in ["qr", "cg"] {
        let out = dir.path().join(format!("x_{backend}.mtx"));
        let code = run(&format!(
            "solve --a {a} --b {b} --u {u} --v {v} --backend {backend} --out {}",
            out.display()
        ));
        assert_eq!(code, 0);
        let x: Matrix = read_matrix(&out).unwrap();
        assert_eq!(x.shape(), (2, 1));
        for &xi in x.as_slice() {
            assert!((xi - 4.0).abs() < 1e-12, "{xi}");
        }
    }
}

#[test]
fn solve_with_given_x0() {
    let dir = tempfile::tempdir().unwrap();
    let [a, b, u, v] = worked_files(dir.path());
    let x0 = write(dir.path(), "x0.mtx", 2, 1, &[3.0, 4.0]);
    let out = dir.path().join("x.mtx");
    let code = run(&format!(
        "solve --a {a} --b {b} --u {u} --v {v} --x0 {x0} --out {}",
        out.display()
    ));
    assert_eq!(code, 0);
    let x: Matrix = read_matrix(&out).unwrap();
    assert!((x[(0, 0)] - 4.0).abs() < 1e-14 && (x[(1, 0)] - 4.0).abs() < 1e-14);
}

#[test]
fn binary_reports_usage_and_solver_errors() {
    let exe = env!("CARGO_BIN_EXE_woodbury-ls");
    let out = Command::new(exe)
        .args(["solve", "--a", "a.mtx"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let [a, b, _, v] = worked_files(dir.path());
    // U = −e₁ with V = e₁ zeroes the first column of A + UVᵀ
    let u = write(dir.path(), "drop.mtx", 3, 1, &[-1.0, 0.0, 0.0]);
    let x = dir.path().join("x.mtx");
    let out = Command::new(exe)
        .args(["solve", "--a", &a, "--b", &b, "--u", &u, "--v", &v, "--out"])
        .arg(&x)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_SINGULAR_CAPACITANCE));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(!x.exists());

    let missing = dir.path().join("nope.mtx");
    let code = run(&format!(
        "solve --a {} --b {b} --u {u} --v {v} --out {}",
        missing.display(),
        x.display()
    ));
    assert_eq!(code, EXIT_IO);
}

#[test]
fn bench_writes_readable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let code = run(&format!(
        "bench --m 300 --n-list 20,40 --r-list 1,3 --reps 2 --seed 9 --out {}",
        out.display()
    ));
    assert_eq!(code, 0);
    let records = read_bench_csv(&out).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.m == 300 && r.seed == 9));
    assert!(records.iter().all(|r| r.rel_forward_error <= 1e-12));

    let bad = run("bench --m 10 --n-list 20 --r-list 1 --reps 1 --seed 1 --out unused.csv");
    assert_ne!(bad, 0);
}

#[test]
fn benchmark_errors_are_deterministic() {
    let cfg = BenchConfig {
        m: 200,
        n_list: vec![30],
        r_list: vec![2, 5],
        reps: 2,
        seed: 77,
        backend: BackendKind::Qr,
        out_path: "unused.csv".into(),
    };
    let first = run_benchmark(&cfg).unwrap();
    let second = run_benchmark(&cfg).unwrap();
    let errs = |recs: &[woodbury_ls::io::BenchRecord]| {
        recs.iter()
            .map(|r| r.rel_forward_error.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(errs(&first), errs(&second));

    let cg = BenchConfig {
        backend: BackendKind::Cg,
        ..cfg
    };
    assert!(run_benchmark(&cg)
        .unwrap()
        .iter()
        .all(|r| r.rel_forward_error <= 1e-10));
}

#[test]
fn gaussian_sample_statistics() {
    let n = 1_000_000;
    let xs = gaussian_vec(12345, 6, n);
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // the standard error of the mean is 1e-3
    assert!(mean.abs() <= 5e-3, "mean {mean}");
    assert!((var - 1.0).abs() <= 0.01, "variance {var}");
}
