//! Argument parsing and exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | any other failure |
//! | 2 | usage error (bad or missing flags) |
//! | 3 | unreadable, unwritable or malformed file |
//! | 4 | operand shapes do not fit together |
//! | 5 | `A` or `A + UVᵀ` is rank deficient |
//! | 6 | singular capacitance matrix (the update drops the rank) |
//! | 7 | iterative backend did not converge |

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use woodbury_ls::io::{read_matrix, write_bench_csv, write_matrix, IoError};
use woodbury_ls::woodbury::prepare_with_x0;
use woodbury_ls::{build_workspace, prepare, solve_updated, LinalgError, LowRankUpdate, Matrix};

use crate::bench::{median_speedups, run_benchmark_with, BackendKind, BenchConfig};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIMENSION: i32 = 4;
pub const EXIT_RANK_DEFICIENT: i32 = 5;
pub const EXIT_SINGULAR_CAPACITANCE: i32 = 6;
pub const EXIT_NO_CONVERGENCE: i32 = 7;

#[derive(Debug, Parser)]
#[command(
    name = "woodbury-ls",
    version,
    about = "Least squares with low-rank updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve min ‖b − (A + UVᵀ)x‖ from MatrixMarket files.
    Solve {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: PathBuf,
        /// Precomputed solution of the unmodified problem.
        #[arg(long)]
        x0: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BackendKind::Qr)]
        backend: BackendKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time scratch QR solves against updated solves on Gaussian problems.
    Bench {
        #[arg(long)]
        m: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        r_list: Vec<usize>,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendKind::Qr)]
        backend: BackendKind,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the command line `argv` (program name first) and returns the
/// process exit code.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Exit code for a failed command; see the module docs.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<LinalgError>() {
            return match e {
                LinalgError::DimensionMismatch { .. } | LinalgError::SizeCap { .. } => {
                    EXIT_DIMENSION
                }
                LinalgError::RankDeficient { .. } | LinalgError::Singular { .. } => {
                    EXIT_RANK_DEFICIENT
                }
                LinalgError::SingularCapacitance { .. } => EXIT_SINGULAR_CAPACITANCE,
                LinalgError::ConvergenceFailure { .. } => EXIT_NO_CONVERGENCE,
                LinalgError::NonFiniteValue { .. } => EXIT_IO,
            };
        }
        if cause.downcast_ref::<IoError>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_OTHER
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve {
            a,
            b,
            u,
            v,
            x0,
            backend,
            out,
        } => {
            let x = solve_files(&a, &b, &u, &v, x0.as_deref(), backend)?;
            let x = Matrix::column_vector(&x)?;
            write_matrix(&out, &x).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Command::Bench {
            m,
            n_list,
            r_list,
            reps,
            seed,
            backend,
            out,
        } => {
            let cfg = BenchConfig {
                m,
                n_list,
                r_list,
                reps,
                seed,
                backend,
                out_path: out,
            };
            let records = run_benchmark_with(&cfg, |rec| {
                eprintln!(
                    "n={} r={} rep={} speedup={:.2} err={:.2e}",
                    rec.n, rec.r, rec.rep, rec.speedup, rec.rel_forward_error
                );
            })?;
            write_bench_csv(&cfg.out_path, &records)
                .with_context(|| format!("writing {}", cfg.out_path.display()))?;
            for (n, r, s) in median_speedups(&records) {
                println!("n={n} r={r} median speedup {s:.2}");
            }
            Ok(())
        }
    }
}

fn load(path: &std::path::Path) -> Result<Matrix> {
    read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn load_vector(path: &std::path::Path) -> Result<Vec<f64>> {
    let m = load(path)?;
    if m.cols() != 1 {
        bail!(LinalgError::DimensionMismatch {
            op: "reading vector",
            expected: "a single column".into(),
            found: format!("{}x{} in {}", m.rows(), m.cols(), path.display()),
        });
    }
    Ok(m.into_vec())
}

fn solve_files(
    a: &std::path::Path,
    b: &std::path::Path,
    u: &std::path::Path,
    v: &std::path::Path,
    x0: Option<&std::path::Path>,
    backend: BackendKind,
) -> Result<Vec<f64>> {
    let a = load(a)?;
    let b = load_vector(b)?;
    let upd = LowRankUpdate::new(load(u)?, load(v)?)?;
    let backend = backend.backend(a.cols());
    let base = match x0 {
        Some(path) => prepare_with_x0(a, &b, load_vector(path)?, backend)?,
        None => prepare(a, Some(&b[..]), backend)?,
    };
    let ws = build_workspace(&base, &upd)?;
    Ok(solve_updated(&base, &upd, &ws, &b)?.x)
}
