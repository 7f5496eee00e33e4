//! Least squares with low-rank updates.
//!
//! Solves `min ‖b − (A + U·Vᵀ)x‖₂` by reusing a factorization of the
//! unmodified `A`: after [`prepare`]-ing `A` once, each rank-`r` update costs
//! `2r` solves with `AᵀA` and a `2r×2r` linear system instead of a fresh QR
//! factorization of `A + U·Vᵀ`.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the CLI and the
//! benchmark use.
//!
//! ```
//! use woodbury_ls::{build_workspace, prepare, solve_updated, Backend, LowRankUpdate, Matrix};
//!
//! let a = Matrix::from_row_major(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
//! let b = [3.0, 4.0, 5.0];
//! let base = prepare(a, Some(&b[..]), Backend::Qr).unwrap();
//!
//! let u = Matrix::column_vector(&[0.0, 0.0, 1.0]).unwrap();
//! let v = Matrix::column_vector(&[1.0, 0.0]).unwrap();
//! let upd = LowRankUpdate::new(u, v).unwrap();
//! let ws = build_workspace(&base, &upd).unwrap();
//! let x = solve_updated(&base, &upd, &ws, &b).unwrap().x;
//! assert!((x[0] - 4.0).abs() < 1e-14 && (x[1] - 4.0).abs() < 1e-14);
//! ```

pub mod dense;
pub mod error;
pub mod io;
pub mod iterative;
pub mod scalar;
pub mod woodbury;

pub use dense::{
    lu_solve, mat_mul, numerical_rank, pinv_oracle, qr_thin, solve_upper_triangular, DenseMatrix,
    QrFactors,
};
pub use error::LinalgError;
pub use iterative::{make_iterative_base, normal_cg_solve, IterativeConfig};
pub use scalar::Scalar;
pub use woodbury::{
    baseline_solve, build_workspace, build_workspace_with, pinv_update_explicit, prepare,
    solve_many, solve_updated, Backend, LowRankUpdate, PreparedBase, SolveOutcome, UpdateWorkspace,
    WoodburyOptions,
};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Qr = QrFactors<f64>;
pub type Base = PreparedBase<f64>;
pub type Update = LowRankUpdate<f64>;
pub type Workspace = UpdateWorkspace<f64>;
pub type Outcome = SolveOutcome<f64>;
