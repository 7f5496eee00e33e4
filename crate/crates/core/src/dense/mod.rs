//! Minimal dense real linear algebra over column-major storage.

mod blas;
mod lu;
mod matrix;
mod pinv;
mod qr;
mod svd;
mod tiles;
mod triangular;

pub use blas::{add_outer_product, axpy, dot, mat_mul, mat_t_vec, mat_vec, norm2};
pub use lu::{default_pivot_tol, lu_solve, LuFactors, LuSolution};
pub use matrix::DenseMatrix;
pub use pinv::pinv_oracle;
pub use qr::{default_rank_tol, qr_thin, qr_thin_with_tol, QrFactors};
pub use svd::{condition_number, numerical_rank, singular_values};
pub use triangular::solve_upper_triangular;
