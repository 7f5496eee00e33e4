use crate::dense::blas::{axpy, dot};
use crate::dense::DenseMatrix;
use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;

/// Solves `R·X = B`, or `Rᵀ·X = B` when `transpose` is set, for upper
/// triangular `R`. Entries below the diagonal of `r` are ignored.
pub fn solve_upper_triangular<T: Scalar>(
    r: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    transpose: bool,
) -> Result<DenseMatrix<T>> {
    let n = r.rows();
    if !r.is_square() || b.rows() != n {
        return Err(LinalgError::dims(
            "solve_upper_triangular",
            format!("square R and {} rows in B", r.rows()),
            format!("R {}x{}, B {}x{}", r.rows(), r.cols(), b.rows(), b.cols()),
        ));
    }
    if let Some(index) = (0..n).find(|&i| r[(i, i)] == T::zero()) {
        return Err(LinalgError::Singular { index });
    }
    let mut x = b.clone();
    for c in 0..x.cols() {
        let xc = x.col_mut(c);
        if transpose {
            // forward substitution with column j of R as row j of Rᵀ
            for j in 0..n {
                let rj = r.col(j);
                xc[j] = (xc[j] - dot(&rj[..j], &xc[..j])) / rj[j];
            }
        } else {
            for j in (0..n).rev() {
                let rj = r.col(j);
                xc[j] /= rj[j];
                let xj = xc[j];
                axpy(-xj, &rj[..j], &mut xc[..j]);
            }
        }
    }
    Ok(x)
}
