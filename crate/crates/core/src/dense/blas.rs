//! Level-1/2/3 style kernels on column-major storage.
//!
//! Every product column is computed independently of the other columns with
//! a fixed summation order, so `mat_mul(a, b)` column `j` is bitwise equal to
//! `mat_mul(a, b[:, j])`.

use crate::dense::tiles::tn_tile;
use crate::dense::DenseMatrix;
use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;

pub(crate) const LANES: usize = 8;

#[inline(always)]
fn reduce<T: Scalar>(acc: &[T; LANES], tail: T) -> T {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Inner product with eight interleaved partial sums.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    reduce(&acc, tail)
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2<T: Scalar>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

/// `y += a0*x0 + a1*x1 + a2*x2 + a3*x3`, grouped so the sum is formed before
/// touching `y`.
#[inline]
fn axpy4<T: Scalar>(alpha: [T; 4], x: [&[T]; 4], y: &mut [T]) {
    let n = y.len();
    let (x0, x1, x2, x3) = (&x[0][..n], &x[1][..n], &x[2][..n], &x[3][..n]);
    for r in 0..n {
        y[r] += alpha[0] * x0[r] + alpha[1] * x1[r] + alpha[2] * x2[r] + alpha[3] * x3[r];
    }
}

/// `y += A * x` for column-major `a` with `a.len() == y.len() * x.len()`.
fn gemv_acc<T: Scalar>(a: &[T], rows: usize, x: &[T], y: &mut [T]) {
    let k = x.len();
    let col = |p: usize| &a[p * rows..(p + 1) * rows];
    let mut p = 0;
    while p + 4 <= k {
        axpy4(
            [x[p], x[p + 1], x[p + 2], x[p + 3]],
            [col(p), col(p + 1), col(p + 2), col(p + 3)],
            y,
        );
        p += 4;
    }
    while p < k {
        axpy(x[p], col(p), y);
        p += 1;
    }
}

/// Product `A·B`, or `Aᵀ·B` when `transpose_a` is set.
pub fn mat_mul<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    transpose_a: bool,
) -> Result<DenseMatrix<T>> {
    if transpose_a {
        if a.rows() != b.rows() {
            return Err(LinalgError::dims(
                "mat_mul (transposed)",
                format!("{} rows in b", a.rows()),
                format!("{} rows", b.rows()),
            ));
        }
        let (m, n) = (a.cols(), b.cols());
        let mut c = DenseMatrix::zeros(m, n);
        // Each entry is the same lane-interleaved inner product whatever the
        // tile shape, so columns stay independent of their neighbours.
        let mut i = 0;
        while i < m {
            let ni = if i + 4 <= m { 4 } else { 1 };
            let mut j = 0;
            while j < n {
                let nj = if j + 4 <= n { 4 } else { 1 };
                match (ni, nj) {
                    (4, 4) => {
                        let d = tn_tile::<T, 4, 4>(
                            [a.col(i), a.col(i + 1), a.col(i + 2), a.col(i + 3)],
                            [b.col(j), b.col(j + 1), b.col(j + 2), b.col(j + 3)],
                        );
                        for (di, row) in d.iter().enumerate() {
                            for (dj, &v) in row.iter().enumerate() {
                                c[(i + di, j + dj)] = v;
                            }
                        }
                    }
                    (4, _) => {
                        let d = tn_tile::<T, 4, 1>(
                            [a.col(i), a.col(i + 1), a.col(i + 2), a.col(i + 3)],
                            [b.col(j)],
                        );
                        for (di, row) in d.iter().enumerate() {
                            c[(i + di, j)] = row[0];
                        }
                    }
                    (_, 4) => {
                        let d = tn_tile::<T, 1, 4>(
                            [a.col(i)],
                            [b.col(j), b.col(j + 1), b.col(j + 2), b.col(j + 3)],
                        );
                        for (dj, &v) in d[0].iter().enumerate() {
                            c[(i, j + dj)] = v;
                        }
                    }
                    _ => c[(i, j)] = tn_tile::<T, 1, 1>([a.col(i)], [b.col(j)])[0][0],
                }
                j += nj;
            }
            i += ni;
        }
        Ok(c)
    } else {
        if a.cols() != b.rows() {
            return Err(LinalgError::dims(
                "mat_mul",
                format!("{} rows in b", a.cols()),
                format!("{} rows", b.rows()),
            ));
        }
        let (m, n) = (a.rows(), b.cols());
        let mut c = DenseMatrix::zeros(m, n);
        for j in 0..n {
            gemv_acc(a.as_slice(), m, b.col(j), c.col_mut(j));
        }
        Ok(c)
    }
}

/// `A·x` for a plain vector.
pub fn mat_vec<T: Scalar>(a: &DenseMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    if a.cols() != x.len() {
        return Err(LinalgError::dims(
            "mat_vec",
            format!("vector of length {}", a.cols()),
            format!("length {}", x.len()),
        ));
    }
    let mut y = vec![T::zero(); a.rows()];
    gemv_acc(a.as_slice(), a.rows(), x, &mut y);
    Ok(y)
}

/// `Aᵀ·y` for a plain vector.
pub fn mat_t_vec<T: Scalar>(a: &DenseMatrix<T>, y: &[T]) -> Result<Vec<T>> {
    if a.rows() != y.len() {
        return Err(LinalgError::dims(
            "mat_t_vec",
            format!("vector of length {}", a.rows()),
            format!("length {}", y.len()),
        ));
    }
    Ok((0..a.cols()).map(|j| dot(a.col(j), y)).collect())
}

/// `A += U·Vᵀ` in place.
pub fn add_outer_product<T: Scalar>(
    a: &mut DenseMatrix<T>,
    u: &DenseMatrix<T>,
    v: &DenseMatrix<T>,
) -> Result<()> {
    if u.rows() != a.rows() || v.rows() != a.cols() || u.cols() != v.cols() {
        return Err(LinalgError::dims(
            "add_outer_product",
            format!("U {}x_ and V {}x_ with equal widths", a.rows(), a.cols()),
            format!("U {}x{}, V {}x{}", u.rows(), u.cols(), v.rows(), v.cols()),
        ));
    }
    let m = a.rows();
    let r = u.cols();
    let mut coeff = vec![T::zero(); r];
    for j in 0..a.cols() {
        for (k, c) in coeff.iter_mut().enumerate() {
            *c = v[(j, k)];
        }
        gemv_acc(u.as_slice(), m, &coeff, a.col_mut(j));
    }
    Ok(())
}
