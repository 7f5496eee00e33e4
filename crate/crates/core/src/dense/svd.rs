use crate::dense::blas::{dot, norm2};
use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Intended for test-scale matrices; cost is `O(sweeps·min(m,n)²·max(m,n))`.
pub fn singular_values<T: Scalar>(a: &DenseMatrix<T>) -> Vec<T> {
    let mut w = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let n = w.cols();
    let m = w.rows();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let data = w.as_mut_slice();
                let (left, right) = data.split_at_mut(q * m);
                let cp = &mut left[p * m..(p + 1) * m];
                let cq = &mut right[..m];
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..n).map(|j| norm2(w.col(j))).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Number of singular values strictly greater than `tol·σ_max`.
pub fn numerical_rank<T: Scalar>(a: &DenseMatrix<T>, tol: T) -> usize {
    debug_assert!(tol >= T::zero(), "rank tolerance must be nonnegative");
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(T::zero());
    if smax == T::zero() {
        return 0;
    }
    let cut = tol.max(T::zero()) * smax;
    sv.iter().filter(|&&s| s > cut).count()
}

/// 2-norm condition number `σ_max/σ_min`; infinite for rank-deficient input.
pub fn condition_number<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let sv = singular_values(a);
    let smin = *sv.last().expect("nonempty matrix");
    if smin == T::zero() {
        T::infinity()
    } else {
        sv[0] / smin
    }
}
