//! Matrix-free solves with `AᵀA` by conjugate gradients on the normal
//! operator `z ↦ Aᵀ(A·z)`.
//!
//! Only products with `A` and `Aᵀ` are requested; `AᵀA` is never formed.
//! CG on the normal equations squares the condition number of `A`, so this
//! backend is meant for well-conditioned problems.

use crate::dense::{dot, mat_t_vec, mat_vec, norm2, DenseMatrix};
use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;
use crate::woodbury::{prepare, Backend, PreparedBase};

/// Anything that can apply `A` and `Aᵀ` to vectors.
pub trait LinearOperator<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A·x`
    fn apply(&self, x: &[T]) -> Vec<T>;
    /// `Aᵀ·y`
    fn apply_transpose(&self, y: &[T]) -> Vec<T>;
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        mat_vec(self, x).expect("operator dimensions checked by caller")
    }

    fn apply_transpose(&self, y: &[T]) -> Vec<T> {
        mat_t_vec(self, y).expect("operator dimensions checked by caller")
    }
}

/// Stopping rule for [`normal_cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeConfig<T> {
    /// Target for `‖AᵀA·z − c‖₂ / ‖c‖₂`.
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Scalar> IterativeConfig<T> {
    pub fn new(tol: T, max_iters: usize) -> Result<Self> {
        if !(tol > T::zero()) || max_iters == 0 {
            return Err(LinalgError::dims(
                "IterativeConfig",
                "tol > 0 and max_iters >= 1",
                format!("tol = {tol:e}, max_iters = {max_iters}"),
            ));
        }
        Ok(Self { tol, max_iters })
    }

    /// `tol = 1e-12` (clamped to a few ulps in single precision) and
    /// `max_iters = 4n`.
    pub fn default_for(n: usize) -> Self {
        Self {
            tol: T::lit(1e-12).max(T::lit(8.0) * T::epsilon()),
            max_iters: 4 * n.max(1),
        }
    }
}

/// Result of [`normal_cg_solve`] with per-column iteration counts.
#[derive(Debug, Clone)]
pub struct CgSolution<T> {
    pub z: DenseMatrix<T>,
    pub iterations: Vec<usize>,
}

/// Solves `AᵀA·Z = C` column by column.
pub fn normal_cg_solve<T: Scalar, O: LinearOperator<T> + ?Sized>(
    a: &O,
    c: &DenseMatrix<T>,
    cfg: &IterativeConfig<T>,
) -> Result<CgSolution<T>> {
    if c.rows() != a.ncols() {
        return Err(LinalgError::dims(
            "normal_cg_solve",
            format!("{} rows in C", a.ncols()),
            format!("{} rows", c.rows()),
        ));
    }
    let mut z = DenseMatrix::zeros(c.rows(), c.cols());
    let mut iterations = Vec::with_capacity(c.cols());
    for j in 0..c.cols() {
        let its = cg_column(a, c.col(j), z.col_mut(j), cfg).map_err(|e| match e {
            LinalgError::ConvergenceFailure {
                iterations,
                residual,
                ..
            } => LinalgError::ConvergenceFailure {
                column: j,
                iterations,
                residual,
            },
            other => other,
        })?;
        iterations.push(its);
    }
    Ok(CgSolution { z, iterations })
}

/// Prepared base whose `AᵀA`-solver is [`normal_cg_solve`] and whose `x0`
/// solves `AᵀA·x0 = Aᵀb` with the same iteration.
pub fn make_iterative_base<T: Scalar>(
    a: DenseMatrix<T>,
    b: &[T],
    cfg: IterativeConfig<T>,
) -> Result<PreparedBase<T>> {
    prepare(a, Some(b), Backend::Cg(cfg))
}

fn normal_apply<T: Scalar, O: LinearOperator<T> + ?Sized>(a: &O, x: &[T]) -> Vec<T> {
    a.apply_transpose(&a.apply(x))
}

fn cg_column<T: Scalar, O: LinearOperator<T> + ?Sized>(
    a: &O,
    c: &[T],
    x: &mut [T],
    cfg: &IterativeConfig<T>,
) -> Result<usize> {
    let c_norm = norm2(c);
    x.fill(T::zero());
    if c_norm == T::zero() {
        return Ok(0);
    }
    let target = cfg.tol * c_norm;
    let mut r = c.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut last_true = c_norm;
    for it in 1..=cfg.max_iters {
        let ap = a.apply(&p);
        let pap = dot(&ap, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let q = a.apply_transpose(&ap);
        let alpha = rr / pap;
        for (xi, &pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, &qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            // The recurrence drifts from the true residual; confirm before
            // stopping and restart from the true residual otherwise.
            let ax = normal_apply(a, x);
            for ((ri, &ci), &axi) in r.iter_mut().zip(c).zip(&ax) {
                *ri = ci - axi;
            }
            let rr_true = dot(&r, &r);
            last_true = rr_true.sqrt();
            if last_true <= target {
                return Ok(it);
            }
            rr = rr_true;
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        last_true = rr.sqrt();
    }
    Err(LinalgError::ConvergenceFailure {
        column: 0,
        iterations: cfg.max_iters,
        residual: (last_true / c_norm).to_f64().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{mat_mul, qr_thin};
    use std::cell::Cell;

    fn test_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut s = seed;
        DenseMatrix::from_fn(m, n, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let c = DenseMatrix::from_row_major(3, 2, &[1.0, -2.0, 3.0, 0.5, 0.0, 4.0]).unwrap();
        let sol = normal_cg_solve(
            &DenseMatrix::identity(3),
            &c,
            &IterativeConfig::default_for(3),
        )
        .unwrap();
        assert_eq!(sol.z, c);
        assert_eq!(sol.iterations, vec![1, 1]);
    }

    #[test]
    fn finite_termination_on_distinct_eigenvalues() {
        // squared singular values {1, 4, 9}, repeated
        let diag = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 3.0];
        let n = diag.len();
        let a = DenseMatrix::from_fn(n + 2, n, |i, j| if i == j { diag[j] } else { 0.0 });
        let c = DenseMatrix::from_fn(n, 1, |i, _| 1.0 + i as f64);
        let sol = normal_cg_solve(&a, &c, &IterativeConfig::default_for(n)).unwrap();
        assert!(sol.iterations[0] <= 3, "{:?}", sol.iterations);
        for i in 0..n {
            assert!((sol.z[(i, 0)] - c[(i, 0)] / (diag[i] * diag[i])).abs() < 1e-13);
        }
    }

    #[test]
    fn matches_qr_route() {
        let a = test_matrix(200, 20, 7);
        let c = test_matrix(20, 3, 8);
        let cg = normal_cg_solve(&a, &c, &IterativeConfig::default_for(20)).unwrap();
        let qr = qr_thin(&a).unwrap().solve_normal(&c).unwrap();
        let rel = cg.z.sub(&qr).unwrap().frobenius_norm() / qr.frobenius_norm();
        assert!(rel < 1e-8, "{rel}");
        let ata = mat_mul(&a, &a, true).unwrap();
        let res = mat_mul(&ata, &cg.z, false).unwrap().sub(&c).unwrap();
        for j in 0..3 {
            assert!(norm2(res.col(j)) <= 1e-12 * norm2(c.col(j)) * 1.0001);
        }
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let a = test_matrix(10, 4, 1);
        let sol = normal_cg_solve(
            &a,
            &DenseMatrix::zeros(4, 1),
            &IterativeConfig::default_for(4),
        )
        .unwrap();
        assert_eq!(sol.iterations, vec![0]);
    }

    #[test]
    fn reports_non_convergence() {
        let a = test_matrix(50, 30, 3);
        let c = test_matrix(30, 2, 4);
        let cfg = IterativeConfig::new(1e-14, 2).unwrap();
        match normal_cg_solve(&a, &c, &cfg) {
            Err(LinalgError::ConvergenceFailure {
                column, iterations, ..
            }) => {
                assert_eq!(column, 0);
                assert_eq!(iterations, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iterative_base_small_cases() {
        let b = [1.0f64, -3.0, 2.5];
        let base = make_iterative_base(
            DenseMatrix::identity(3),
            &b,
            IterativeConfig::default_for(3),
        )
        .unwrap();
        assert_eq!(base.x0().unwrap(), &b);

        let (c, s) = (0.6, 0.8);
        let a = DenseMatrix::from_row_major(3, 2, &[c, 0.0, s, 0.0, 0.0, 1.0]).unwrap();
        let base = make_iterative_base(a.clone(), &b, IterativeConfig::default_for(2)).unwrap();
        let atb = mat_t_vec(&a, &b).unwrap();
        for (x, e) in base.x0().unwrap().iter().zip(&atb) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(IterativeConfig::new(0.0, 5).is_err());
        assert!(IterativeConfig::new(1e-8, 0).is_err());
        assert!(IterativeConfig::<f64>::new(f64::NAN, 5).is_err());
    }

    /// Operator that counts products and only ever hands out vectors.
    struct Counting<'a> {
        a: &'a DenseMatrix<f64>,
        forward: Cell<usize>,
        backward: Cell<usize>,
    }

    impl LinearOperator<f64> for Counting<'_> {
        fn nrows(&self) -> usize {
            self.a.rows()
        }
        fn ncols(&self) -> usize {
            self.a.cols()
        }
        fn apply(&self, x: &[f64]) -> Vec<f64> {
            assert_eq!(x.len(), self.a.cols());
            self.forward.set(self.forward.get() + 1);
            self.a.apply(x)
        }
        fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
            assert_eq!(y.len(), self.a.rows());
            self.backward.set(self.backward.get() + 1);
            self.a.apply_transpose(y)
        }
    }

    #[test]
    fn matrix_free_products_only() {
        let a = test_matrix(60, 12, 21);
        let op = Counting {
            a: &a,
            forward: Cell::new(0),
            backward: Cell::new(0),
        };
        let c = test_matrix(12, 2, 22);
        let sol = normal_cg_solve(&op, &c, &IterativeConfig::default_for(12)).unwrap();
        let its: usize = sol.iterations.iter().sum();
        // one A and one Aᵀ product per iteration plus the residual checks
        assert!(op.forward.get() >= its && op.forward.get() <= its + 2 * 2 * its);
        assert_eq!(op.forward.get(), op.backward.get());
    }
}
