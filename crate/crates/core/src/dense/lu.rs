use crate::dense::DenseMatrix;
use crate::error::{LinalgError, Result};
use crate::scalar::Scalar;

/// Default pivot threshold factor: a pivot is rejected when
/// `|u_kk| <= p·ε·max|C_ij|`.
pub fn default_pivot_tol<T: Scalar>(p: usize) -> T {
    T::from_usize_lossy(p) * T::epsilon()
}

/// LU factorization with partial pivoting of a small square matrix, plus its
/// reciprocal 1-norm condition number.
///
/// The matrices this is used for are `2r×2r`, so the condition number is
/// computed exactly from the explicit inverse rather than estimated.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    rcond: T,
}

impl<T: Scalar> LuFactors<T> {
    pub fn new(c: &DenseMatrix<T>) -> Result<Self> {
        Self::with_pivot_tol(c, default_pivot_tol::<T>(c.rows()))
    }

    pub fn with_pivot_tol(c: &DenseMatrix<T>, pivot_tol: T) -> Result<Self> {
        if !c.is_square() {
            return Err(LinalgError::dims(
                "lu",
                "a square matrix",
                format!("{}x{}", c.rows(), c.cols()),
            ));
        }
        let p = c.rows();
        let scale = c.max_abs();
        let threshold = pivot_tol * scale;
        let mut lu = c.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        for k in 0..p {
            let (piv, pmax) =
                (k..p)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold(
                        (k, -T::one()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pmax <= threshold || pmax == T::zero() {
                let ratio = if scale > T::zero() {
                    pmax / scale
                } else {
                    T::zero()
                };
                return Err(LinalgError::SingularCapacitance {
                    rcond: ratio.to_f64().unwrap_or(0.0),
                    threshold: pivot_tol.to_f64().unwrap_or(0.0),
                });
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..p {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..p {
                lu[(i, k)] /= d;
            }
            for j in k + 1..p {
                let ukj = lu[(k, j)];
                if ukj == T::zero() {
                    continue;
                }
                for i in k + 1..p {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        let mut f = Self {
            lu,
            perm,
            rcond: T::zero(),
        };
        let inv = f.solve(&DenseMatrix::identity(p))?;
        let norm1 = |m: &DenseMatrix<T>| {
            (0..m.cols())
                .map(|j| m.col(j).iter().fold(T::zero(), |a, &v| a + v.abs()))
                .fold(T::zero(), T::max)
        };
        f.rcond = T::one() / (norm1(c) * norm1(&inv));
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Reciprocal condition number `1 / (‖C‖₁·‖C⁻¹‖₁)`.
    pub fn rcond(&self) -> T {
        self.rcond
    }

    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let p = self.dim();
        if b.rows() != p {
            return Err(LinalgError::dims(
                "lu solve",
                format!("{p} rows"),
                format!("{} rows", b.rows()),
            ));
        }
        let mut x = DenseMatrix::zeros(p, b.cols());
        for c in 0..b.cols() {
            let bc = b.col(c);
            let xc = x.col_mut(c);
            for (i, &pi) in self.perm.iter().enumerate() {
                xc[i] = bc[pi];
            }
            for j in 0..p {
                let xj = xc[j];
                for i in j + 1..p {
                    xc[i] -= self.lu[(i, j)] * xj;
                }
            }
            for j in (0..p).rev() {
                xc[j] /= self.lu[(j, j)];
                let xj = xc[j];
                for i in 0..j {
                    xc[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        Ok(x)
    }
}

/// Solution of `C·X = B` together with the reciprocal condition of `C`.
#[derive(Debug, Clone)]
pub struct LuSolution<T> {
    pub x: DenseMatrix<T>,
    pub rcond: T,
}

/// Factor `c` with partial pivoting and solve for every column of `b`.
pub fn lu_solve<T: Scalar>(c: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<LuSolution<T>> {
    let f = LuFactors::new(c)?;
    Ok(LuSolution {
        x: f.solve(b)?,
        rcond: f.rcond(),
    })
}
