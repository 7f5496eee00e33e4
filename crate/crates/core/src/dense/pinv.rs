use crate::dense::{qr_thin, solve_upper_triangular, DenseMatrix};
use crate::error::Result;
use crate::scalar::Scalar;

/// Explicit pseudoinverse `A† = R⁻¹·Qᵀ` of a full column rank tall matrix.
pub fn pinv_oracle<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let f = qr_thin(a)?;
    solve_upper_triangular(&f.r, &f.q.transpose(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::mat_mul;
    use crate::error::LinalgError;

    #[test]
    fn identity_pinv() {
        assert_eq!(
            pinv_oracle(&DenseMatrix::<f64>::identity(3)).unwrap(),
            DenseMatrix::identity(3)
        );
    }

    #[test]
    fn scaled_embedding() {
        let a = DenseMatrix::from_row_major(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let p = pinv_oracle(&a).unwrap();
        let expected = DenseMatrix::from_row_major(2, 3, &[0.5, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(p.sub(&expected).unwrap().max_abs() < 1e-15);
        // Penrose conditions
        let ap = mat_mul(&a, &p, false).unwrap();
        let apa = mat_mul(&ap, &a, false).unwrap();
        assert!(apa.sub(&a).unwrap().max_abs() < 1e-15);
        assert!(ap.sub(&ap.transpose()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn orthonormal_columns_give_transpose() {
        let c = 0.6;
        let s = 0.8;
        let a = DenseMatrix::from_row_major(3, 2, &[c, 0.0, s, 0.0, 0.0, 1.0]).unwrap();
        let p = pinv_oracle(&a).unwrap();
        assert!(p.sub(&a.transpose()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_propagates() {
        let a = DenseMatrix::from_row_major(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        assert!(matches!(
            pinv_oracle(&a),
            Err(LinalgError::RankDeficient { .. })
        ));
    }
}
