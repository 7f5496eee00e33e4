use thiserror::Error;

/// Failures raised by the dense kernels and the solvers built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is numerically rank deficient: |R[{index},{index}]| = {diag:e} <= {tol:e}")]
    RankDeficient { index: usize, diag: f64, tol: f64 },

    #[error("triangular matrix has a zero diagonal entry at {index}")]
    Singular { index: usize },

    #[error("capacitance matrix is singular (rcond = {rcond:e}, threshold = {threshold:e}); the updated matrix is rank deficient")]
    SingularCapacitance { rcond: f64, threshold: f64 },

    #[error("iterative solve did not converge: column {column} reached residual {residual:e} after {iterations} iterations")]
    ConvergenceFailure {
        column: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize },

    #[error("{op} is limited to {cap} rows, got {rows}")]
    SizeCap {
        op: &'static str,
        cap: usize,
        rows: usize,
    },
}

impl LinalgError {
    pub(crate) fn dims(
        op: &'static str,
        expected: impl Into<String>,
        found: impl Into<String>,
    ) -> Self {
        LinalgError::DimensionMismatch {
            op,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

pub type Result<T, E = LinalgError> = std::result::Result<T, E>;
