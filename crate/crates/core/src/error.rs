//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("points live on different manifolds: {0} vs {1}")]
    ManifoldMismatch(String, String),

    #[error("matrix is not Hermitian: symmetry residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is not complex symmetric: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { residual: f64, tol: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("scalar function undefined at eigenvalue {eig:.3e}")]
    MatrixFunctionDomain { eig: f64 },

    #[error("point leaves the unit disc: |coefficient| = {modulus}")]
    OutsideDisc { modulus: f64 },

    #[error("group element fails membership identities (residual {residual:.3e})")]
    NotInGroup { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("barycentre did not converge in {iterations} iterations (gradient norm {grad_norm:.3e})")]
    BarycentreNoConvergence { iterations: usize, grad_norm: f64 },

    #[error("sigma {sigma} outside table range [{min}, {max}]")]
    SigmaOutOfRange { sigma: f64, min: f64, max: f64 },

    #[error("dispersion {rho:.6e} outside the range [{min:.6e}, {max:.6e}] covered by the table")]
    RhoOutOfRange { rho: f64, min: f64, max: f64 },

    #[error("degenerate fit: all samples coincide (zero dispersion)")]
    DegenerateFit,

    #[error("Monte Carlo estimate too noisy: relative stderr {rel_stderr:.3e} exceeds budget {budget:.3e}")]
    McPrecision { rel_stderr: f64, budget: f64 },

    #[error("table rejected: log Z not convex in eta at grid index {index}")]
    ConvexityViolation { index: usize },

    #[error("exponential map left the disc domain (overflow)")]
    ExpMapOverflow,

    #[error("unsupported schema version {got} (supported major: {supported})")]
    SchemaVersion { got: u32, supported: u32 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
