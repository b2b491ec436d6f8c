use num_complex::Complex64;
use thiserror::Error;

/// Named hypotheses on spectral data checked before an inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Eigenvalues within one problem must be distinct.
    S1,
    /// Spectra of adjacent problems must not intersect.
    S2,
    /// Weight numbers must be nonzero.
    S3,
    /// The main equation must be uniquely solvable.
    S5,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::S1 => "S-1",
            Condition::S2 => "S-2",
            Condition::S3 => "S-3",
            Condition::S5 => "S-5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-differentiable representation (smoothness tag {0})")]
    NonDifferentiable(i32),

    #[error("insufficient smoothness: norm of order {needed} requested, function has tag {have}")]
    InsufficientSmoothness { needed: i32, have: i32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid coefficient set: {0}")]
    InvalidCoefficients(String),

    #[error("integrator overflow at lambda = {lambda}; refine the grid beyond M = {grid} or reduce |lambda|")]
    Overflow { lambda: Complex64, grid: usize },

    #[error("pole of Weyl-Yurko matrix at lambda = {lambda} (column {column})")]
    Pole { lambda: Complex64, column: usize },

    #[error("root search failed to converge for eigenvalue (l = {l}, k = {k})")]
    RootNotConverged { l: usize, k: usize },

    #[error("missing or extra eigenvalue for k = {k}: contour encloses {counted}, expected {expected}")]
    ContourMismatch { k: usize, counted: i64, expected: usize },

    #[error("multiple eigenvalue at (l = {l}, k = {k}): outside class W")]
    MultipleEigenvalue { l: usize, k: usize },

    #[error("spectral data violate condition ({condition}): {message}")]
    Validation { condition: Condition, message: String },

    #[error("main equation not uniquely solvable at x = {x:.6} (smallest singular value {sv_min:.3e}): condition (S-5) fails")]
    Singular { x: f64, sv_min: f64 },

    #[error("spectra not disjoint: lambda = {lambda} appears twice; perturb input by about {jitter:.1e}")]
    NotDisjoint { lambda: Complex64, jitter: f64 },

    #[error("combinatorial closure failed for n = {n}, s = {s}: d = {value}")]
    Closure { n: usize, s: usize, value: i64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status: 2 for rejected input, 1 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::NotDisjoint { .. }
            | Error::InvalidInput(_)
            | Error::InvalidCoefficients(_)
            | Error::DimensionMismatch { .. }
            | Error::Json(_)
            | Error::Csv(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn validation(condition: Condition, message: impl Into<String>) -> Self {
        Error::Validation {
            condition,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
