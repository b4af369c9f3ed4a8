use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid modulus {0}: expected a prime p >= 5")]
    InvalidPrime(u64),

    #[error("{0} is a quadratic residue mod {1}, expected a non-residue")]
    NotNonResidue(u64, u64),

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unitary eigenbasis failed: eigenvector residual {residual:e} after {attempts} attempts")]
    DegenerateSpectrum { residual: f64, attempts: usize },

    #[error("scaling generator requires a nonzero element")]
    ZeroScaling,

    #[error("matrix [[{a},{b}],[{c},{d}]] has determinant {det} != 1 mod {p}")]
    NotUnimodular { a: u64, b: u64, c: u64, d: u64, det: u64, p: u64 },

    #[error("coherence violation: sqrt(p)*|<x,y>| = {observed} exceeds mu = {mu}")]
    CoherenceViolation { observed: f64, mu: f64 },

    #[error("basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("expected {expected} tori, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("support size {n} exceeds dictionary size {size}")]
    NTooLarge { n: usize, size: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("path class is not a tree")]
    NotATree,

    #[error("vertex {0} is not visited exactly once by the path")]
    VertexNotSingleVisit(usize),

    #[error("malformed dictionary file: {0}")]
    Format(String),

    #[error("unsupported dictionary file version {0}")]
    VersionMismatch(u32),

    #[error("dictionary integrity check failed: {0}")]
    IntegrityFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
