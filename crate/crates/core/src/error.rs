use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("step size underflow at path parameter {s} (time {time}); trajectory is running away")]
    StepUnderflow { s: f64, time: Complex64 },

    #[error("hamiltonian is not analytic: {0}")]
    NonAnalyticHamiltonian(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("invalid packet shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid time path: {0}")]
    InvalidPath(String),

    #[error("phase increment {jump} at sample {index} is not below pi/2")]
    PhaseJumpTooLarge { index: usize, jump: f64 },

    #[error("determinant vanishes at sample {index} (|D| = {modulus:e})")]
    ZeroDeterminant { index: usize, modulus: f64 },

    #[error("newton search did not converge after {iterations} iterations (|residual| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("newton jacobian is singular (|det| = {determinant:e})")]
    SingularJacobian { determinant: f64 },

    #[error("foliation unresolved between samples {index} and {next}: turning-point counts {count} and {next_count}")]
    UnresolvedFoliation { index: usize, next: usize, count: usize, next_count: usize },

    #[error("continuation stuck after step {step} (step fraction {fraction:e})")]
    StuckContinuation { step: usize, fraction: f64 },

    #[error("determinant zero lies on a search cell boundary near t = {time}")]
    BoundaryZero { time: Complex64 },

    #[error("saddle has no real seed trajectory")]
    MissingSeed,

    #[error("ambiguous total-phase jump {jump} between family members {index} and {next}")]
    AmbiguousJump { index: usize, next: usize, jump: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}
