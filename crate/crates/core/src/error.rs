use thiserror::Error;

/// Errors shared by every stage of the toolkit.
#[derive(Debug, Error)]
pub enum WaveError {
    /// State evaluation left the physical domain (negative thickness or intensity).
    #[error("non-physical state: {0}")]
    NonPhysical(String),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    /// No admissible finite-difference step met the error target.
    #[error("step underflow: {0}")]
    StepUnderflow(String),

    #[error("point is not critical: scaled |det D_k B| = {det:.3e} exceeds tolerance {tol:.3e}")]
    NotCritical { det: f64, tol: f64 },

    /// The zero eigenvalue of D_k B is not simple; out of scope, reported.
    #[error("degenerate kernel of D_k B (zero eigenvalue not simple)")]
    DegenerateKernel,

    #[error("delta system not solvable: Fredholm residual {0:.3e}")]
    NotSolvable(f64),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("seed rejected: {0}")]
    SeedInvalid(String),

    #[error("continuation step failed: {0}")]
    StepFailure(String),

    #[error("solution blow-up: {0}")]
    Blowup(String),

    /// The sech soliton branch requires a1/a2 > 0.
    #[error("invalid soliton branch: a1/a2 = {0:.6e} <= 0")]
    InvalidBranch(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, WaveError>;
