use thiserror::Error;

/// Failure modes shared by every numerical layer of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("step size underflow at x = {x} (lambda = {lambda})")]
    StepUnderflow { x: f64, lambda: f64 },
    #[error("lambda = {lambda} is outside the closure of gap {gap}")]
    OutsideGap { lambda: f64, gap: usize },
    #[error("m_+ has a pole at lambda = {lambda}")]
    PoleAt { lambda: f64 },
    #[error("bracketing failed: {0}")]
    BracketFailure(String),
    #[error("root count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("gap {gap} carries no bound state")]
    NotBoundState { gap: usize },
    #[error("only {found} resolvable points, at least 4 required")]
    InsufficientPoints { found: usize },
    #[error("potential is not normalized: lambda_0^+ = {edge}")]
    NotNormalized { edge: f64 },
    #[error("more than one eigenvalue found in gap {gap}")]
    MultipleRoots { gap: usize },
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },
    #[error("Jacobian condition number {condition:e} exceeds 1e10")]
    IllConditioned { condition: f64 },
    #[error("target state signs unreachable from every restart")]
    SignUnreachable,
    #[error("postcondition failed: {0}")]
    PostconditionFail(String),
    #[error("rho = {rho} is not positive")]
    RhoNotPositive { rho: f64 },
    #[error("separating interval I_{n} lies {distance} from the a.c. spectrum (< 2 kappa)")]
    SeparationFail { n: usize, distance: f64 },
    #[error("factor {factor} has no ground state")]
    NoGroundState { factor: usize },
    #[error("eigenvalue count changed from {before} to {after}")]
    CountChanged { before: usize, after: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;
