use noma_conic::{ConicError, SolveStatus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TradeoffError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// The rate thresholds cannot be met within the budget; callers are
    /// expected to fall back to plain sum-rate maximisation.
    #[error("infeasible: minimum transmit power {p_star:.6} W exceeds budget {p_ava:.6} W; fall back to SE-Max")]
    Infeasible { p_star: f64, p_ava: f64 },
    #[error("no feasible starting point: {0}")]
    NoFeasibleStart(String),
    #[error("linearisation point too close to z = 1 ({0:.3e})")]
    Guard(f64),
    #[error("subproblem {context} ended with status {status}")]
    Subproblem { context: String, status: SolveStatus },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("relaxation is not rank one (worst eigenvalue ratio {worst:.3e})")]
    RankFailure { ratios: Vec<f64>, worst: f64 },
    #[error(transparent)]
    Conic(#[from] ConicError),
}
