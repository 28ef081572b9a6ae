use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational map: {0}")]
    InvalidMap(String),

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root finder failed ({detail}); residual {residual:e}")]
    RootFinding { residual: f64, detail: String },

    #[error("word is empty or too short: need {needed} symbols, have {have}")]
    WordTooShort { needed: usize, have: usize },

    #[error("seed point {0} is exceptional: its backward orbit does not spread")]
    ExceptionalSeed(String),

    #[error("exact tree would exceed the node budget ({nodes} > {budget}); use Monte Carlo")]
    BudgetExceeded { nodes: u64, budget: u64 },

    #[error("preimage leak {leak:.4} exceeds the allowed fraction {max:.2}; refine the grid or densify the cloud")]
    ExcessiveLeak { leak: f64, max: f64 },

    #[error("transfer matrix is reducible: {0} nontrivial strongly connected blocks")]
    Reducible(usize),

    #[error("power iteration did not converge in {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("no numerically injective (cell, generator) samples; grid too coarse")]
    NoInjectiveSamples,

    #[error("branch continuation diverged on spoke {spoke} at step {step}")]
    ContinuationDiverged { spoke: usize, step: usize },

    #[error("ball center {0} is a critical value of the word")]
    CriticalCenter(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is numerical (solver or convergence) rather than a
    /// problem with the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootFinding { .. }
                | Error::NoConvergence { .. }
                | Error::ContinuationDiverged { .. }
                | Error::ExcessiveLeak { .. }
                | Error::Reducible(_)
                | Error::NoInjectiveSamples
                | Error::BudgetExceeded { .. }
        )
    }
}
