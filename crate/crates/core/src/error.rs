use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("mean-field solver did not converge after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// |Ω|/Δ or |Ω_m|/ω'_m outside [0, 1): the squeezing transformation diverges.
    #[error("parametric instability: eta_ratio = {eta_ratio}, eta1_ratio = {eta1_ratio} (both must lie in [0, 1))")]
    ParametricInstability { eta_ratio: f64, eta1_ratio: f64 },

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("unstable drift matrix: eigenvalue margin {margin:e} rad/s (cond_a = {cond_a:?}, cond_b = {cond_b:?})")]
    Unstable {
        margin: f64,
        cond_a: Option<bool>,
        cond_b: Option<bool>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration diverged at t = {time:e} s")]
    Divergence { time: f64 },

    #[error("trajectory {index} diverged at t = {time:e} s")]
    TrajectoryDivergence { index: usize, time: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Numerical(_)
                | Error::Divergence { .. }
                | Error::TrajectoryDivergence { .. }
        )
    }
}
