use thiserror::Error;

/// Failures raised by the photonic and dynamical solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no HE11 root bracketed at omega = {omega:e} rad/s")]
    NoModeFound { omega: f64 },

    #[error("omega = {omega:e} rad/s is at or above the single-mode cutoff {cutoff:e} rad/s")]
    MultimodeRegime { omega: f64, cutoff: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("omega = {omega:e} rad/s lies inside the grating bandgap")]
    InsideGap { omega: f64 },

    #[error("omega = {omega:e} rad/s lies outside the grating bandgap")]
    OutsideGap { omega: f64 },

    #[error("omega = {omega:e} rad/s is numerically on a bandedge")]
    EdgeSingularity { omega: f64 },

    #[error("laser detuning must be non-zero")]
    ZeroDetuning,

    #[error("blue detuning ({detuning:e} rad/s) heats instead of damping")]
    AntiDamping { detuning: f64 },

    #[error("{0} is outside the function domain")]
    DomainError(f64),

    #[error("friction must be non-negative, got {0:e}")]
    NegativeFriction(f64),

    #[error("energy per particle {energy} cannot be reached from magnetization {m0}")]
    InfeasibleEnergy { energy: f64, m0: f64 },

    #[error("trajectory did not relax before the horizon t = {horizon}")]
    NotRelaxed { horizon: f64 },

    #[error("iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
