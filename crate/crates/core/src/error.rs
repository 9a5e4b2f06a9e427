use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    PhysicsGuard,
    Numeric,
    NoResonance,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("Fock cutoff too small: {reason} (need n_max >= {required})")]
    Cutoff { required: usize, reason: String },

    #[error("state is not normalized (norm^2 = {norm_sqr:.3e})")]
    Normalization { norm_sqr: f64 },

    #[error("physics guard violated: {0}")]
    PhysicsGuard(String),

    #[error("cannot label dressed states in subspace m = {subspace}: best overlap {overlap:.3}")]
    Labeling { subspace: usize, overlap: f64 },

    #[error("degenerate effective frequencies in subspace {subspace}: |difference| = {difference:.3e}")]
    Degenerate { subspace: usize, difference: f64 },

    #[error("integration failed at t = {t:.6e} after {steps} steps (h = {step:.3e}): {reason}")]
    Integrator {
        t: f64,
        steps: usize,
        step: f64,
        reason: String,
    },

    #[error("norm drift {drift:.3e} exceeds {limit:.1e}; retry with tol <= {suggested_tol:.1e}")]
    NormDrift {
        drift: f64,
        limit: f64,
        suggested_tol: f64,
    },

    #[error("density matrix lost positivity: minimum eigenvalue {min_eigenvalue:.3e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("population {population:.3e} reached the Fock cutoff n_max = {n_max}")]
    CutoffSaturation { n_max: usize, population: f64 },

    #[error("resonance peak at the edge of the swept interval (eta = {eta:.8})")]
    Bracket { eta: f64 },

    #[error("no resonance: peak transfer {peak:.3e} is below 5x the background {background:.3e}")]
    NoResonance { peak: f64, background: f64 },

    #[error("Rabi fit rejected: {reason} (rms residual {residual_rms:.3e}, amplitude {amplitude:.3e})")]
    FitRejected {
        reason: String,
        residual_rms: f64,
        amplitude: f64,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Domain(_)
            | Error::Cutoff { .. }
            | Error::Normalization { .. }
            | Error::PhysicsGuard(_)
            | Error::Labeling { .. }
            | Error::Degenerate { .. } => ErrorCategory::PhysicsGuard,
            Error::NoResonance { .. } => ErrorCategory::NoResonance,
            Error::Integrator { .. }
            | Error::NormDrift { .. }
            | Error::Positivity { .. }
            | Error::CutoffSaturation { .. }
            | Error::Bracket { .. }
            | Error::FitRejected { .. } => ErrorCategory::Numeric,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
