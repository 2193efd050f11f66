use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Quantum numbers or arguments outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data; `field` names the offending entry.
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("phase shift did not converge at E = {energy:e} hartree, J = {j}: estimates {first} and {second} differ by {mismatch:e}")]
    PhaseMismatch {
        energy: f64,
        j: u32,
        first: String,
        second: String,
        mismatch: f64,
    },

    #[error("partial-wave sum not converged at E = {energy:e} hartree (S = {spin}): last relative increment {increment:e} at J* = {last_j}")]
    PartialWaveSum {
        energy: f64,
        spin: u8,
        last_j: u32,
        increment: f64,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    /// The fixed-point step is undefined because the objective vanishes.
    #[error("objective vanishes at the current preparation (σ = 0 manifold)")]
    ZeroObjective,

    #[error("energy {energy:e} hartree outside the table range [{min:e}, {max:e}]")]
    OutOfRange { energy: f64, min: f64, max: f64 },

    #[error("ionization ratio undefined: σ_PI = 0")]
    UndefinedRatio,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error block.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) | Error::Validation { .. } | Error::UnknownPreset(_) => "validation",
            Error::OutOfRange { .. } | Error::UndefinedRatio => "validation",
            Error::PhaseMismatch { .. }
            | Error::PartialWaveSum { .. }
            | Error::NotConverged { .. }
            | Error::ZeroObjective => "convergence",
            Error::Io { .. } | Error::Json { .. } => "io",
        }
    }
}
