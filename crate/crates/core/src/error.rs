use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported stencil S(-{m},+{n}): width {width} exceeds {max}")]
    StencilTooWide {
        m: usize,
        n: usize,
        width: usize,
        max: usize,
    },

    #[error("lSSP-RK stage count {0} outside 2..=18")]
    StageCount(usize),

    #[error("negative splitting speed {0}")]
    NegativeSpeed(f64),

    #[error("non-physical state at {location}: rho = {rho}, p = {p}")]
    NonPhysical { location: String, rho: f64, p: f64 },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("NaN produced in Runge-Kutta stage {stage} at t = {t}")]
    StageNaN { stage: usize, t: f64 },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Parse(#[from] crate::config::ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// One-word category used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::StencilTooWide { .. }
            | Error::StageCount(_)
            | Error::NegativeSpeed(_)
            | Error::SizeMismatch(_)
            | Error::Config(_)
            | Error::Parse(_) => "config",
            Error::NonPhysical { .. } | Error::NonFinite { .. } | Error::StageNaN { .. } => {
                "runtime-nan"
            }
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
