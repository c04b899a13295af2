use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid input parameter; the message names the violated constraint.
    #[error("{0}")]
    Domain(String),

    #[error("covariance matrix violates the uncertainty principle: {0}")]
    NonPhysicalMatrix(String),

    #[error("x-homodyne on mode B is degenerate: variance {variance:e} is below the pseudoinverse threshold")]
    DegenerateMeasurement { variance: f64 },

    /// The measured p-variance lies below the parabola vertex, so no correlation is physical.
    #[error("no physical C_p: V_p^B = {v_p_b} lies below the parabola vertex V_0^B = {vertex}")]
    EmptyRegion { v_p_b: f64, vertex: f64 },

    #[error("no positive key rate at zero excess noise (loss {loss_db} dB)")]
    NoPositiveRate { loss_db: f64 },

    #[error("key rate still positive at excess noise {upper}; tolerable-noise root not bracketed")]
    Unbracketed { upper: f64 },
}

impl Error {
    /// Stable machine-readable tag for structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::NonPhysicalMatrix(_) => "non-physical-matrix",
            Error::DegenerateMeasurement { .. } => "degenerate-measurement",
            Error::EmptyRegion { .. } => "empty-region",
            Error::NoPositiveRate { .. } => "no-positive-rate",
            Error::Unbracketed { .. } => "unbracketed",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
