use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("site index {site} out of range for lattice with {sites} sites")]
    InvalidSite { site: usize, sites: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("{what} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { what: String, deviation: f64 },

    #[error("{what} is not unitary (deviation {deviation:e})")]
    NotUnitary { what: String, deviation: f64 },

    #[error("memory budget exceeded: {required} bytes required, {budget} bytes allowed")]
    Budget { required: u128, budget: u64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("density matrix has eigenvalue {0:e} below the positivity threshold")]
    NegativeEigenvalue(f64),

    #[error("entropy {entropy} outside [0, {max}]")]
    EntropyOutOfRange { entropy: f64, max: f64 },

    #[error("energy shell [{lo}, {hi}] contains no eigenvalue")]
    EmptyShell { lo: f64, hi: f64 },

    #[error("channel list must contain the identity channel")]
    MissingIdentityChannel,

    #[error("drive schedule references unknown term {0}")]
    UnknownTerm(String),

    #[error(
        "drive violates the short-range decay condition at t = {time}: needs U0 >= {required}, configured {configured}"
    )]
    DecayViolation { time: f64, required: f64, configured: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
