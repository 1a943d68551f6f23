use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A wavevector of zero length was supplied where a direction is needed.
    ZeroWavevector,
    /// A lattice request that produces no modes.
    EmptySpectrum,
    DuplicateMode { index: usize },
    UnknownMode,
    InvalidParameter { name: &'static str, reason: String },
    DimensionMismatch { expected: usize, found: usize },
    NotNormalized { norm: f64 },
    NotHermitian { deviation: f64 },
    /// The truncated coherent expansion would drop more than the allowed tail.
    TruncationTail { alpha: f64, n_max: usize, tail: f64 },
    InvalidProbabilities { reason: String },
    /// State support reaches beyond the configured maximum sector.
    SectorOverflow { sector: usize, max_sector: usize },
    UnsupportedInitialState { reason: String },
    /// An energy denominator closer to zero than the regularization scale.
    NearResonantDenominator { gap: f64, eta: f64 },
    /// The finite-time kernel is narrower than the mode spacing it samples.
    UnresolvedKernel { modes_in_lobe: usize, required: usize },
    /// Partition-function convergence requires `hbar*omega/2 - mu > 0`.
    Domain { omega: f64, mu: f64 },
    SeriesCap { terms: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroWavevector => write!(f, "wavevector must be nonzero"),
            Error::EmptySpectrum => write!(f, "mode lattice is empty (max_index must be >= 1)"),
            Error::DuplicateMode { index } => write!(f, "mode {index} duplicates an earlier (s, kappa) pair"),
            Error::UnknownMode => write!(f, "mode is not a member of the mode set"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotNormalized { norm } => write!(f, "state is not normalized (norm = {norm})"),
            Error::NotHermitian { deviation } => {
                write!(f, "operator is not Hermitian (max deviation {deviation:e})")
            }
            Error::TruncationTail { alpha, n_max, tail } => write!(
                f,
                "coherent amplitude |alpha| = {alpha} needs a larger truncation than n_max = {n_max} (tail bound {tail:e} >= 1e-8)"
            ),
            Error::InvalidProbabilities { reason } => write!(f, "invalid probabilities: {reason}"),
            Error::SectorOverflow { sector, max_sector } => {
                write!(f, "sector {sector} exceeds the maximum sector {max_sector}")
            }
            Error::UnsupportedInitialState { reason } => write!(f, "unsupported initial state: {reason}"),
            Error::NearResonantDenominator { gap, eta } => write!(
                f,
                "energy denominator {gap:e} lies within eta = {eta:e} of zero; enable regularization to proceed"
            ),
            Error::UnresolvedKernel { modes_in_lobe, required } => write!(
                f,
                "finite-time kernel resolves only {modes_in_lobe} distinct frequencies in its central lobe (need {required}); decrease T or densify the modes"
            ),
            Error::Domain { omega, mu } => write!(
                f,
                "partition function diverges: hbar*omega/2 - mu must be positive (omega = {omega}, mu = {mu})"
            ),
            Error::SeriesCap { terms } => write!(f, "series did not converge within {terms} terms"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
