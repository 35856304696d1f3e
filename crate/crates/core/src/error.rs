use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("layout needs at least one mode")]
    EmptyLayout,

    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),

    #[error("mode `{0}` has an empty party")]
    EmptyParty(String),

    #[error("party `{0}` does not occupy a contiguous block of the mode order")]
    NonContiguousParty(String),

    #[error("layout has {0} modes, at most {max} are supported", max = crate::fock::MAX_MODES)]
    TooManyModes(usize),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("unknown party `{0}`")]
    UnknownParty(String),

    #[error("occupancy {value} of mode `{mode}` is outside {{0, 1}}")]
    InvalidOccupancy { mode: String, value: u8 },

    #[error("occupation has {got} entries but the layout has {expected} modes")]
    OccupationLength { expected: usize, got: usize },

    #[error("states or operators live on different layouts")]
    LayoutMismatch,

    #[error("superposition evaluates to the zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis map is not a bijection: {0}")]
    NotBijective(String),

    #[error("operation is not local to party `{party}`: {detail}")]
    NotLocal { party: String, detail: String },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("state has no definite global parity")]
    IndefiniteParity,

    #[error("operator neither commutes nor anticommutes with the local parity of `{0}`")]
    NotSsrImplementable(String),

    #[error("operator violates the parity superselection rule (commutator norm {0:.3e})")]
    SsrViolation(f64),

    #[error("Kraus set is incomplete (deviation {0:.3e})")]
    IncompleteKraus(f64),

    #[error("global parity changed unexpectedly at step {0}")]
    ParityDrift(String),

    #[error("operator too large for a dense representation ({0} modes)")]
    TooLargeForDense(usize),

    #[error("branch enumeration exceeded {0} branches")]
    BranchExplosion(usize),

    #[error("script validation failed: {}", .0.join("; "))]
    InvalidScript(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
