use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vertices are not nearest neighbours")]
    NotAdjacent,
    #[error("vertex lies outside the lattice box")]
    OutOfBox,
    #[error("edge lies outside the lattice box")]
    EdgeOutOfBox,
    #[error("invalid lattice box: {0}")]
    InvalidBox(String),
    #[error("invalid distribution: {0}")]
    InvalidSpec(String),
    #[error("no critical probabilities known for dimension {0}")]
    UnknownDimension(usize),
    #[error("invalid critical probability table: {0}")]
    InvalidPcTable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("path is not self-avoiding")]
    NotSelfAvoiding,
    #[error("enumeration budget of {0} nodes exceeded")]
    BudgetExceeded(u64),
    #[error("region is not contained in the lattice box")]
    RegionOutOfBox,
    #[error("delta must be positive")]
    InvalidDelta,
    #[error("shortcut construction blocked: {0}")]
    ConstructionBlocked(String),
    #[error("shortcut invariant violated: {0}")]
    InvariantViolated(String),
    #[error("a passage time exceeds the declared bound M")]
    UnboundedWeights,
    #[error("pursuer and evader start at the same vertex")]
    SamePosition,
    #[error("malformed escape plan: {0}")]
    MalformedPlan(String),
    #[error("invalid experiment configuration: {0}")]
    ConfigInvalid(String),
    #[error("not enough non-degenerate rows to fit a rate")]
    InsufficientData,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
