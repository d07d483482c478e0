use thiserror::Error;

use crate::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale sequence must be strictly increasing (M_{index} = {prev} then {next})")]
    NonIncreasingScales { index: usize, prev: u64, next: u64 },
    #[error("scale factor M_{index} = {value} is below 2")]
    ScaleTooSmall { index: usize, value: u64 },
    #[error("empty scale sequence")]
    EmptyScales,
    #[error("digit {digit:?} at position {position} is outside the order-{order} digit set")]
    DigitOutOfRange { position: usize, digit: Point, order: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("node at depth {depth} has no children assigned")]
    MissingChildren { depth: usize },
    #[error("requested depth {requested} exceeds the {available} available scales")]
    DepthExceedsScales { requested: usize, available: usize },
    #[error("leaf set mixes depths {first} and {other}")]
    MixedDepths { first: usize, other: usize },
    #[error("lattice coordinate overflow at level {level}")]
    LatticeOverflow { level: usize },
    #[error("M = {0} is not a power of two")]
    NotDyadic(u64),
    #[error("scale 2^{n} is below the minimum 2^{n0}")]
    BelowMinimumScale { n: u32, n0: u32 },
    #[error("exponent {value} must lie strictly between 0 and {d}")]
    DegenerateAlpha { value: f64, d: usize },
    #[error("block side {q} does not divide modulus {modulus}")]
    ModulusNotDivisible { q: i64, modulus: i64 },
    #[error("residue-separated sum precondition violated by {left:?} and {right:?}")]
    PreconditionViolated { left: Point, right: Point },
    #[error("infeasible marginals: a block has mass {block_mass} > 1/{target}")]
    InfeasibleMarginals { block_mass: String, target: usize },
    #[error("not a partition: {0}")]
    NotAPartition(String),
    #[error("measures live at different levels or scales")]
    LevelMismatch,
    #[error("delta must be a positive multiple of 1/𝔐_n")]
    NonLatticeDelta,
    #[error("empty evaluation grid")]
    EmptyGrid,
    #[error("empty schedule")]
    EmptySchedule,
    #[error("point {0:?} is not on the realized support")]
    PointOffSupport(Point),
    #[error("lambda_{level} = {value} is not below 1/2")]
    LambdaTooLarge { level: usize, value: f64 },
    #[error("s = {s} must lie in [0, {max}]")]
    InvalidS { s: f64, max: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("degenerate derived parameters: {0}")]
    DegenerateParameters(String),
    #[error("divisibility violated: {0}")]
    DivisibilityViolated(String),
    #[error("arithmetic subtree set could not be completed at level {0}")]
    SubtreeNotSparse(usize),
    #[error("no admissible base truncation for level {0}")]
    ScaleAlignment(usize),
    #[error("missing test data: {0}")]
    MissingTestData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
