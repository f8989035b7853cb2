use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid display profile: {0}")]
    InvalidProfile(&'static str),
    #[error("invalid viewing geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("distance ratio {ratio} is not an integer multiple of the reference distance")]
    NotIntegerMultiple { ratio: f64 },
    #[error("protocol violation: expected {expected} measures, got {got}")]
    ProtocolViolation { expected: usize, got: usize },
    #[error("stimulus of {needed} px does not fit in {available} px")]
    StimulusTooLarge { needed: u32, available: u32 },
    #[error("invalid stereogram: {0}")]
    InvalidSpec(&'static str),
    #[error("image too small to decode: {width}x{height} px for {block} px blocks")]
    ImageTooSmall { width: usize, height: usize, block: usize },
    #[error("level table is empty")]
    EmptyTable,
    #[error("level {index} is outside a table of {len} levels")]
    LevelOutOfRange { index: usize, len: usize },
    #[error("invalid simulated observer: {0}")]
    InvalidObserver(&'static str),
    #[error("session already finished")]
    SessionFinished,
    #[error("trial {0} does not follow the staircase rules")]
    ReplayMismatch(usize),
    #[error("low confidence: {low} of {total} blocks below the correlation threshold")]
    LowConfidence { low: usize, total: usize },
    #[error("no figure region found")]
    NoFigure,
    #[error("value {0} cannot be recoded on this scale")]
    UnmappableValue(f64),
    #[error("degenerate marginals: expected weighted agreement is 1")]
    DegenerateMarginals,
    #[error("all paired differences are zero")]
    NoEffectivePairs,
    #[error("invalid confusion matrix: {0}")]
    InvalidMatrix(&'static str),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}
