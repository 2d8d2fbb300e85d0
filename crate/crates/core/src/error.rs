use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has {got} spins but the instance has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid symbol {symbol:?} at position {position}")]
    InvalidSymbol { symbol: char, position: usize },

    #[error("optimality gap is undefined for a zero ground-state energy")]
    UndefinedGap,

    #[error("{what} supports at most {cap} variables, got {n} (set HSQC_MAX_QUBITS to override)")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} {order}-body layers per round but only {available} exist")]
    InfeasibleLayers {
        order: usize,
        requested: usize,
        available: usize,
    },

    #[error("no {0}-body interaction layers available")]
    EmptyLayerFamily(usize),

    #[error("invalid swap layer: {0}")]
    InvalidSwap(String),

    #[error("invalid connectivity map: {0}")]
    InvalidMap(String),

    #[error("degenerate schedule: the nested commutator vanishes")]
    DegenerateSchedule,

    #[error("instance has no terms")]
    EmptyInstance,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
