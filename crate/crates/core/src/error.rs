use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distance {0} m is below the minimum UE-to-site distance")]
    DistanceBelowMinimum(f64),

    #[error("UE drop gave up after {0} rejected positions; check the geometry settings")]
    DropFailed(usize),

    #[error("zero channel vector")]
    ZeroChannel,

    #[error("singular covariance matrix")]
    SingularCovariance,

    #[error("SINR denominator is zero")]
    ZeroDenominator,

    #[error("effective SINR of an empty list")]
    EmptySinrList,

    #[error("no idle HARQ process on stream {0}")]
    NoIdleProcess(usize),

    #[error("HARQ feedback for process {0} which is not awaiting feedback")]
    UnexpectedFeedback(usize),

    #[error("HARQ feedback for process {process} at TTI {got}, expected TTI {expected}")]
    FeedbackTiming {
        process: usize,
        expected: u64,
        got: u64,
    },

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("simulation consistency violation: {0}")]
    Consistency(String),

    #[error("statistics window is empty (n_ttis = {n_ttis}, warm-up = {warmup})")]
    EmptyWindow { n_ttis: u64, warmup: u64 },

    #[error("throughput vector is all zero")]
    AllZero,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
