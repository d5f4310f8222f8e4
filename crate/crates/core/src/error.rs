use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid dimensions must be even and at least 2, got {m}x{n}")]
    InvalidDimensions { m: usize, n: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("no directed path from node {from} to node {to}")]
    Unreachable { from: usize, to: usize },
    #[error("empty OD set")]
    EmptyOdSet,
    #[error("invalid rhythm configuration: {0}")]
    InvalidRhythm(String),
    #[error("path does not start on a scheduled platoon: {0}")]
    Unaligned(String),
    #[error("empty path")]
    EmptyPath,
    #[error("linear program is malformed: {0}")]
    LpDimension(&'static str),
    #[error("rounding failed: {0}")]
    Rounding(String),
    #[error("reservation over-commit on link {link} interval {interval}")]
    OverCommit { link: usize, interval: i64 },
    #[error("matrix too large for exhaustive enumeration ({size} > cap {cap})")]
    TooLarge { size: usize, cap: usize },
    #[error("speed curve: {0}")]
    SpeedCurve(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}
