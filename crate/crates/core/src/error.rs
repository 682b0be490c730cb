use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cannot schedule at t={requested}s, clock is already at {now}s")]
    ScheduleInPast { requested: f64, now: f64 },
    #[error("invalid simulation time {0}")]
    InvalidTime(f64),
    #[error("unknown node {0}")]
    UnknownNode(u32),
}

/// A rejected configuration value. `field` names the offending key as it
/// appears in config files and on the command line.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("`{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("`{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("`z` must lie in [0, 1], got {0}")]
    ZOutOfRange(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum RouteCacheError {
    #[error("route {0:?} visits a node twice")]
    Loop(Vec<u32>),
    #[error("route must contain at least two nodes")]
    TooShort,
    #[error("route starts at n{first} but the cache belongs to n{owner}")]
    WrongOwner { owner: u32, first: u32 },
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("no rows to emit")]
    Empty,
    #[error("output path {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
