use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation does not apply to this kind of input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An event log references sites that are not part of the topology.
    #[error("event log does not match topology: {0}")]
    Mismatch(String),

    /// A property that must hold on every path was violated. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Not enough data for the requested estimate.
    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prefixes the message with the replica seed that produced it.
    pub fn at_seed(self, seed: u64) -> Self {
        let tag = |m: String| format!("replica seed {seed}: {m}");
        match self {
            Error::Domain(m) => Error::Domain(tag(m)),
            Error::Unsupported(m) => Error::Unsupported(tag(m)),
            Error::Mismatch(m) => Error::Mismatch(tag(m)),
            Error::Invariant(m) => Error::Invariant(tag(m)),
            Error::Statistics(m) => Error::Statistics(tag(m)),
            Error::Config(m) => Error::Config(tag(m)),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), tag(e.to_string()))),
        }
    }
}
