use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or modem parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A molecule species identifier was not found in the registry / parameter map.
    #[error("unknown species: {0}")]
    UnknownSpecies(String),

    /// Received samples do not line up with the expected sampling schedule.
    #[error("framing error: {0}")]
    Framing(String),

    /// A derived configuration violates an invariant (e.g. k2 <= 1).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
