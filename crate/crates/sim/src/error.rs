use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] vbtrack_core::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("cannot parse TOML: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("cannot write TOML: {0}")]
    TomlWrite(#[from] toml::ser::Error),

    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
