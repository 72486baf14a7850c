use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical blow-up: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("trace: {0}")]
    Csv(#[from] csv::Error),

    #[error("summary: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for invalid input, 3 for a diverging run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonFinite(_) => 3,
            _ => 1,
        }
    }
}

impl From<inertial_fb::Error> for CliError {
    fn from(e: inertial_fb::Error) -> Self {
        match e {
            inertial_fb::Error::NonFinite(msg) => CliError::NonFinite(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
