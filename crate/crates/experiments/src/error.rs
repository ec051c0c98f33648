use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("only {found} of {quota} circuits with t_p = {t_p} among {cap} candidates")]
    Insufficient { t_p: usize, found: usize, quota: usize, cap: u64 },
    #[error(transparent)]
    Core(#[from] mipt_core::Error),
    #[error(transparent)]
    Nn(#[from] mipt_nn::NnError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExpError>;
