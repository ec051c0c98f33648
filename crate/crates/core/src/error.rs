use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("qubit index {index} out of range for {n} qubits")]
    SiteOutOfRange { index: usize, n: usize },

    #[error("duplicate qubit index {0} in gate support")]
    DuplicateSite(usize),

    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),

    #[error("circuit not decodable at depth {0}")]
    NotDecodable(usize),

    #[error("circuit never purifies the reference qubit")]
    NeverPurifies,

    #[error("window too small: key measurement at layer {layer}, site {site} is cropped out")]
    WindowTooSmall { layer: usize, site: usize },

    #[error("bad dataset file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
