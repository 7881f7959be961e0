use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus polynomial {0:?} is not a monic irreducible of the requested degree")]
    BadModulus(Vec<u64>),
    #[error("unsupported ring parameters: {0}")]
    UnsupportedRing(String),
    #[error("ring mismatch: {0} vs {1}")]
    RingMismatch(String, String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index ({0}, {1}) out of range for dimension {2}")]
    IndexOutOfRange(usize, usize, usize),
    #[error("{0} is not invertible")]
    NotInvertible(String),
    #[error("2 is not invertible in {0}")]
    TwoNotInvertible(String),
    #[error("ring {0} is infinite")]
    InfiniteRing(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("expected {expected} basis images, got {got}")]
    WrongImageCount { expected: usize, got: usize },
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
