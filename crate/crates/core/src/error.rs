use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid automorphism exponent {0} (must be odd)")]
    InvalidAutomorphism(u64),
    #[error("cannot rescale a polynomial at level 0")]
    CannotRescale,
    #[error("level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },
    #[error("scale mismatch: {left:e} vs {right:e}")]
    ScaleMismatch { left: f64, right: f64 },
    #[error("polynomial form mismatch")]
    FormMismatch,
    #[error("encoding domain mismatch")]
    DomainMismatch,
    #[error("ring degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("ciphertext exhausted at level {level}")]
    Exhausted { level: usize },
    #[error("insufficient levels: need {needed}, have {available}")]
    InsufficientLevels { needed: usize, available: usize },
    #[error("missing key: {0}")]
    MissingKey(String),
    #[error("plaintext overflow: value needs {needed_bits:.1} bits, modulus allows {available_bits:.1}")]
    PlaintextOverflow { needed_bits: f64, available_bits: f64 },
    #[error("value {value} outside domain [{low}, {high})")]
    OutOfDomain { value: f64, low: f64, high: f64 },
    #[error("unsupported ciphertext degree {0}")]
    UnsupportedDegree(usize),
    #[error("remez did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("chain infeasible: achieved 2^-{achieved_bits:.2}, requested 2^-{target_bits}")]
    Infeasible { achieved_bits: f64, target_bits: u32 },
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("database row {row}, column {column}: {message}")]
    Database { row: usize, column: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
