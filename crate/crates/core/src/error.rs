use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("transition matrix is not primitive")]
    NotPrimitive,

    #[error("eigen-solver did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("spectral gap collapsed at xi = {xi}: leading modulus {leading}, next modulus {next}")]
    GapCollapse { xi: f64, leading: f64, next: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("jet order {have} is below the required {need}")]
    JetOrder { have: usize, need: usize },

    #[error("structure violation: monomial n^{i} t^{j} has 3i > j")]
    Structure { i: usize, j: usize },

    #[error("word budget exceeded: {needed} words requested, cap is {cap}")]
    Budget { needed: u128, cap: u64 },

    #[error("aperiodicity scan failed: spectral radius {max_radius} at xi = {argmax_xi}")]
    ScanFailed { max_radius: f64, argmax_xi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
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
