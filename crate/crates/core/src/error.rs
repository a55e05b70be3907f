use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inclusion is not aligned with the {resolution}-cell grid: {detail}")]
    Alignment { resolution: usize, detail: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("material error: {0}")]
    Material(String),

    #[error("mesh contract violated: {0}")]
    MeshContract(String),

    #[error("{context}: solver stopped after {iterations} iterations with relative residual {residual:.3e}")]
    Solver {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("inconsistent right-hand side: kernel component {0:.3e} (relative) exceeds tolerance")]
    Consistency(f64),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("ill-posed configuration: {0}")]
    WellPosedness(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("problem has {unknowns} unknowns, above the cap of {cap} (pass --override-desk-cap to run anyway)")]
    DeskCap { unknowns: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Prefixes solver failures with the name of the problem being solved.
    pub fn tagged(self, tag: &str) -> Self {
        match self {
            Error::Solver {
                context,
                iterations,
                residual,
            } => Error::Solver {
                context: format!("{tag}: {context}"),
                iterations,
                residual,
            },
            other => other,
        }
    }
}
