use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow computing {what} at index {index}")]
    Overflow { what: &'static str, index: usize },

    #[error("memory budget exceeded: {what} needs {needed} bytes, budget is {budget} bytes")]
    Budget {
        what: String,
        needed: u64,
        budget: u64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field kind mismatch: {0}")]
    KindMismatch(String),

    #[error("time grid error: {0}")]
    TimeGrid(String),

    #[error("series predicted to diverge: {0}")]
    Divergence(String),

    #[error("oracle blow-up at t = {time}: norm {norm:.3e} exceeds cap {cap:.3e}")]
    BlowUp { time: f64, norm: f64, cap: f64 },

    #[error("overflow in Laplace-Fourier summand: exponent {exponent:.1} exceeds {limit:.1}; reduce |Im z| or increase t")]
    ExtensionOverflow { exponent: f64, limit: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
