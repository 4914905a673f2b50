use std::fmt;

use thiserror::Error;

/// Which of the four scaling exponents a failed estimation stage was computing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Exponent {
    Joseph,
    Latent,
    Moses,
    Hurst,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Exponent::Joseph => "Joseph (J)",
            Exponent::Latent => "latent (L)",
            Exponent::Moses => "Moses (M)",
            Exponent::Hurst => "Hurst (H)",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("time {t} is outside 1..={n_steps}")]
    OutOfRange { t: usize, n_steps: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("parameter {name} = {value} outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("circulant embedding has negative eigenvalue {value:e} at index {index}")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("process family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("degenerate ensemble at t = {t}: only {valid} paths have S_t > 0")]
    DegenerateEnsemble { t: usize, valid: usize },

    #[error("too few paths: need at least {needed}, got {got}")]
    TooFewPaths { needed: usize, got: usize },

    #[error("zero variance input")]
    ZeroVariance,

    #[error("fit did not converge after {iterations} iterations from any starting point")]
    NonConvergence { iterations: usize },

    #[error("rank deficient fit: {points} points for {params} parameters")]
    RankDeficient { points: usize, params: usize },

    #[error("{failed} of {total} bootstrap replicates failed to fit")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("convergence timescale undefined: requires a != 0 and -b/a > 0 (a = {a}, b = {b})")]
    UndefinedTimescale { a: f64, b: f64 },

    #[error("estimation of the {exponent} exponent failed")]
    Estimation {
        exponent: Exponent,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("no trading days with valid data")]
    NoDays,

    #[error("non-positive price {price} on day {day}, minute {minute}")]
    NonPositivePrice { day: usize, minute: usize, price: f64 },

    #[error("interval [{start}, {end}) does not fit in a path of {n_steps} steps")]
    IntervalOutOfRange {
        start: usize,
        end: usize,
        n_steps: usize,
    },

    #[error("ensemble format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }

    pub(crate) fn during(self, exponent: Exponent) -> Self {
        Error::Estimation {
            exponent,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
