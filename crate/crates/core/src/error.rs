use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("CRE contour has no root in the search bracket for bias {bias_db} dB")]
    NoRoot { bias_db: f64 },

    #[error("user coincides with a base station; received power is unbounded")]
    DegenerateDistance,

    #[error("output power {p_out} W exceeds the rated maximum {p_max} W")]
    OverMax { p_out: f64, p_max: f64 },

    #[error("support [{lower}, {upper}] does not bracket probability {q}")]
    NotBracketed { q: f64, lower: f64, upper: f64 },

    #[error("empirical CDF needs at least one sample")]
    EmptySample,

    #[error("KS test needs at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("configuration field `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
