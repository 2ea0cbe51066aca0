use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("system matrix is singular (no damping: relaxation and pump rates all zero?)")]
    Singular,
    #[error("system matrix is ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("matrix exponential argument out of range (1-norm {norm:.3e})")]
    ExpmRange { norm: f64 },
    #[error("harmonic {n} not available at cutoff {q}")]
    MissingHarmonic { n: i64, q: usize },
    #[error("demodulated amplitude not real (imaginary residue {residue:.3e})")]
    NotReal { residue: f64 },
    #[error("no convergence up to Q = {q_max} (last relative change {change:.3e})")]
    NoConvergence { q_max: usize, change: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
