use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("state `{state}` (atom {atom}) became non-finite at t = {t} s")]
    NonFinite {
        atom: usize,
        state: String,
        t: f64,
    },

    /// An atom was asked to fire at a time other than its scheduled one.
    #[error("scheduling inconsistency for atom {atom}: fired at t = {t} s, scheduled at {scheduled} s")]
    Schedule { atom: usize, t: f64, scheduled: f64 },

    #[error("reference solver unstable after {steps} steps (t = {t} s): state `{state}` = {value}")]
    Unstable {
        steps: usize,
        t: f64,
        state: String,
        value: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("event trajectory does not cover the requested grid: {0}")]
    Trajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics of a run rather than by its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Schedule { .. } | Error::Unstable { .. }
        )
    }
}
