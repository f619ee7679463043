use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample grids are misaligned: {0}")]
    MisalignedGrid(String),

    #[error("integrator step {step:.3e} s exceeds the stability bound {bound:.3e} s")]
    StepSize { step: f64, bound: f64 },

    #[error("sample rate {sample_rate:.4e} Hz violates Nyquist for carrier {carrier_hz:.4e} Hz")]
    Nyquist { sample_rate: f64, carrier_hz: f64 },

    #[error("calibration fit failed: {0}")]
    FitFailure(String),

    #[error("drumhead pulled in")]
    PullIn,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
