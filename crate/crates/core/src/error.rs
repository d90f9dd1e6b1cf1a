use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subcritical model: mean offspring m = {m} (need m > 1)")]
    Subcritical { m: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error} after {subdivisions} subdivisions")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("scale solver unstable at t = {t}: W not increasing (try a smaller step than {h})")]
    SolverInstability { t: f64, h: f64 },

    #[error("t = {t} outside grid range [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("population cap of {cap} individuals exceeded")]
    PopulationCap { cap: u64 },

    #[error("empty population: no surviving individuals")]
    EmptyPopulation,

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
