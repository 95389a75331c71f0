use thiserror::Error;

pub type Result<T> = std::result::Result<T, ChartError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("phase I sample is empty")]
    EmptySample,

    #[error("phase I observation {index} is not a positive finite value ({value})")]
    NonPositiveObservation { index: usize, value: f64 },

    #[error("quadrature did not converge: estimate {estimate}, relative error {rel_error:e}")]
    QuadratureNotConverged { estimate: f64, rel_error: f64 },

    #[error("root not bracketed on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    RootNotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("negative variance {variance:e} from quadrature")]
    NegativeVariance { variance: f64 },

    #[error("run length exceeded the cap of {cap} plotted points without a signal")]
    RunLengthCap { cap: u64 },

    #[error("criterion unsatisfiable at m = {m}: {detail}")]
    Infeasible { m: u32, detail: String },

    #[error("line {line}: {reason}")]
    DataLine { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ChartError {
    /// Errors that stem from numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ChartError::QuadratureNotConverged { .. }
                | ChartError::RootNotBracketed { .. }
                | ChartError::NegativeVariance { .. }
                | ChartError::RunLengthCap { .. }
        )
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(ChartError::InvalidParameter {
            name,
            value,
            reason: "must lie strictly between 0 and 1",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ChartError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
