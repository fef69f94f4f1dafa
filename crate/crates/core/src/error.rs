use thiserror::Error;

/// Errors raised by the model evaluation and catalog operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("expected number of transmissions is infinite (success probability is zero)")]
    InfiniteExpectation,

    #[error("retransmission series needs more than {budget} terms (per-packet success {p_single:e})")]
    SeriesBudget { p_single: f64, budget: u64 },

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("communication pattern `{0}` is not supported by this operation")]
    UnsupportedPattern(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value,
            domain: "[0, inf)",
        })
    }
}
