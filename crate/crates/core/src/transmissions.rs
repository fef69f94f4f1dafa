//! Delivery probabilities and expected transmission counts.

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_probability, ModelError, Result};
use crate::numeric::{ln_one_minus, one_minus_pow_one_minus, CompensatedSum, LogProb};

/// Outcome probabilities of one data/ack exchange with a single copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeOutcomes {
    /// Data and acknowledgment both arrive: `(1 - p)^2`.
    pub delivered: f64,
    /// Data arrives, acknowledgment is lost: `(1 - p) p`.
    pub ack_lost: f64,
    /// Data is lost: `p`.
    pub data_lost: f64,
}

pub fn exchange_outcomes(p: f64) -> Result<ExchangeOutcomes> {
    check_probability("p", p)?;
    Ok(ExchangeOutcomes {
        delivered: (1.0 - p) * (1.0 - p),
        ack_lost: (1.0 - p) * p,
        data_lost: p,
    })
}

fn copies_lost(p: f64, k: u32) -> f64 {
    p.powi(k as i32)
}

/// Probability that a logical packet sent as `k` copies is delivered and
/// acknowledged: `(1 - p^k)^2`.
///
/// Acknowledgments are replicated like data, so the packet succeeds when at
/// least one of `k` data copies and one of `k` ack copies arrive.
pub fn single_packet_success(p: f64, k: u32) -> Result<f64> {
    check_probability("p", p)?;
    let one = 1.0 - copies_lost(p, k);
    Ok(one * one)
}

/// Complement of [`single_packet_success`], `1 - (1 - p^k)^2 = p^k (2 - p^k)`,
/// exact even when `p^k` is far below machine epsilon.
pub fn single_packet_failure(p: f64, k: u32) -> Result<f64> {
    check_probability("p", p)?;
    let pk = copies_lost(p, k);
    Ok(pk * (2.0 - pk))
}

/// Probability that all `c` packets of a round succeed, `(1 - p^k)^{2c}`,
/// kept in log space.
pub fn round_success(p: f64, k: u32, c: f64) -> Result<LogProb> {
    check_probability("p", p)?;
    check_non_negative("c", c)?;
    if c == 0.0 {
        return Ok(LogProb::ONE);
    }
    let pk = copies_lost(p, k);
    Ok(LogProb::from_ln(2.0 * c * ln_one_minus(pk)))
}

/// Expected number of whole-round transmissions when any loss restarts the
/// round: the mean of a geometric variable, `1 / p_round`.
pub fn expected_transmissions_all(p_round: f64) -> Result<f64> {
    check_probability("p_round", p_round)?;
    if p_round == 0.0 {
        return Err(ModelError::InfiniteExpectation);
    }
    Ok(1.0 / p_round)
}

/// Same as [`expected_transmissions_all`] for a log-space probability.
pub fn expected_transmissions_all_log(p_round: LogProb) -> Result<f64> {
    if p_round.is_zero() {
        return Err(ModelError::InfiniteExpectation);
    }
    Ok(p_round.ln_reciprocal().exp())
}

/// Relative size of the neglected tail at which summation stops.
const TAIL_TOLERANCE: f64 = 1e-15;

/// Maximum number of series terms before giving up.
pub const SERIES_TERM_BUDGET: u64 = 200_000_000;

/// Expected number of transmission rounds when only lost packets are resent.
///
/// `p_single` is the per-packet success probability `(1 - p^k)^2` and `c` the
/// packets per round. The result is the mean of the maximum of `c`
/// independent geometric variables.
pub fn expected_transmissions_lost_only(p_single: f64, c: f64) -> Result<f64> {
    check_probability("p_single", p_single)?;
    expected_transmissions_lost_only_from_failure(1.0 - p_single, c)
}

/// [`expected_transmissions_lost_only`] parameterised by the per-packet
/// failure probability `q = 1 - p_single`, which keeps full precision when
/// `q` is tiny.
///
/// Sums the survival form `sum_{i >= 0} [1 - (1 - q^i)^c]`. Each term is
/// bounded by `c q^i`, so after stopping at index `I` the neglected tail is at
/// most `c q^I / (1 - q)`. Summation stops once that bound drops below
/// `1e-15` times the partial sum. `c = 0` yields 1: a round still happens.
pub fn expected_transmissions_lost_only_from_failure(q: f64, c: f64) -> Result<f64> {
    check_probability("q", q)?;
    check_non_negative("c", c)?;
    if q == 1.0 && c > 0.0 {
        return Err(ModelError::InfiniteExpectation);
    }
    if q == 0.0 || c == 0.0 {
        return Ok(1.0);
    }

    let ln_q = q.ln();
    let p_single = 1.0 - q;
    let mut sum = CompensatedSum::new();
    // i = 0: (1 - q^0)^c = 0
    sum.add(1.0);
    let mut i: u64 = 1;
    loop {
        let q_i = (i as f64 * ln_q).exp();
        let tail_bound = c * q_i / p_single;
        if tail_bound < TAIL_TOLERANCE * sum.value() {
            break;
        }
        if i > SERIES_TERM_BUDGET {
            return Err(ModelError::SeriesBudget {
                p_single,
                budget: SERIES_TERM_BUDGET,
            });
        }
        sum.add(one_minus_pow_one_minus(q_i, c));
        i += 1;
    }
    Ok(sum.value())
}
