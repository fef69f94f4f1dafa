//! Lossy-BSP performance model.
//!
//! Predicts the speedup of bulk-synchronous programs whose communication runs
//! over a lossy datagram network, where every lost packet (or lost
//! acknowledgment) costs another timeout round.
//!
//! * [`transmissions`]: delivery probabilities and expected transmission counts
//! * [`speedup`]: conceptual and L-BSP speedup, dominating terms
//! * [`optimize`]: optimal node count and packet redundancy
//! * [`algo`]: cost models for matrix multiplication, sorting, FFT, Jacobi and
//!   collectives

pub mod algo;
pub mod error;
pub mod numeric;
pub mod optimize;
pub mod params;
pub mod speedup;
pub mod transmissions;

pub use error::{ModelError, Result};
pub use numeric::LogProb;
pub use optimize::{optimal_k, optimal_n_conceptual, NOptimum, OptimalK, OptimalN, DEFAULT_K_MAX};
pub use params::{
    CommKind, CommPattern, CustomComm, NetworkParams, Redundancy, RetransmitPolicy, Scenario, Workload,
};
pub use speedup::{
    conceptual_speedup, conceptual_speedup_approx, dominating_term, lbsp_speedup, limit_speedup_alpha_zero,
    tau, DominatingTerm, SpeedupReport,
};
pub use transmissions::{
    exchange_outcomes, expected_transmissions_all, expected_transmissions_lost_only,
    expected_transmissions_lost_only_from_failure, round_success, single_packet_failure,
    single_packet_success, ExchangeOutcomes,
};
