//! Cost models for parallel algorithms and collectives under L-BSP.
//!
//! Every model charges `rho^k` expected transmissions per communication,
//! computed from the per-packet failure `1 - (1 - p^k)^2` and the packet count
//! `c(P)` of the algorithm's exchange. A single processor runs the sequential
//! algorithm: no communication, `w_p = w_s`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{NetworkParams, Redundancy};
use crate::transmissions::{expected_transmissions_lost_only_from_failure, single_packet_failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoKind {
    MatMul,
    BitonicSort,
    Fft2dTm,
    LaplaceJacobi,
    Broadcast,
    AllGather,
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgoKind::MatMul => "Matrix multiplication",
            AlgoKind::BitonicSort => "Bitonic merge sort",
            AlgoKind::Fft2dTm => "2D-FFT",
            AlgoKind::LaplaceJacobi => "Laplace equation",
            AlgoKind::Broadcast => "Broadcast",
            AlgoKind::AllGather => "All-gather",
        })
    }
}

/// Logarithm base used by the FFT operation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }
}

/// One algorithm configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoInstance {
    pub kind: AlgoKind,
    /// Problem size: matrix/mesh edge for `MatMul` and `LaplaceJacobi`,
    /// element count otherwise.
    pub size: u64,
    pub processors: u64,
    /// Bytes per element.
    pub datum_size: f64,
    /// Bytes per message.
    pub message_size: f64,
    /// Bytes per packet.
    pub packet_size: f64,
    /// Average processor performance, operations per second.
    pub flops_rate: f64,
    /// Non-zero diagonals of the Jacobi system.
    pub diagonals: u32,
    pub fft_log_base: LogBase,
}

impl AlgoInstance {
    pub fn new(kind: AlgoKind, size: u64, processors: u64) -> Self {
        AlgoInstance {
            kind,
            size,
            processors,
            datum_size: 8.0,
            message_size: 1.0,
            packet_size: 1.0,
            flops_rate: 0.5e9,
            diagonals: 5,
            fft_log_base: LogBase::Two,
        }
    }

    /// Supersteps per logical message, `ceil(message / packet)`, at least 1.
    pub fn gamma(&self) -> u64 {
        if self.message_size <= self.packet_size {
            1
        } else {
            (self.message_size / self.packet_size).ceil() as u64
        }
    }

    fn validate(&self) -> Result<()> {
        if self.processors == 0 {
            return Err(ModelError::Decomposition("processor count must be >= 1".into()));
        }
        if !(self.flops_rate > 0.0) {
            return Err(ModelError::Domain {
                name: "flops_rate",
                value: self.flops_rate,
                domain: "(0, inf)",
            });
        }
        if !(self.packet_size > 0.0) || self.message_size < 0.0 {
            return Err(ModelError::Decomposition(
                "packet and message sizes must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoReport {
    pub kind: AlgoKind,
    pub processors: u64,
    pub k: u32,
    pub gamma: u64,
    /// Sequential compute time, seconds.
    pub w_s: f64,
    /// Parallel compute time, seconds.
    pub w_p: f64,
    pub comm_time: f64,
    pub total_parallel: f64,
    pub speedup: f64,
    pub efficiency: f64,
    /// Packets per communication.
    pub c_of_p: f64,
    pub rho_hat_k: f64,
}

/// `rho^k` for `c` packets per communication.
pub fn rho_hat_k(network: &NetworkParams, k: Redundancy, c: f64) -> Result<f64> {
    let q = single_packet_failure(network.p, k.get())?;
    expected_transmissions_lost_only_from_failure(q, c)
}

fn is_power_of_two(x: u64) -> bool {
    x != 0 && x & (x - 1) == 0
}

fn exact_sqrt(x: u64) -> Option<u64> {
    let r = (x as f64).sqrt().round() as u64;
    (r.checked_mul(r) == Some(x)).then_some(r)
}

#[allow(clippy::too_many_arguments)]
fn report(
    inst: &AlgoInstance,
    k: Redundancy,
    w_s: f64,
    w_p: f64,
    comm_time: f64,
    c_of_p: f64,
    rho: f64,
) -> AlgoReport {
    let (w_p, comm_time) = if inst.processors == 1 {
        (w_s, 0.0)
    } else {
        (w_p, comm_time)
    };
    let total_parallel = w_p + comm_time;
    let speedup = w_s / total_parallel;
    AlgoReport {
        kind: inst.kind,
        processors: inst.processors,
        k: k.get(),
        gamma: inst.gamma(),
        w_s,
        w_p,
        comm_time,
        total_parallel,
        speedup,
        efficiency: speedup / inst.processors as f64,
        c_of_p,
        rho_hat_k: rho,
    }
}

/// Direct block matrix multiplication on a `sqrt(P) x sqrt(P)` grid.
///
/// `c(P) = 2 (P^{3/2} - P)`, compute `2N^3 - N^2` operations, communication
/// `2 gamma rho^k (2 (sqrt(P) - 1) k alpha + beta)`.
pub fn matmul_speedup(inst: &AlgoInstance, network: &NetworkParams, k: Redundancy) -> Result<AlgoReport> {
    inst.validate()?;
    let procs = inst.processors;
    let root = exact_sqrt(procs)
        .ok_or_else(|| ModelError::Decomposition(format!("P = {procs} is not a perfect square")))?;
    if inst.size == 0 || !inst.size.is_multiple_of(root) {
        return Err(ModelError::Decomposition(format!(
            "N = {} is not divisible by sqrt(P) = {root}",
            inst.size
        )));
    }
    matmul_eval(inst, network, k, root as f64)
}

/// [`matmul_speedup`] without the square-grid and divisibility checks, using
/// the real `sqrt(P)`. For sensitivity studies at non-square processor counts.
pub fn matmul_speedup_real_grid(
    inst: &AlgoInstance,
    network: &NetworkParams,
    k: Redundancy,
) -> Result<AlgoReport> {
    inst.validate()?;
    matmul_eval(inst, network, k, (inst.processors as f64).sqrt())
}

fn matmul_eval(
    inst: &AlgoInstance,
    network: &NetworkParams,
    k: Redundancy,
    sqrt_p: f64,
) -> Result<AlgoReport> {
    let n = inst.size as f64;
    let p = inst.processors as f64;
    let c = 2.0 * (p * sqrt_p - p);
    let rho = rho_hat_k(network, k, c)?;
    let kf = f64::from(k.get());
    let w_s = (2.0 * n.powi(3) - n * n) / inst.flops_rate;
    let w_p = (2.0 * n.powi(3) / p - n * n / p) / inst.flops_rate;
    let comm = 2.0 * inst.gamma() as f64 * rho * (2.0 * (sqrt_p - 1.0) * kf * network.alpha + network.beta);
    Ok(report(inst, k, w_s, w_p, comm, c, rho))
}

/// Batcher bitonic merge sort: `log2 P (log2 P + 1) / 2` merge steps of
/// `c(P) = P` packets each.
pub fn bitonic_speedup(inst: &AlgoInstance, network: &NetworkParams, k: Redundancy) -> Result<AlgoReport> {
    inst.validate()?;
    let procs = inst.processors;
    if !is_power_of_two(procs) {
        return Err(ModelError::Decomposition(format!(
            "P = {procs} is not a power of two"
        )));
    }
    if inst.size < procs {
        return Err(ModelError::Decomposition(format!(
            "N = {} < P = {procs}",
            inst.size
        )));
    }
    let n = inst.size as f64;
    let p = procs as f64;
    let lg = p.log2();
    let steps2 = lg * (lg + 1.0);
    let c = p;
    let rho = rho_hat_k(network, k, c)?;
    let kf = f64::from(k.get());
    let local = n / p;
    let w_s = n * n.log2() / inst.flops_rate;
    let w_p = (local * local.log2() + steps2 * (local - 0.5)) / inst.flops_rate;
    let comm = inst.gamma() as f64 * steps2 * (kf * network.alpha + network.beta) * rho;
    Ok(report(inst, k, w_s, w_p, comm, c, rho))
}

/// Transpose-method 2D FFT with two all-to-all exchanges of
/// `c(P) = P (P - 1)` packets carrying `N b / P^2` bytes.
pub fn fft2d_speedup(inst: &AlgoInstance, network: &NetworkParams, k: Redundancy) -> Result<AlgoReport> {
    inst.validate()?;
    let procs = inst.processors;
    let p2 = procs
        .checked_mul(procs)
        .ok_or_else(|| ModelError::Decomposition(format!("P = {procs} overflows P^2")))?;
    if inst.size == 0 || !inst.size.is_multiple_of(p2) {
        return Err(ModelError::Decomposition(format!(
            "N = {} is not divisible by P^2 = {p2}",
            inst.size
        )));
    }
    let n = inst.size as f64;
    let p = procs as f64;
    let lg = |x: f64| inst.fft_log_base.log(x);
    let c = p * (p - 1.0);
    let rho = rho_hat_k(network, k, c)?;
    let kf = f64::from(k.get());
    let w_s = 5.0 * n * lg(n) / inst.flops_rate;
    let w_p = 10.0 * (n / p) * lg(n / p) / inst.flops_rate;
    let comm = 4.0 * inst.gamma() as f64 * rho * (kf * network.alpha * (p - 1.0) + network.beta);
    Ok(report(inst, k, w_s, w_p, comm, c, rho))
}

/// Jacobi iteration on the `(m-1)^2` unknown pentadiagonal Laplace system,
/// converging in `log2 P` rounds, each exchanging `c(P) = 2 (P - 1)` packets.
pub fn laplace_speedup(inst: &AlgoInstance, network: &NetworkParams, k: Redundancy) -> Result<AlgoReport> {
    inst.validate()?;
    let procs = inst.processors;
    let m = inst.size as f64;
    let p = procs as f64;
    let interior = (m - 1.0) * (m - 1.0);
    if procs > 1 && !(interior / p > 5.0) {
        return Err(ModelError::Decomposition(format!(
            "(m-1)^2 / P = {} must exceed 5",
            interior / p
        )));
    }
    let rounds = p.log2();
    let d = f64::from(inst.diagonals);
    let c = 2.0 * (p - 1.0);
    let rho = rho_hat_k(network, k, c)?;
    let kf = f64::from(k.get());
    let w_s = 2.0 * d * rounds * interior / inst.flops_rate;
    let w_p = 2.0 * d * rounds * (interior / p) / inst.flops_rate;
    let comm = 2.0 * rounds * rho * (network.alpha * kf * 2.0 * (p - 1.0) / p + network.beta);
    let mut r = report(inst, k, w_s, w_p, comm, c, rho);
    if procs == 1 {
        // log2(1) = 0 rounds makes the printed sequential cost vanish; count one
        // round of sequential work instead.
        let w = 2.0 * d * interior / inst.flops_rate;
        r.w_s = w;
        r.w_p = w;
        r.total_parallel = w;
        r.speedup = 1.0;
        r.efficiency = 1.0;
    }
    Ok(r)
}

/// Dispatches to the speedup model of `inst.kind`.
pub fn algo_speedup(inst: &AlgoInstance, network: &NetworkParams, k: Redundancy) -> Result<AlgoReport> {
    match inst.kind {
        AlgoKind::MatMul => matmul_speedup(inst, network, k),
        AlgoKind::BitonicSort => bitonic_speedup(inst, network, k),
        AlgoKind::Fft2dTm => fft2d_speedup(inst, network, k),
        AlgoKind::LaplaceJacobi => laplace_speedup(inst, network, k),
        AlgoKind::Broadcast | AlgoKind::AllGather => Err(ModelError::UnsupportedPattern(format!(
            "{} has a communication cost, not a speedup",
            inst.kind
        ))),
    }
}

/// Exhaustive search for the redundancy maximising an algorithm's speedup.
/// Ties go to the smaller `k`.
pub fn optimal_algo_k(inst: &AlgoInstance, network: &NetworkParams, k_max: u32) -> Result<(u32, AlgoReport)> {
    Redundancy::new(k_max)?;
    let mut best: Option<(u32, AlgoReport)> = None;
    for k in 1..=k_max {
        let r = algo_speedup(inst, network, Redundancy::new(k)?)?;
        if best.as_ref().is_none_or(|(_, b)| r.speedup > b.speedup) {
            best = Some((k, r));
        }
    }
    Ok(best.expect("k_max >= 1"))
}

/// Binomial-tree broadcast cost, split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadcastCost {
    pub steps: u32,
    /// `k alpha / P (1 - 2^{ceil(log2 P) - 1})`; negative for `P > 2`.
    pub transmit_term: f64,
    /// `beta ceil(log2 P)`
    pub delay_term: f64,
    pub rho_hat_k: f64,
    pub total: f64,
    pub transmit_term_negative: bool,
}

/// `[k alpha / P (1 - 2^{ceil(log2 P) - 1}) + beta ceil(log2 P)] rho^k` with
/// `c(P) = log2 P` packets.
///
/// The transmit factor is negative for `P > 2` and is reported exactly as
/// given, with `transmit_term_negative` set.
pub fn broadcast_cost(processors: u64, network: &NetworkParams, k: Redundancy) -> Result<BroadcastCost> {
    if processors == 0 {
        return Err(ModelError::Decomposition("processor count must be >= 1".into()));
    }
    if processors == 1 {
        return Ok(BroadcastCost {
            steps: 0,
            transmit_term: 0.0,
            delay_term: 0.0,
            rho_hat_k: 1.0,
            total: 0.0,
            transmit_term_negative: false,
        });
    }
    let p = processors as f64;
    let steps = 64 - (processors - 1).leading_zeros();
    let s = f64::from(steps);
    let rho = rho_hat_k(network, k, p.log2())?;
    let transmit_term = f64::from(k.get()) * network.alpha / p * (1.0 - 2f64.powf(s - 1.0));
    let delay_term = network.beta * s;
    Ok(BroadcastCost {
        steps,
        transmit_term,
        delay_term,
        rho_hat_k: rho,
        total: (transmit_term + delay_term) * rho,
        transmit_term_negative: transmit_term < 0.0,
    })
}

/// Ring all-gather: `(k alpha + beta)(P - 1) rho^k` with `c(P) = P`.
pub fn allgather_cost(processors: u64, network: &NetworkParams, k: Redundancy) -> Result<f64> {
    if processors == 0 {
        return Err(ModelError::Decomposition("processor count must be >= 1".into()));
    }
    if processors == 1 {
        return Ok(0.0);
    }
    let p = processors as f64;
    let rho = rho_hat_k(network, k, p)?;
    Ok((f64::from(k.get()) * network.alpha + network.beta) * (p - 1.0) * rho)
}

/// Published values for one row of the algorithm speedup table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListedValues {
    pub rho_hat_k: f64,
    pub w_s: f64,
    pub comm_time: f64,
    pub total_parallel: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

/// A reference row: parameters plus the listed results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub instance: AlgoInstance,
    pub network: NetworkParams,
    pub k: Redundancy,
    pub listed: ListedValues,
}

const MB: f64 = 1e6;
const RATE: f64 = 0.5e9;

fn row(
    kind: AlgoKind,
    size: u64,
    processors: u64,
    packet: f64,
    datum_size: f64,
    k: u32,
    bandwidth_mb: f64,
    p: f64,
    beta: f64,
    listed: ListedValues,
) -> ReferenceRow {
    let instance = AlgoInstance {
        kind,
        size,
        processors,
        datum_size,
        message_size: packet,
        packet_size: packet,
        flops_rate: RATE,
        diagonals: 5,
        fft_log_base: LogBase::Two,
    };
    ReferenceRow {
        label: kind.to_string(),
        instance,
        network: NetworkParams::from_link(p, packet, bandwidth_mb * MB, beta)
            .expect("reference rows are valid"),
        k: Redundancy::new(k).expect("k >= 1"),
        listed,
    }
}

/// The four algorithm rows of the reference speedup table.
///
/// Bandwidths are in units of 10^6 bytes/second, which reproduces the listed
/// `alpha` values. Matrix multiplication uses `P = 2^16`.
pub fn reference_rows() -> Vec<ReferenceRow> {
    vec![
        row(
            AlgoKind::MatMul,
            1 << 15,
            1 << 16,
            65536.0,
            4.0,
            7,
            17.5,
            0.045,
            0.069,
            ListedValues {
                rho_hat_k: 1.025,
                w_s: 140765.34,
                comm_time: 27.54,
                total_parallel: 29.69,
                speedup: 4740.89,
                efficiency: 0.072,
            },
        ),
        row(
            AlgoKind::BitonicSort,
            1 << 31,
            1 << 17,
            65536.0,
            4.0,
            6,
            17.5,
            0.045,
            0.069,
            ListedValues {
                rho_hat_k: 1.002,
                w_s: 133.14,
                comm_time: 28.18,
                total_parallel: 28.194,
                speedup: 4.72,
                efficiency: 0.000036,
            },
        ),
        row(
            AlgoKind::Fft2dTm,
            1 << 34,
            1 << 15,
            256.0,
            16.0,
            3,
            17.07,
            0.0005,
            0.05,
            ListedValues {
                rho_hat_k: 1.24,
                w_s: 5841.15,
                comm_time: 7.35,
                total_parallel: 7.55,
                speedup: 773.4,
                efficiency: 0.02,
            },
        ),
        row(
            AlgoKind::LaplaceJacobi,
            1 << 18,
            1 << 17,
            24.0,
            8.0,
            5,
            24.0,
            0.0005,
            0.05,
            ListedValues {
                rho_hat_k: 1.0,
                w_s: 23364.44,
                comm_time: 1.7,
                total_parallel: 1.8783,
                speedup: 12439.43,
                efficiency: 0.095,
            },
        ),
    ]
}
