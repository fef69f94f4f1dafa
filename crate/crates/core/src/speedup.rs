//! Speedup under the conceptual (communication-free) and L-BSP models.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{CommKind, CommPattern, NetworkParams, RetransmitPolicy, Scenario};
use crate::transmissions::{
    expected_transmissions_lost_only_from_failure, round_success, single_packet_failure,
};

/// Term of the speedup denominator that dominates as `n` grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominatingTerm {
    /// `2 k rho c(n) alpha / w`
    TransmitBound,
    /// `2 n beta rho / w`
    DelayBound,
    Both,
}

/// Derived quantities of one model evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub n: u64,
    pub k: u32,
    pub policy: RetransmitPolicy,
    /// `c(n)`
    pub packets: f64,
    /// One-way round cost `tau_k`; zero for the conceptual model.
    pub tau: f64,
    /// `w / (2 n tau_k)`; infinite when `tau_k = 0`.
    pub granularity: f64,
    /// Expected transmissions per round, `>= 1`.
    pub rho_hat: f64,
    /// Per-packet success `(1-p^k)^2` under lost-only retransmission, whole
    /// round success `(1-p^k)^{2c}` otherwise.
    pub p_success: f64,
    pub speedup: f64,
    pub efficiency: f64,
    pub dominating_term: Option<DominatingTerm>,
    /// Set when the expected number of transmissions is unbounded.
    pub no_progress: bool,
}

impl SpeedupReport {
    fn stalled(scenario: &Scenario, packets: f64, tau: f64, granularity: f64, p_success: f64) -> Self {
        SpeedupReport {
            n: scenario.n,
            k: scenario.redundancy.get(),
            policy: scenario.policy,
            packets,
            tau,
            granularity,
            rho_hat: f64::INFINITY,
            p_success,
            speedup: 0.0,
            efficiency: 0.0,
            dominating_term: dominating_term(&scenario.comm).ok(),
            no_progress: true,
        }
    }
}

/// Conceptual model speedup `n (1 - p^k)^{2 c(n)}`: communication is free but
/// any loss repeats the round's work.
pub fn conceptual_speedup(scenario: &Scenario) -> Result<SpeedupReport> {
    scenario.validate()?;
    if scenario.policy != RetransmitPolicy::AllOnAnyLoss {
        return Err(ModelError::UnsupportedPattern(format!(
            "conceptual model with policy {}",
            scenario.policy
        )));
    }
    let n = scenario.n as f64;
    let c = scenario.packets();
    let k = scenario.redundancy.get();
    let ps = round_success(scenario.network.p, k, c)?;
    let p_success = ps.value();
    let (rho_hat, no_progress) = if ps.is_zero() {
        (f64::INFINITY, true)
    } else {
        (ps.ln_reciprocal().exp(), false)
    };
    let speedup = (n.ln() + ps.ln()).exp();
    Ok(SpeedupReport {
        n: scenario.n,
        k,
        policy: scenario.policy,
        packets: c,
        tau: 0.0,
        granularity: 0.0,
        rho_hat,
        p_success,
        speedup,
        efficiency: speedup / n,
        dominating_term: None,
        no_progress,
    })
}

/// Small-`p` approximation of [`conceptual_speedup`]: `n e^{-2 p^k c(n)}`.
pub fn conceptual_speedup_approx(scenario: &Scenario) -> f64 {
    let n = scenario.n as f64;
    approx_speedup_at(
        n,
        scenario.network.p.powi(scenario.redundancy.get() as i32),
        &scenario.comm,
    )
}

/// `ln(n e^{-2 p^k c(n)}) = ln n - 2 p^k c(n)`.
pub(crate) fn ln_approx_speedup_at(n: f64, pk: f64, comm: &CommPattern) -> f64 {
    n.ln() - 2.0 * pk * comm.eval(n)
}

pub(crate) fn approx_speedup_at(n: f64, pk: f64, comm: &CommPattern) -> f64 {
    ln_approx_speedup_at(n, pk, comm).exp()
}

/// One-way communication cost of a round, `tau_k = k (c(n)/n) alpha + beta`.
/// The retransmission timeout is `2 tau_k`.
pub fn tau(comm: &CommPattern, n: u64, k: u32, network: &NetworkParams) -> f64 {
    let n = n as f64;
    f64::from(k) * (comm.eval(n) / n) * network.alpha + network.beta
}

/// L-BSP speedup for the scenario's retransmission policy.
///
/// Both policies are evaluated as `n / (1 + 2 n rho tau_k / w)`, which equals
/// `G n / (G + rho)` and `n G p_s / (1 + G p_s)` (with `rho = 1/p_s`) but
/// stays finite when `tau_k = 0`.
pub fn lbsp_speedup(scenario: &Scenario) -> Result<SpeedupReport> {
    scenario.validate()?;
    let n = scenario.n as f64;
    let k = scenario.redundancy.get();
    let c = scenario.packets();
    let w = scenario.work.w;
    let tau = tau(&scenario.comm, scenario.n, k, &scenario.network);
    let granularity = w / (2.0 * n * tau);
    let p = scenario.network.p;

    let (rho_hat, p_success) = match scenario.policy {
        RetransmitPolicy::LostOnly => {
            let q = single_packet_failure(p, k)?;
            if q == 1.0 && c > 0.0 {
                return Ok(SpeedupReport::stalled(scenario, c, tau, granularity, 0.0));
            }
            (expected_transmissions_lost_only_from_failure(q, c)?, 1.0 - q)
        }
        RetransmitPolicy::AllOnAnyLoss => {
            let ps = round_success(p, k, c)?;
            let rho = ps.ln_reciprocal().exp();
            if ps.is_zero() || rho.is_infinite() {
                return Ok(SpeedupReport::stalled(scenario, c, tau, granularity, ps.value()));
            }
            (rho, ps.value())
        }
    };

    let speedup = n / (1.0 + 2.0 * n * rho_hat * tau / w);
    Ok(SpeedupReport {
        n: scenario.n,
        k,
        policy: scenario.policy,
        packets: c,
        tau,
        granularity,
        rho_hat,
        p_success,
        speedup,
        efficiency: speedup / n,
        dominating_term: dominating_term(&scenario.comm).ok(),
        no_progress: false,
    })
}

/// Growth-exponent band around linear for classifying custom patterns.
const LINEAR_BAND: f64 = 0.05;

/// Classifies which denominator term dominates as `n -> infinity`.
///
/// Patterns growing faster than `n` are transmit bound, slower ones delay
/// bound, and linear patterns carry both. Custom patterns are classified from
/// the growth exponent of `c(n)` between `n = 2^10` and `n = 2^20`.
pub fn dominating_term(comm: &CommPattern) -> Result<DominatingTerm> {
    Ok(match comm.kind() {
        CommKind::Squared | CommKind::NLog2N => DominatingTerm::TransmitBound,
        CommKind::Linear => DominatingTerm::Both,
        CommKind::Log2SquaredN | CommKind::Log2N | CommKind::Constant1 => DominatingTerm::DelayBound,
        CommKind::Custom => {
            let lo = comm.eval(2f64.powi(10));
            let hi = comm.eval(2f64.powi(20));
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(ModelError::UnsupportedPattern(comm.name().to_string()));
            }
            let exponent = (hi / lo).log2() / 10.0;
            if exponent > 1.0 + LINEAR_BAND {
                DominatingTerm::TransmitBound
            } else if exponent >= 1.0 - LINEAR_BAND {
                DominatingTerm::Both
            } else {
                DominatingTerm::DelayBound
            }
        }
    })
}

/// Speedup ceiling when transmit time vanishes and redundancy removes loss:
/// `n / (2 n beta / w + 1)`.
pub fn limit_speedup_alpha_zero(n: u64, w: f64, beta: f64) -> f64 {
    let n = n as f64;
    n / (2.0 * n * beta / w + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Redundancy, Workload};

    fn scenario(p: f64, k: u32, comm: CommPattern, n: u64, policy: RetransmitPolicy) -> Scenario {
        Scenario {
            network: NetworkParams::new(p, 0.002, 0.05).unwrap(),
            comm,
            work: Workload::new(3600.0, 1).unwrap(),
            redundancy: Redundancy::new(k).unwrap(),
            policy,
            n,
        }
    }

    #[test]
    fn conceptual_examples() {
        let s = scenario(0.0, 1, CommPattern::Squared, 4, RetransmitPolicy::AllOnAnyLoss);
        assert_eq!(conceptual_speedup(&s).unwrap().speedup, 4.0);

        let s = scenario(0.1, 1, CommPattern::Constant1, 8, RetransmitPolicy::AllOnAnyLoss);
        let r = conceptual_speedup(&s).unwrap();
        assert!((r.speedup - 6.48).abs() < 1e-12);
        assert!((r.rho_hat - 1.0 / 0.81).abs() < 1e-12);
        assert_eq!(r.tau, 0.0);

        let s = scenario(0.1, 2, CommPattern::Linear, 16, RetransmitPolicy::AllOnAnyLoss);
        let oracle = 16.0 * 0.99f64.powi(32);
        assert!((conceptual_speedup(&s).unwrap().speedup - oracle).abs() < 1e-12);
    }

    #[test]
    fn conceptual_requires_retransmit_all() {
        let s = scenario(0.1, 1, CommPattern::Linear, 4, RetransmitPolicy::LostOnly);
        assert!(conceptual_speedup(&s).is_err());
    }

    #[test]
    fn approximation_examples() {
        let s = scenario(0.1, 1, CommPattern::Linear, 5, RetransmitPolicy::AllOnAnyLoss);
        assert!((conceptual_speedup_approx(&s) - 5.0 * (-1.0f64).exp()).abs() < 1e-12);

        let s = scenario(0.3, 1, CommPattern::Constant1, 1, RetransmitPolicy::AllOnAnyLoss);
        assert!(conceptual_speedup_approx(&s) <= 1.0);

        let s = scenario(0.01, 1, CommPattern::Linear, 10, RetransmitPolicy::AllOnAnyLoss);
        let exact = conceptual_speedup(&s).unwrap().speedup;
        let approx = conceptual_speedup_approx(&s);
        assert!(((exact - approx) / exact).abs() < 0.02);
    }

    #[test]
    fn tau_examples() {
        let net = NetworkParams::new(0.0, 0.002, 0.05).unwrap();
        assert!((tau(&CommPattern::Linear, 37, 1, &net) - 0.052).abs() < 1e-15);
        let net0 = NetworkParams::new(0.0, 0.0, 0.05).unwrap();
        assert_eq!(tau(&CommPattern::Constant1, 10, 1, &net0), 0.05);
        let net1 = NetworkParams::new(0.0, 0.001, 0.05).unwrap();
        assert!((tau(&CommPattern::Squared, 100, 3, &net1) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn lossless_policies_coincide() {
        for comm in [CommPattern::Linear, CommPattern::Squared, CommPattern::Log2N] {
            let a = lbsp_speedup(&scenario(0.0, 1, comm.clone(), 64, RetransmitPolicy::LostOnly)).unwrap();
            let b = lbsp_speedup(&scenario(0.0, 1, comm, 64, RetransmitPolicy::AllOnAnyLoss)).unwrap();
            assert_eq!(a.rho_hat, 1.0);
            assert_eq!(b.rho_hat, 1.0);
            let g = a.granularity;
            let expected = 64.0 * g / (g + 1.0);
            assert!((a.speedup - expected).abs() < 1e-9 * expected);
            assert!((b.speedup - expected).abs() < 1e-9 * expected);
        }
    }

    #[test]
    fn forms_agree_with_printed_expressions() {
        let s = scenario(0.05, 2, CommPattern::NLog2N, 128, RetransmitPolicy::LostOnly);
        let r = lbsp_speedup(&s).unwrap();
        let g1 = r.granularity;
        assert!((r.speedup - g1 * 128.0 / (g1 + r.rho_hat)).abs() < 1e-9);

        let s = s.clone();
        let s = Scenario {
            policy: RetransmitPolicy::AllOnAnyLoss,
            ..s
        };
        let r = lbsp_speedup(&s).unwrap();
        let g = r.granularity;
        let ps = r.p_success;
        assert!((r.speedup - 128.0 * g * ps / (1.0 + g * ps)).abs() < 1e-9);
    }

    #[test]
    fn huge_work_approaches_linear() {
        let s = scenario(0.1, 1, CommPattern::Squared, 256, RetransmitPolicy::LostOnly).with_work(1e15);
        let r = lbsp_speedup(&s).unwrap();
        assert!((r.speedup - 256.0).abs() / 256.0 < 1e-3);
    }

    #[test]
    fn total_loss_is_flagged() {
        for policy in [RetransmitPolicy::LostOnly, RetransmitPolicy::AllOnAnyLoss] {
            let r = lbsp_speedup(&scenario(1.0, 3, CommPattern::Linear, 8, policy)).unwrap();
            assert!(r.no_progress);
            assert_eq!(r.speedup, 0.0);
            assert!(r.rho_hat.is_infinite());
        }
    }

    #[test]
    fn dominating_terms() {
        assert_eq!(
            dominating_term(&CommPattern::Squared).unwrap(),
            DominatingTerm::TransmitBound
        );
        assert_eq!(
            dominating_term(&CommPattern::NLog2N).unwrap(),
            DominatingTerm::TransmitBound
        );
        assert_eq!(
            dominating_term(&CommPattern::Linear).unwrap(),
            DominatingTerm::Both
        );
        assert_eq!(
            dominating_term(&CommPattern::Log2SquaredN).unwrap(),
            DominatingTerm::DelayBound
        );
        assert_eq!(
            dominating_term(&CommPattern::Log2N).unwrap(),
            DominatingTerm::DelayBound
        );
        assert_eq!(
            dominating_term(&CommPattern::Constant1).unwrap(),
            DominatingTerm::DelayBound
        );

        let cubic = CommPattern::custom("n^1.5", |n| n.powf(1.5));
        assert_eq!(dominating_term(&cubic).unwrap(), DominatingTerm::TransmitBound);
        let ring = CommPattern::custom("2(n-1)", |n| 2.0 * (n - 1.0));
        assert_eq!(dominating_term(&ring).unwrap(), DominatingTerm::Both);
        let root = CommPattern::custom("sqrt n", f64::sqrt);
        assert_eq!(dominating_term(&root).unwrap(), DominatingTerm::DelayBound);
        let zero = CommPattern::custom("zero", |_| 0.0);
        assert!(dominating_term(&zero).is_err());
    }

    #[test]
    fn limit_examples() {
        assert_eq!(limit_speedup_alpha_zero(2, 1.0, 0.0), 2.0);
        let v = limit_speedup_alpha_zero(1000, 36000.0, 0.05);
        assert!((v - 997.229_916_897_506_9).abs() < 1e-9);
    }
}
