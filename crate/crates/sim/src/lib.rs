//! Seeded Monte Carlo simulation of lossy BSP communication rounds.
//!
//! Each trial plays out one superstep's communication packet by packet: every
//! attempt sends `k` data copies, and if one arrives the receiver answers with
//! `k` acknowledgment copies. A logical packet is done when an acknowledgment
//! gets back. Trials draw from independent ChaCha8 streams keyed by
//! `(master_seed, trial_index)`, so results do not depend on how trials are
//! scheduled across threads.

use lbsp_core::{lbsp_speedup, tau, ModelError, RetransmitPolicy, Scenario, SpeedupReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

/// Fixed trial batch size; batches are reduced in index order.
const BATCH: u64 = 4096;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid simulation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub trials: u64,
    pub master_seed: u64,
    pub max_rounds_per_trial: u64,
    /// Drop trials that hit the round cap from the mean instead of counting
    /// them at the cap.
    #[serde(default)]
    pub exclude_capped: bool,
}

impl SimConfig {
    pub fn new(scenario: Scenario, trials: u64, master_seed: u64) -> Self {
        SimConfig {
            scenario,
            trials,
            master_seed,
            max_rounds_per_trial: DEFAULT_MAX_ROUNDS,
            exclude_capped: false,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(SimError::Config("trials must be >= 1".into()));
        }
        if self.max_rounds_per_trial == 0 {
            return Err(SimError::Config("max_rounds_per_trial must be >= 1".into()));
        }
        Ok(())
    }

    /// Logical packets per round: `ceil(c(n))`.
    pub fn packets(&self) -> u64 {
        self.scenario.packets().ceil() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub packets: u64,
    pub mean_transmissions: f64,
    pub std_error: f64,
    pub empirical_speedup: f64,
    /// Standard error of `empirical_speedup`, propagated to first order.
    pub speedup_std_error: f64,
    pub trials_capped: u64,
    pub per_trial_seeds_reproducible: bool,
}

/// Exact integer moments, so reduction order never changes the result.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: u128,
    sum_sq: u128,
    capped: u64,
}

impl Moments {
    fn merge(self, other: Moments) -> Moments {
        Moments {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            capped: self.capped + other.capped,
        }
    }
}

/// The random stream used by one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

#[inline]
fn any_copy_arrives<R: Rng>(rng: &mut R, p: f64, k: u32) -> bool {
    (0..k).any(|_| rng.random::<f64>() >= p)
}

#[inline]
fn exchange_succeeds<R: Rng>(rng: &mut R, p: f64, k: u32) -> bool {
    any_copy_arrives(rng, p, k) && any_copy_arrives(rng, p, k)
}

/// Plays one trial; returns the number of attempt rounds and whether the cap
/// was hit before every packet was acknowledged.
pub fn run_trial<R: Rng>(
    rng: &mut R,
    packets: u64,
    p: f64,
    k: u32,
    policy: RetransmitPolicy,
    max_rounds: u64,
) -> (u64, bool) {
    let mut rounds = 0;
    match policy {
        RetransmitPolicy::LostOnly => {
            let mut pending = packets;
            loop {
                rounds += 1;
                let mut still = 0;
                for _ in 0..pending {
                    if !exchange_succeeds(rng, p, k) {
                        still += 1;
                    }
                }
                pending = still;
                if pending == 0 {
                    return (rounds, false);
                }
                if rounds >= max_rounds {
                    return (rounds, true);
                }
            }
        }
        RetransmitPolicy::AllOnAnyLoss => loop {
            rounds += 1;
            if (0..packets).all(|_| exchange_succeeds(rng, p, k)) {
                return (rounds, false);
            }
            if rounds >= max_rounds {
                return (rounds, true);
            }
        },
    }
}

/// Estimates the expected number of transmission rounds, and the speedup
/// that implies, by simulation.
pub fn simulate_round_transmissions(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let scenario = &config.scenario;
    let packets = config.packets();
    let p = scenario.network.p;
    let k = scenario.redundancy.get();
    let policy = scenario.policy;
    let cap = config.max_rounds_per_trial;
    let exclude = config.exclude_capped;

    let batches = config.trials.div_ceil(BATCH);
    let partials: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * BATCH;
            let end = (start + BATCH).min(config.trials);
            let mut m = Moments::default();
            for trial in start..end {
                let mut rng = trial_rng(config.master_seed, trial);
                let (rounds, capped) = run_trial(&mut rng, packets, p, k, policy, cap);
                if capped {
                    m.capped += 1;
                    if exclude {
                        continue;
                    }
                }
                m.count += 1;
                m.sum += u128::from(rounds);
                m.sum_sq += u128::from(rounds) * u128::from(rounds);
            }
            m
        })
        .collect();
    let total = partials.into_iter().fold(Moments::default(), Moments::merge);

    let (mean, std_error) = if total.count == 0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let n = total.count as f64;
        let mean = total.sum as f64 / n;
        let var = if total.count > 1 {
            // exact integer numerator: n * sum_sq - sum^2
            let num = total.sum_sq * u128::from(total.count) - total.sum * total.sum;
            num as f64 / (n * (n - 1.0))
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };

    let tau_k = tau(&scenario.comm, scenario.n, k, &scenario.network);
    let (empirical_speedup, speedup_std_error) = speedup_from_mean(scenario, tau_k, mean, std_error);

    Ok(SimResult {
        trials: config.trials,
        packets,
        mean_transmissions: mean,
        std_error,
        empirical_speedup,
        speedup_std_error,
        trials_capped: total.capped,
        per_trial_seeds_reproducible: true,
    })
}

/// `w / (w/n + 2 rho tau_k)` and its first-order standard error.
fn speedup_from_mean(scenario: &Scenario, tau_k: f64, mean: f64, se: f64) -> (f64, f64) {
    let w = scenario.work.w;
    let n = scenario.n as f64;
    if !mean.is_finite() {
        return (0.0, 0.0);
    }
    let denom = w / n + 2.0 * mean * tau_k;
    let s = w / denom;
    let ds = w * 2.0 * tau_k / (denom * denom);
    (s, ds * se)
}

/// Simulated speedup for the scenario (same run as
/// [`simulate_round_transmissions`]).
pub fn simulate_speedup(config: &SimConfig) -> Result<SimResult, SimError> {
    simulate_round_transmissions(config)
}

/// Simulation next to the analytic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sim: SimResult,
    pub analytic: SpeedupReport,
    /// `(mean - rho) / std_error`; zero when both agree exactly.
    pub z_transmissions: f64,
    pub z_speedup: f64,
}

fn z(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / se
    }
}

pub fn compare_with_analytic(config: &SimConfig) -> Result<Comparison, SimError> {
    let sim = simulate_round_transmissions(config)?;
    let analytic = lbsp_speedup(&config.scenario)?;
    Ok(Comparison {
        z_transmissions: z(sim.mean_transmissions - analytic.rho_hat, sim.std_error),
        z_speedup: z(sim.empirical_speedup - analytic.speedup, sim.speedup_std_error),
        sim,
        analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lbsp_core::{CommPattern, NetworkParams, Redundancy, Workload};

    fn config(p: f64, k: u32, c: f64, policy: RetransmitPolicy, trials: u64) -> SimConfig {
        let scenario = Scenario {
            network: NetworkParams::new(p, 0.001, 0.05).unwrap(),
            comm: CommPattern::custom("fixed", move |_| c),
            work: Workload::new(100.0, 1).unwrap(),
            redundancy: Redundancy::new(k).unwrap(),
            policy,
            n: 8,
        };
        SimConfig::new(scenario, trials, 42)
    }

    #[test]
    fn lossless_is_exact() {
        for policy in [RetransmitPolicy::LostOnly, RetransmitPolicy::AllOnAnyLoss] {
            let r = simulate_round_transmissions(&config(0.0, 1, 25.0, policy, 1000)).unwrap();
            assert_eq!(r.mean_transmissions, 1.0);
            assert_eq!(r.std_error, 0.0);
            assert_eq!(r.trials_capped, 0);
        }
    }

    #[test]
    fn rejects_empty_configs() {
        let mut c = config(0.1, 1, 1.0, RetransmitPolicy::LostOnly, 0);
        assert!(simulate_round_transmissions(&c).is_err());
        c.trials = 10;
        c.max_rounds_per_trial = 0;
        assert!(simulate_round_transmissions(&c).is_err());
    }

    #[test]
    fn cap_is_reported() {
        let mut c = config(0.999, 1, 1.0, RetransmitPolicy::LostOnly, 50);
        c.max_rounds_per_trial = 100;
        let r = simulate_round_transmissions(&c).unwrap();
        assert!(r.trials_capped > 0);
        assert!(r.mean_transmissions <= 100.0);
        c.exclude_capped = true;
        let r2 = simulate_round_transmissions(&c).unwrap();
        assert_eq!(r2.trials_capped, r.trials_capped);
    }

    #[test]
    fn trial_streams_are_independent_of_order() {
        let mut a = trial_rng(7, 3);
        let _ = trial_rng(7, 2).random::<u64>();
        let mut b = trial_rng(7, 3);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
        assert_ne!(trial_rng(7, 3).random::<u64>(), trial_rng(7, 4).random::<u64>());
    }

    #[test]
    fn zero_packets_take_one_round() {
        let mut rng = trial_rng(1, 1);
        assert_eq!(
            run_trial(&mut rng, 0, 0.5, 1, RetransmitPolicy::LostOnly, 10),
            (1, false)
        );
        assert_eq!(
            run_trial(&mut rng, 0, 0.5, 1, RetransmitPolicy::AllOnAnyLoss, 10),
            (1, false)
        );
    }
}
