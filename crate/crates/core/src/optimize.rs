//! Node-count and redundancy optimisers.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{CommKind, CommPattern, Redundancy, Scenario};
use crate::speedup::{lbsp_speedup, ln_approx_speedup_at, SpeedupReport};
use crate::transmissions::round_success;

/// Result of the conceptual node-count optimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimalN {
    /// Approximate speedup increases without bound in `n`.
    Unbounded,
    Finite(NOptimum),
}

impl OptimalN {
    pub fn finite(&self) -> Option<&NOptimum> {
        match self {
            OptimalN::Finite(opt) => Some(opt),
            OptimalN::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NOptimum {
    /// Stationary point of `n e^{-2 p^k c(n)}`, clamped to `n >= 1`.
    pub real_root: f64,
    /// `floor` of the closed-form root, where a closed form exists.
    pub closed_form_floor: Option<f64>,
    /// Integer neighbour of the root with the larger approximate speedup.
    /// Integral, but kept as `f64` because it can exceed `u64`.
    pub n: f64,
    /// Integer neighbour of the root with the larger exact speedup
    /// `n (1 - p^k)^{2 c(n)}`.
    pub n_exact: f64,
    /// `ln` of the approximate speedup at `n`.
    pub ln_speedup_approx: f64,
}

impl NOptimum {
    pub fn as_u64(&self) -> Option<u64> {
        (self.n <= u64::MAX as f64).then_some(self.n as u64)
    }
}

/// Scan limit used for custom patterns.
pub const CUSTOM_SCAN_LIMIT: u64 = 1 << 20;

/// `floor`, except that a root within rounding error of an integer counts as
/// that integer (`1 / (2 * 0.05^2)` evaluates to 199.99999999999997).
fn closed_floor(root: f64) -> f64 {
    let nearest = root.round();
    if (root - nearest).abs() <= 8.0 * f64::EPSILON * root {
        nearest
    } else {
        root.floor()
    }
}

/// Optimal node count for the conceptual model under the small-`p`
/// approximation `S_E ~ n e^{-2 p^k c(n)}`.
///
/// Closed forms: `e^{ln^2 2 / (4 p^k)}` for `log2^2 n`, `1 / (2 p^k)` for `n`,
/// `1 / (2 sqrt(p^k))` for `n^2`. `n log2 n` is solved by bisection. The
/// returned integer is whichever of `floor`/`ceil` of the root has the larger
/// approximate speedup (ties go to the smaller).
pub fn optimal_n_conceptual(p: f64, k: u32, comm: &CommPattern) -> Result<OptimalN> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ModelError::Domain {
            name: "p",
            value: p,
            domain: "(0, 1)",
        });
    }
    Redundancy::new(k)?;
    let pk = p.powi(k as i32);

    let (root, closed) = match comm.kind() {
        CommKind::Constant1 => return Ok(OptimalN::Unbounded),
        CommKind::Log2N => {
            // S ~ n^{1 - 2 p^k / ln 2}
            if 1.0 - 2.0 * pk / LN_2 > 0.0 {
                return Ok(OptimalN::Unbounded);
            }
            (1.0, None)
        }
        CommKind::Log2SquaredN => {
            let root = (LN_2 * LN_2 / (4.0 * pk)).exp();
            (root, Some(closed_floor(root)))
        }
        CommKind::Linear => {
            let root = 1.0 / (2.0 * pk);
            (root, Some(closed_floor(root)))
        }
        CommKind::Squared => {
            let root = 1.0 / (2.0 * pk.sqrt());
            (root, Some(closed_floor(root)))
        }
        CommKind::NLog2N => (nlog2n_root(pk), None),
        CommKind::Custom => return custom_scan(pk, p, k, comm),
    };

    let root = root.max(1.0);
    let lo = root.floor().max(1.0);
    let hi = root.ceil().max(1.0);
    let ln_lo = ln_approx_speedup_at(lo, pk, comm);
    let ln_hi = ln_approx_speedup_at(hi, pk, comm);
    let (n, ln_speedup_approx) = if ln_hi > ln_lo { (hi, ln_hi) } else { (lo, ln_lo) };
    let ln_exact = |m: f64| -> Result<f64> { Ok(m.ln() + round_success(p, k, comm.eval(m))?.ln()) };
    let n_exact = if ln_exact(hi)? > ln_exact(lo)? { hi } else { lo };

    Ok(OptimalN::Finite(NOptimum {
        real_root: root,
        closed_form_floor: closed,
        n,
        n_exact,
        ln_speedup_approx,
    }))
}

/// Root of `d/dn [ln n - 2 p^k n log2 n] = 1/n - 2 p^k (log2 n + 1/ln 2)`.
///
/// Multiplying by `n` gives `h(n) = 1 - 2 p^k n (log2 n + 1/ln 2)`, which is
/// decreasing for `n >= 1`; bisect on `ln n`.
fn nlog2n_root(pk: f64) -> f64 {
    let h = |x: f64| {
        let n = x.exp();
        1.0 - 2.0 * pk * n * (x / LN_2 + 1.0 / LN_2)
    };
    if h(0.0) <= 0.0 {
        return 1.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn custom_scan(pk: f64, p: f64, k: u32, comm: &CommPattern) -> Result<OptimalN> {
    let mut best = 1u64;
    let mut best_ln = ln_approx_speedup_at(1.0, pk, comm);
    let mut best_exact = 1u64;
    let mut best_exact_ln = f64::NEG_INFINITY;
    for n in 1..=CUSTOM_SCAN_LIMIT {
        let x = n as f64;
        let ln = ln_approx_speedup_at(x, pk, comm);
        if ln > best_ln {
            best = n;
            best_ln = ln;
        }
        let ln_exact = x.ln() + round_success(p, k, comm.eval(x))?.ln();
        if ln_exact > best_exact_ln {
            best_exact = n;
            best_exact_ln = ln_exact;
        }
    }
    if best == CUSTOM_SCAN_LIMIT {
        return Ok(OptimalN::Unbounded);
    }
    Ok(OptimalN::Finite(NOptimum {
        real_root: best as f64,
        closed_form_floor: None,
        n: best as f64,
        n_exact: best_exact as f64,
        ln_speedup_approx: best_ln,
    }))
}

/// Outcome of the redundancy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalK {
    pub k: u32,
    pub report: SpeedupReport,
    /// `(k, k * rho^k)` for every candidate, for diagnostics.
    pub products: Vec<(u32, f64)>,
    /// Candidate minimising `k * rho^k`.
    pub min_product_k: u32,
}

pub const DEFAULT_K_MAX: u32 = 64;

/// Exhaustive search over `k in [1, k_max]` for the largest L-BSP speedup.
///
/// The `k * rho^k` product is reported but not used for selection: it ignores
/// the delay term `2 n beta rho^k / w`. Ties go to the smaller `k`.
pub fn optimal_k(scenario: &Scenario, k_max: u32) -> Result<OptimalK> {
    Redundancy::new(k_max)?;
    let mut best: Option<(u32, SpeedupReport)> = None;
    let mut products = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let report = lbsp_speedup(&scenario.with_k(Redundancy::new(k)?))?;
        products.push((k, f64::from(k) * report.rho_hat));
        let better = match &best {
            None => true,
            Some((_, b)) => report.speedup > b.speedup,
        };
        if better {
            best = Some((k, report));
        }
    }
    let (k, report) = best.expect("k_max >= 1");
    let min_product_k = products
        .iter()
        .fold(
            (0u32, f64::INFINITY),
            |acc, &(k, v)| if v < acc.1 { (k, v) } else { acc },
        )
        .0;
    Ok(OptimalK {
        k,
        report,
        products,
        min_product_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{NetworkParams, RetransmitPolicy, Workload};

    fn brute_force_argmax(pk: f64, comm: &CommPattern, limit: u64) -> u64 {
        let mut best = 1;
        let mut best_v = f64::NEG_INFINITY;
        for n in 1..=limit {
            let x = n as f64;
            let v = x * (-2.0 * pk * comm.eval(x)).exp();
            if v > best_v {
                best = n;
                best_v = v;
            }
        }
        best
    }

    #[test]
    fn linear_closed_form() {
        let opt = optimal_n_conceptual(0.1, 1, &CommPattern::Linear).unwrap();
        let opt = opt.finite().unwrap();
        assert_eq!(opt.closed_form_floor, Some(5.0));
        assert_eq!(opt.n, 5.0);
        assert_eq!(brute_force_argmax(0.1, &CommPattern::Linear, 10_000), 5);
    }

    #[test]
    fn squared_closed_form() {
        let opt = optimal_n_conceptual(0.25, 2, &CommPattern::Squared).unwrap();
        assert_eq!(opt.finite().unwrap().closed_form_floor, Some(2.0));
        assert_eq!(opt.finite().unwrap().n, 2.0);
    }

    #[test]
    fn rounding_picks_better_neighbour() {
        // root 2.5: approx speedup prefers 3, exact prefers 2
        let opt = optimal_n_conceptual(0.2, 1, &CommPattern::Linear).unwrap();
        let opt = opt.finite().unwrap();
        assert_eq!(opt.closed_form_floor, Some(2.0));
        assert_eq!(opt.n, 3.0);
        assert_eq!(opt.n_exact, 2.0);
    }

    #[test]
    fn monotone_patterns() {
        assert_eq!(
            optimal_n_conceptual(0.1, 1, &CommPattern::Constant1).unwrap(),
            OptimalN::Unbounded
        );
        assert_eq!(
            optimal_n_conceptual(0.1, 1, &CommPattern::Log2N).unwrap(),
            OptimalN::Unbounded
        );
        // 2 p / ln 2 > 1 makes n^{1 - 2p/ln2} decreasing
        let opt = optimal_n_conceptual(0.9, 1, &CommPattern::Log2N).unwrap();
        assert_eq!(opt.finite().unwrap().n, 1.0);
    }

    #[test]
    fn nlog2n_matches_brute_force() {
        for &p in &[0.05, 0.1, 0.2] {
            let opt = optimal_n_conceptual(p, 1, &CommPattern::NLog2N).unwrap();
            let n = opt.finite().unwrap().n as u64;
            assert_eq!(n, brute_force_argmax(p, &CommPattern::NLog2N, 10_000), "p={p}");
        }
    }

    #[test]
    fn custom_pattern_scan() {
        let lin = CommPattern::custom("linear", |n| n);
        let opt = optimal_n_conceptual(0.1, 1, &lin).unwrap();
        assert_eq!(opt.finite().unwrap().n, 5.0);
        let flat = CommPattern::custom("flat", |_| 1.0);
        assert_eq!(optimal_n_conceptual(0.1, 1, &flat).unwrap(), OptimalN::Unbounded);
    }

    #[test]
    fn domain_errors() {
        assert!(optimal_n_conceptual(0.0, 1, &CommPattern::Linear).is_err());
        assert!(optimal_n_conceptual(1.0, 1, &CommPattern::Linear).is_err());
        assert!(optimal_n_conceptual(0.1, 0, &CommPattern::Linear).is_err());
    }

    fn lbsp(p: f64, alpha: f64, beta: f64, comm: CommPattern, n: u64) -> Scenario {
        Scenario {
            network: NetworkParams::new(p, alpha, beta).unwrap(),
            comm,
            work: Workload::new(36000.0, 1).unwrap(),
            redundancy: Redundancy::SINGLE,
            policy: RetransmitPolicy::LostOnly,
            n,
        }
    }

    #[test]
    fn no_loss_never_needs_copies() {
        let s = lbsp(0.0, 0.001, 0.05, CommPattern::Linear, 1024);
        assert_eq!(optimal_k(&s, 16).unwrap().k, 1);
    }

    #[test]
    fn pure_transmit_cost_prefers_one_copy() {
        let s = lbsp(1e-6, 10.0, 0.0, CommPattern::Squared, 64);
        let opt = optimal_k(&s, 8).unwrap();
        assert_eq!(opt.k, 1);
        let speeds: Vec<f64> = (1..=8)
            .map(|k| {
                lbsp_speedup(&s.with_k(Redundancy::new(k).unwrap()))
                    .unwrap()
                    .speedup
            })
            .collect();
        assert!(speeds.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn lossy_delay_bound_picks_redundancy() {
        let s = lbsp(0.1, 1e-6, 0.05, CommPattern::Squared, 4096);
        let opt = optimal_k(&s, 64).unwrap();
        assert!(opt.k > 1);
        assert_eq!(opt.products.len(), 64);
        assert!(opt.products.iter().any(|&(k, _)| k == opt.min_product_k));
    }

    #[test]
    fn closed_floor_ignores_rounding_error() {
        let opt = optimal_n_conceptual(0.05, 2, &CommPattern::Linear).unwrap();
        assert_eq!(opt.finite().unwrap().closed_form_floor, Some(200.0));
        assert_eq!(closed_floor(12.5), 12.0);
    }
}
