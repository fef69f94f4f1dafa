//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fail.

use std::time::{Duration, Instant};

use lbsp_core::algo::{algo_speedup, fft2d_speedup, matmul_speedup_real_grid, reference_rows, LogBase};
use lbsp_core::*;
use lbsp_probe::{channel_pair, run_probe, serve, LinkConfig, Peer, ProbeOptions};
use lbsp_sim::{simulate_round_transmissions, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(p: f64, k: u32, comm: CommPattern, n: u64, policy: RetransmitPolicy) -> Scenario {
    Scenario {
        network: NetworkParams::new(p, 0.001, 0.05).unwrap(),
        comm,
        work: Workload::new(3600.0, 1).unwrap(),
        redundancy: Redundancy::new(k).unwrap(),
        policy,
        n,
    }
}

fn fixed(c: f64) -> CommPattern {
    CommPattern::custom("fixed", move |_| c)
}

fn geometric_reduction() -> Outcome {
    let mut grid = vec![0.01];
    grid.extend((1..=19).map(|i| f64::from(i) * 0.05));
    grid.push(0.99);
    let worst = grid
        .iter()
        .map(|&ps| (expected_transmissions_lost_only(ps, 1.0).unwrap() - 1.0 / ps).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!("max |rho - 1/p_s| = {worst:.3e} over {} points", grid.len()),
    )
}

/// `sum_i i ([1 - q^i]^c - [1 - q^{i-1}]^c)` summed term by term.
fn telescoping(p_single: f64, c: u32) -> f64 {
    let q = 1.0 - p_single;
    let (mut total, mut prev) = (0.0, 0.0);
    for i in 1..1_000_000u32 {
        let cur = (1.0 - q.powi(i as i32)).powi(c as i32);
        total += f64::from(i) * (cur - prev);
        if i > 10 && 1.0 - cur < 1e-18 {
            break;
        }
        prev = cur;
    }
    total
}

fn series_cross_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [1u32, 10, 100, 1000] {
        for p in [0.01, 0.1, 0.3] {
            let ps = (1.0 - p) * (1.0 - p);
            let survival = expected_transmissions_lost_only(ps, f64::from(c)).unwrap();
            worst = worst.max((survival - telescoping(ps, c)).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |survival - telescoping| = {worst:.3e}"),
    )
}

fn monte_carlo() -> Outcome {
    let lost = scenario(0.1, 1, fixed(10.0), 4, RetransmitPolicy::LostOnly);
    let a = simulate_round_transmissions(&SimConfig::new(lost, 100_000, 2024)).unwrap();
    let series = expected_transmissions_lost_only((0.9f64).powi(2), 10.0).unwrap();
    let za = (a.mean_transmissions - series) / a.std_error;

    let all = scenario(0.05, 1, fixed(5.0), 4, RetransmitPolicy::AllOnAnyLoss);
    let b = simulate_round_transmissions(&SimConfig::new(all, 100_000, 2025)).unwrap();
    let geometric = 1.0 / (0.95f64).powi(10);
    let zb = (b.mean_transmissions - geometric) / b.std_error;
    outcome(
        za.abs() < 3.0 && zb.abs() < 3.0,
        format!(
            "lost-only {:.5} vs {series:.5} (z = {za:+.2}); all-on-any-loss {:.5} vs {geometric:.5} (z = {zb:+.2})",
            a.mean_transmissions, b.mean_transmissions
        ),
    )
}

fn table_reproduction() -> Outcome {
    let rows = reference_rows();
    let mut pass = true;
    let mut parts = Vec::new();
    for row in &rows {
        let r = algo_speedup(&row.instance, &row.network, row.k).unwrap();
        let rel = (r.speedup - row.listed.speedup).abs() / row.listed.speedup;
        pass &= rel <= 0.05;
        parts.push(format!(
            "{} {:.2} vs {} ({:.2}%)",
            row.label,
            r.speedup,
            row.listed.speedup,
            100.0 * rel
        ));
    }
    let mm = &rows[0];
    let mut inst = mm.instance.clone();
    inst.processors = 1 << 17;
    let mm17 = matmul_speedup_real_grid(&inst, &mm.network, mm.k)
        .unwrap()
        .speedup;
    parts.push(format!("matmul P=2^16 matches; P=2^17 gives {mm17:.2}"));
    let fft = &rows[2];
    let mut inst = fft.instance.clone();
    inst.fft_log_base = LogBase::Natural;
    let ln = fft2d_speedup(&inst, &fft.network, fft.k).unwrap().speedup;
    parts.push(format!("FFT log2 matches; ln gives {ln:.2}"));
    outcome(pass, parts.join("; "))
}

fn closed_form_optima() -> Outcome {
    const LIMIT: u64 = 10_000;
    type C = fn(f64) -> f64;
    let patterns: [(CommPattern, &str, C); 4] = [
        (CommPattern::Log2SquaredN, "log^2 n", |n| n.log2().powi(2)),
        (CommPattern::Linear, "n", |n| n),
        (CommPattern::Squared, "n^2", |n| n * n),
        (CommPattern::NLog2N, "n log n", |n| n * n.log2()),
    ];
    let mut failures = Vec::new();
    let mut interior = 0;
    let mut boundary = 0;
    for p in [0.05f64, 0.1, 0.2] {
        for k in [1u32, 2] {
            let pk = p.powi(k as i32);
            for (comm, label, c) in &patterns {
                let ln_s = |n: u64| (n as f64).ln() - 2.0 * pk * c(n as f64);
                let brute = (1..=LIMIT).max_by(|&a, &b| ln_s(a).total_cmp(&ln_s(b))).unwrap();
                let found = match optimal_n_conceptual(p, k, comm).unwrap() {
                    OptimalN::Unbounded => None,
                    OptimalN::Finite(o) => Some(o.n),
                };
                let ok = match found {
                    Some(n) if n <= LIMIT as f64 => {
                        interior += 1;
                        n == brute as f64
                    }
                    // optimum beyond the search range: the brute force must
                    // still be climbing at its upper end
                    _ => {
                        boundary += 1;
                        brute == LIMIT && ln_s(LIMIT) > ln_s(LIMIT - 1)
                    }
                };
                if !ok {
                    failures.push(format!("p={p} k={k} c={label}: {found:?} vs {brute}"));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{interior} interior optima matched, {boundary} beyond 10^4 confirmed at the boundary")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    for _ in 0..10_000 {
        let p = rng.random_range(0.0..1.0);
        let c = 10f64.powf(rng.random_range(0.0..7.0));
        let k = rng.random_range(2..=16);
        if round_success(p, 1, c).unwrap().ln() > round_success(p, k, c).unwrap().ln() {
            violations += 1;
        }
    }
    let mut mc_violations = 0;
    let mut pairs = 0;
    for (i, &p) in [0.05, 0.2, 0.4].iter().enumerate() {
        for (j, &c) in [1.0, 10.0, 50.0].iter().enumerate() {
            let seed = (10 * i + j) as u64;
            let run = |k| {
                let s = scenario(p, k, fixed(c), 4, RetransmitPolicy::LostOnly);
                simulate_round_transmissions(&SimConfig::new(s, 20_000, seed))
                    .unwrap()
                    .mean_transmissions
            };
            let (one, two) = (run(1), run(2));
            pairs += 1;
            if two > one {
                mc_violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && mc_violations == 0,
        format!("{violations} analytic violations in 10^4 triples; {mc_violations} of {pairs} paired-seed runs violated"),
    )
}

fn alpha_zero_limit() -> Outcome {
    let (n, w, beta) = (131_072u64, 36_000.0, 0.05);
    let limit = n as f64 / (2.0 * n as f64 * beta / w + 1.0);
    let s = Scenario {
        network: NetworkParams::new(0.1, 0.0, beta).unwrap(),
        work: Workload::new(w, 1).unwrap(),
        ..scenario(0.1, 1, CommPattern::Linear, n, RetransmitPolicy::LostOnly)
    };
    let best = optimal_k(&s, DEFAULT_K_MAX).unwrap();
    let rel = (best.report.speedup - limit).abs() / limit;
    outcome(
        rel <= 1e-3,
        format!(
            "S = {:.2} at k = {} vs limit {limit:.2} (rel {rel:.2e})",
            best.report.speedup, best.k
        ),
    )
}

fn probe_loopback() -> Outcome {
    let probe = |loss: f64, seed: u64| {
        let link = LinkConfig::with_loss(loss);
        let (client, server) = channel_pair(link, link, seed);
        let stop = std::sync::atomic::AtomicBool::new(false);
        let opts = ProbeOptions {
            packet_sizes: vec![1024],
            packets_per_size: 10_000,
            send_interval: Duration::ZERO,
            drain_timeout: Duration::from_millis(500),
            burst_len: 100,
        };
        std::thread::scope(|s| {
            let responder = s.spawn(|| serve(&server, &stop).unwrap());
            let sample = run_probe(&client, Peer, &opts).unwrap().remove(0);
            stop.store(true, std::sync::atomic::Ordering::Relaxed);
            responder.join().unwrap();
            sample
        })
    };
    let lossy = probe(0.1, 8);
    let one_way = lossy.one_way_loss();
    let p = lossy.to_network_params().unwrap().p;
    let clean = probe(0.0, 9);
    let p_clean = clean.to_network_params().unwrap().p;
    let pass = (0.08..=0.12).contains(&one_way)
        && (p - 0.1).abs() <= 0.02
        && clean.loss_rate == 0.0
        && p_clean == 0.0;
    outcome(
        pass,
        format!(
            "one-way loss {one_way:.4} (round trip {:.4}), p = {p:.4}; zero-loss channel p = {p_clean}",
            lossy.loss_rate
        ),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("geometric reduction", Duration::from_secs(1), geometric_reduction),
        ("series cross-form", Duration::from_secs(5), series_cross_form),
        ("Monte Carlo validation", Duration::from_secs(30), monte_carlo),
        (
            "reference table reproduction",
            Duration::from_secs(10),
            table_reproduction,
        ),
        ("closed-form optima", Duration::from_secs(10), closed_form_optima),
        ("dominance", Duration::from_secs(60), dominance),
        ("alpha -> 0 limit", Duration::from_secs(1), alpha_zero_limit),
        ("probe loopback", Duration::from_secs(30), probe_loopback),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.3} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
