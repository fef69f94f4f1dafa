use std::io::Write;
use std::net::{ToSocketAddrs, UdpSocket};
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use lbsp_core::algo::{
    algo_speedup, fft2d_speedup, matmul_speedup_real_grid, reference_rows, AlgoReport, LogBase,
};
use lbsp_core::{
    conceptual_speedup, lbsp_speedup, optimal_k as search_k, optimal_n_conceptual, OptimalN, Scenario,
    SpeedupReport,
};
use lbsp_probe::{ProbeError, ProbeOptions};
use lbsp_sim::{compare_with_analytic, SimConfig};
use log::{info, warn};
use serde::Serialize;

use crate::config::{parse_values, Format, Model, NetworkSection, OptimalNConfig, RunConfig};
use crate::output::emit;
use crate::{CliError, OutputArgs, ProbeArgs, ServeArgs};

/// Relative speedup error above which a reference row fails.
pub const TABLE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedupRow {
    pub model: &'static str,
    pub comm: String,
    pub policy: String,
    pub n: u64,
    pub k: u32,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub w: f64,
    pub packets: f64,
    pub tau: f64,
    pub granularity: f64,
    pub rho_hat: f64,
    pub p_success: f64,
    pub speedup: f64,
    pub efficiency: f64,
    pub dominating_term: String,
    pub no_progress: bool,
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Lbsp => "lbsp",
        Model::Conceptual => "conceptual",
    }
}

fn dominating(r: &SpeedupReport) -> String {
    match r.dominating_term {
        Some(d) => serde_json::to_value(d)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        None => String::new(),
    }
}

pub fn speedup_row(model: Model, s: &Scenario, r: &SpeedupReport) -> SpeedupRow {
    SpeedupRow {
        model: model_name(model),
        comm: s.comm.name().to_string(),
        policy: s.policy.to_string(),
        n: r.n,
        k: r.k,
        p: s.network.p,
        alpha: s.network.alpha,
        beta: s.network.beta,
        w: s.work.w,
        packets: r.packets,
        tau: r.tau,
        granularity: r.granularity,
        rho_hat: r.rho_hat,
        p_success: r.p_success,
        speedup: r.speedup,
        efficiency: r.efficiency,
        dominating_term: dominating(r),
        no_progress: r.no_progress,
    }
}

pub fn speedup_rows(cfg: &RunConfig) -> Result<Vec<SpeedupRow>, CliError> {
    cfg.points()?
        .iter()
        .map(|s| {
            let r = match cfg.model {
                Model::Lbsp => lbsp_speedup(s)?,
                Model::Conceptual => conceptual_speedup(s)?,
            };
            Ok(speedup_row(cfg.model, s, &r))
        })
        .collect()
}

pub fn speedup(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    emit(&speedup_rows(cfg)?, cfg.format, cfg.output.as_deref(), out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub algorithm: String,
    /// Empty for the table's own parameters; otherwise the alternative
    /// reading evaluated.
    pub variant: String,
    pub processors: u64,
    pub k: u32,
    pub rho_hat_k: f64,
    pub rho_hat_k_listed: f64,
    pub w_s: f64,
    pub w_s_listed: f64,
    pub comm_time: f64,
    pub total_parallel: f64,
    pub speedup: f64,
    pub speedup_listed: f64,
    pub speedup_rel_error: f64,
    pub efficiency: f64,
    pub efficiency_listed: f64,
    pub within_tolerance: bool,
}

fn table_row(label: &str, variant: &str, r: &AlgoReport, listed: &lbsp_core::algo::ListedValues) -> TableRow {
    let rel = (r.speedup - listed.speedup).abs() / listed.speedup;
    TableRow {
        algorithm: label.to_string(),
        variant: variant.to_string(),
        processors: r.processors,
        k: r.k,
        rho_hat_k: r.rho_hat_k,
        rho_hat_k_listed: listed.rho_hat_k,
        w_s: r.w_s,
        w_s_listed: listed.w_s,
        comm_time: r.comm_time,
        total_parallel: r.total_parallel,
        speedup: r.speedup,
        speedup_listed: listed.speedup,
        speedup_rel_error: rel,
        efficiency: r.efficiency,
        efficiency_listed: listed.efficiency,
        within_tolerance: rel <= TABLE_TOLERANCE,
    }
}

/// The four reference rows, then the alternative readings of the matrix
/// grid size (P = 2^17 with a real square root) and the FFT logarithm base.
pub fn table2_rows() -> Result<Vec<TableRow>, CliError> {
    let refs = reference_rows();
    let mut rows = Vec::with_capacity(refs.len() + 2);
    for row in &refs {
        let r = algo_speedup(&row.instance, &row.network, row.k)?;
        rows.push(table_row(&row.label, "", &r, &row.listed));
    }
    let mm = &refs[0];
    let mut inst = mm.instance.clone();
    inst.processors = 1 << 17;
    let r = matmul_speedup_real_grid(&inst, &mm.network, mm.k)?;
    rows.push(table_row(&mm.label, "P=2^17 real grid", &r, &mm.listed));
    let fft = &refs[2];
    let mut inst = fft.instance.clone();
    inst.fft_log_base = LogBase::Natural;
    let r = fft2d_speedup(&inst, &fft.network, fft.k)?;
    rows.push(table_row(&fft.label, "natural log", &r, &fft.listed));
    Ok(rows)
}

pub fn table2(args: &OutputArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let format: Format = args.format.as_deref().unwrap_or("csv").parse()?;
    let rows = table2_rows()?;
    emit(&rows, format, args.output.as_deref(), out)?;
    let failing: Vec<String> = rows
        .iter()
        .filter(|r| r.variant.is_empty() && !r.within_tolerance)
        .map(|r| format!("{} ({:.2}% off)", r.algorithm, 100.0 * r.speedup_rel_error))
        .collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Deviation(failing.join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalNRow {
    pub p: f64,
    pub k: u32,
    pub comm: String,
    pub bounded: bool,
    pub real_root: Option<f64>,
    pub closed_form_floor: Option<f64>,
    pub n: Option<f64>,
    pub n_exact: Option<f64>,
    pub ln_speedup_approx: Option<f64>,
}

pub fn optimal_n_rows(cfg: &OptimalNConfig) -> Result<Vec<OptimalNRow>, CliError> {
    cfg.points()
        .into_iter()
        .map(|(p, k)| {
            let base = OptimalNRow {
                p,
                k,
                comm: cfg.comm.name().to_string(),
                bounded: false,
                real_root: None,
                closed_form_floor: None,
                n: None,
                n_exact: None,
                ln_speedup_approx: None,
            };
            Ok(match optimal_n_conceptual(p, k, &cfg.comm)? {
                OptimalN::Unbounded => base,
                OptimalN::Finite(o) => OptimalNRow {
                    bounded: true,
                    real_root: Some(o.real_root),
                    closed_form_floor: o.closed_form_floor,
                    n: Some(o.n),
                    n_exact: Some(o.n_exact),
                    ln_speedup_approx: Some(o.ln_speedup_approx),
                    ..base
                },
            })
        })
        .collect()
}

pub fn optimal_n(cfg: &OptimalNConfig, out: &mut dyn Write) -> Result<(), CliError> {
    emit(&optimal_n_rows(cfg)?, cfg.format, cfg.output.as_deref(), out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalKRow {
    pub comm: String,
    pub policy: String,
    pub n: u64,
    pub p: f64,
    pub w: f64,
    pub k: u32,
    pub speedup: f64,
    pub efficiency: f64,
    pub rho_hat: f64,
    pub tau: f64,
    /// Copy count minimizing `rho_hat * tau_k`.
    pub min_product_k: u32,
}

pub fn optimal_k_rows(cfg: &RunConfig, k_max: u32) -> Result<Vec<OptimalKRow>, CliError> {
    if cfg
        .sweep
        .as_ref()
        .is_some_and(|s| s.axis == crate::config::Axis::K)
    {
        return Err(CliError::Config("sweep.k: optimal-k searches k itself".into()));
    }
    if k_max == 0 {
        return Err(CliError::Config("--k-max must be >= 1".into()));
    }
    cfg.points()?
        .iter()
        .map(|s| {
            let best = search_k(s, k_max)?;
            Ok(OptimalKRow {
                comm: s.comm.name().to_string(),
                policy: s.policy.to_string(),
                n: s.n,
                p: s.network.p,
                w: s.work.w,
                k: best.k,
                speedup: best.report.speedup,
                efficiency: best.report.efficiency,
                rho_hat: best.report.rho_hat,
                tau: best.report.tau,
                min_product_k: best.min_product_k,
            })
        })
        .collect()
}

pub fn optimal_k(cfg: &RunConfig, k_max: u32, out: &mut dyn Write) -> Result<(), CliError> {
    emit(
        &optimal_k_rows(cfg, k_max)?,
        cfg.format,
        cfg.output.as_deref(),
        out,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRow {
    pub comm: String,
    pub policy: String,
    pub n: u64,
    pub k: u32,
    pub p: f64,
    pub w: f64,
    pub seed: u64,
    pub trials: u64,
    pub trials_capped: u64,
    pub packets: u64,
    pub rho_hat: f64,
    pub mean_transmissions: f64,
    pub std_error: f64,
    pub z_transmissions: f64,
    pub speedup: f64,
    pub empirical_speedup: f64,
    pub speedup_std_error: f64,
    pub z_speedup: f64,
}

pub fn simulate_rows(cfg: &RunConfig) -> Result<Vec<SimulateRow>, CliError> {
    let seed = cfg.seed.ok_or_else(|| {
        CliError::Config("simulate.seed: missing (simulation needs an explicit seed)".into())
    })?;
    cfg.points()?
        .into_iter()
        .map(|s| {
            let mut sim = SimConfig::new(s.clone(), cfg.trials, seed);
            sim.max_rounds_per_trial = cfg.max_rounds;
            sim.exclude_capped = cfg.exclude_capped;
            let c = compare_with_analytic(&sim)?;
            if c.sim.trials_capped > 0 {
                warn!(
                    "{} of {} trials hit the round cap",
                    c.sim.trials_capped, c.sim.trials
                );
            }
            Ok(SimulateRow {
                comm: s.comm.name().to_string(),
                policy: s.policy.to_string(),
                n: s.n,
                k: s.redundancy.get(),
                p: s.network.p,
                w: s.work.w,
                seed,
                trials: c.sim.trials,
                trials_capped: c.sim.trials_capped,
                packets: c.sim.packets,
                rho_hat: c.analytic.rho_hat,
                mean_transmissions: c.sim.mean_transmissions,
                std_error: c.sim.std_error,
                z_transmissions: c.z_transmissions,
                speedup: c.analytic.speedup,
                empirical_speedup: c.sim.empirical_speedup,
                speedup_std_error: c.sim.speedup_std_error,
                z_speedup: c.z_speedup,
            })
        })
        .collect()
}

pub fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    emit(&simulate_rows(cfg)?, cfg.format, cfg.output.as_deref(), out)
}

/// A `[network]` section built from one probe CSV row.
pub fn import_network(csv_text: &str, row: Option<usize>, size: Option<usize>) -> Result<String, CliError> {
    let samples =
        lbsp_probe::read_csv(csv_text.as_bytes()).map_err(|e| CliError::Config(format!("probe CSV: {e}")))?;
    let sample = match (row, size) {
        (_, Some(size)) => samples
            .iter()
            .find(|s| s.packet_size == size)
            .ok_or_else(|| CliError::Config(format!("probe CSV: no row with packet_size {size}")))?,
        (row, None) => {
            let i = row.unwrap_or(0);
            samples
                .get(i)
                .ok_or_else(|| CliError::Config(format!("probe CSV: no row {i}")))?
        }
    };
    let net = sample.to_network_params().map_err(|e| match e {
        ProbeError::Io(_) => CliError::Probe(e),
        other => CliError::Config(format!("probe CSV: {other}")),
    })?;
    #[derive(Serialize)]
    struct Doc {
        network: NetworkSection,
    }
    let doc = Doc {
        network: NetworkSection {
            p: Some(net.p),
            alpha: Some(net.alpha),
            beta: Some(net.beta),
            packet_size: net.packet_size,
            bandwidth: net.bandwidth,
        },
    };
    toml::to_string(&doc).map_err(|e| CliError::Output(e.to_string()))
}

fn millis(ms: f64, flag: &str) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(ms / 1000.0)
        .map_err(|_| CliError::Config(format!("{flag}: invalid duration {ms}")))
}

pub fn probe(args: &ProbeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &args.import {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let section = import_network(&text, args.row, args.size)?;
        return out
            .write_all(section.as_bytes())
            .map_err(|e| CliError::Output(e.to_string()));
    }
    let format: Format = args.out.format.as_deref().unwrap_or("csv").parse()?;
    let peer_text = args
        .peer
        .as_deref()
        .ok_or_else(|| CliError::Config("--peer is required".into()))?;
    let sizes = parse_values(&args.sizes)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(v)
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|v| CliError::Config(format!("--sizes: {v} is not a byte count")))?;
    let opts = ProbeOptions {
        packet_sizes: sizes,
        packets_per_size: args.packets,
        send_interval: millis(args.interval_ms, "--interval-ms")?,
        drain_timeout: millis(args.drain_ms, "--drain-ms")?,
        burst_len: args.burst,
    };
    let peer = peer_text
        .to_socket_addrs()
        .map_err(ProbeError::Io)?
        .next()
        .ok_or_else(|| CliError::Config(format!("--peer: `{peer_text}` resolves to no address")))?;
    let socket = UdpSocket::bind(&args.bind).map_err(ProbeError::Io)?;
    info!(
        "probing {peer} from {}",
        socket.local_addr().map_err(ProbeError::Io)?
    );
    let samples = lbsp_probe::run_probe(&socket, peer, &opts)?;
    match format {
        Format::Csv => match args.out.output.as_deref() {
            Some(p) => {
                let f = std::fs::File::create(p)
                    .map_err(|e| CliError::Output(format!("{}: {e}", p.display())))?;
                lbsp_probe::write_csv(&samples, f).map_err(|e| CliError::Output(e.to_string()))?
            }
            None => {
                lbsp_probe::write_csv(&samples, &mut *out).map_err(|e| CliError::Output(e.to_string()))?
            }
        },
        Format::Json => emit(&samples, format, args.out.output.as_deref(), out)?,
    }
    if samples.iter().all(|s| s.echoed == 0) {
        return Err(ProbeError::NoEchoes(samples[0].packet_size).into());
    }
    Ok(())
}

pub fn probe_serve(args: &ServeArgs) -> Result<(), CliError> {
    let socket = UdpSocket::bind(&args.bind).map_err(ProbeError::Io)?;
    info!(
        "responder listening on {}",
        socket.local_addr().map_err(ProbeError::Io)?
    );
    let stop = AtomicBool::new(false);
    lbsp_probe::serve(&socket, &stop).map_err(ProbeError::Io)?;
    Ok(())
}
