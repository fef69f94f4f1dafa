//! Run configuration: a TOML file with `[network]`, `[scenario]`, `[sweep]`,
//! `[output]` and `[simulate]` sections, overridden by command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lbsp_core::{CommPattern, NetworkParams, Redundancy, RetransmitPolicy, Scenario, Workload};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub packet_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub comm: Option<String>,
    pub w: Option<f64>,
    pub rounds: Option<u32>,
    pub k: Option<u32>,
    pub policy: Option<String>,
    pub n: Option<u64>,
    pub model: Option<String>,
}

/// A sweep axis in a file: an array of numbers or a range string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n: Option<SweepValues>,
    pub p: Option<SweepValues>,
    pub k: Option<SweepValues>,
    pub w: Option<SweepValues>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<String>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub max_rounds: Option<u64>,
    pub exclude_capped: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    P,
    K,
    W,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::P => "p",
            Axis::K => "k",
            Axis::W => "w",
        }
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "n" => Ok(Axis::N),
            "p" => Ok(Axis::P),
            "k" => Ok(Axis::K),
            "w" => Ok(Axis::W),
            other => Err(CliError::Config(format!(
                "unknown sweep axis `{other}` (expected n, p, k or w)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

fn number(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let bad = || CliError::Config(format!("`{s}` is not a number"));
    match s.split_once('^') {
        Some((base, exp)) => {
            let base: f64 = base.trim().parse().map_err(|_| bad())?;
            let exp: i32 = exp.trim().parse().map_err(|_| bad())?;
            Ok(base.powi(exp))
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Parses `2^1..2^17` (powers of the base), `1..64` (integers), or a comma
/// separated list such as `0.01,0.05,2^10`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (lo.trim(), hi.trim());
        let values: Vec<f64> = match (lo.split_once('^'), hi.split_once('^')) {
            (Some((b1, e1)), Some((b2, e2))) if b1.trim() == b2.trim() => {
                let base = number(b1)?;
                let e1: i32 = e1
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad exponent in `{lo}`")))?;
                let e2: i32 = e2
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad exponent in `{hi}`")))?;
                (e1..=e2).map(|e| base.powi(e)).collect()
            }
            _ => {
                let (a, b) = (number(lo)?, number(hi)?);
                if a.fract() != 0.0 || b.fract() != 0.0 {
                    return Err(CliError::Config(format!("range `{text}` needs integer ends")));
                }
                (a as i64..=b as i64).map(|v| v as f64).collect()
            }
        };
        if values.is_empty() {
            return Err(CliError::Config(format!("range `{text}` is empty")));
        }
        return Ok(values);
    }
    text.split(',').map(number).collect()
}

/// `axis=values`, as given to `--sweep`.
pub fn parse_sweep_flag(text: &str) -> Result<Sweep, CliError> {
    let (axis, values) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--sweep expects axis=values, got `{text}`")))?;
    Ok(Sweep {
        axis: axis.parse()?,
        values: parse_values(values)?,
    })
}

impl SweepSection {
    fn resolve(&self) -> Result<Option<Sweep>, CliError> {
        let axes = [
            (Axis::N, &self.n),
            (Axis::P, &self.p),
            (Axis::K, &self.k),
            (Axis::W, &self.w),
        ];
        let given: Vec<_> = axes
            .iter()
            .filter_map(|(a, v)| v.as_ref().map(|v| (*a, v)))
            .collect();
        match given.as_slice() {
            [] => Ok(None),
            [(axis, values)] => {
                let values = match values {
                    SweepValues::List(v) => v.clone(),
                    SweepValues::Text(t) => parse_values(t)?,
                };
                Ok(Some(Sweep { axis: *axis, values }))
            }
            _ => Err(CliError::Config("sweep: only one axis may be a list".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!(
                "output.format: unknown format `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Lbsp,
    Conceptual,
}

impl FromStr for Model {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "lbsp" | "l-bsp" => Ok(Model::Lbsp),
            "conceptual" => Ok(Model::Conceptual),
            other => Err(CliError::Config(format!(
                "scenario.model: unknown model `{other}`"
            ))),
        }
    }
}

/// Values given on the command line; each one replaces the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub network: NetworkSection,
    pub scenario: ScenarioSection,
    pub sweep: Option<Sweep>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    pub simulate: SimulateSection,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub model: Model,
    pub sweep: Option<Sweep>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: u64,
    pub max_rounds: u64,
    pub exclude_capped: bool,
}

pub const DEFAULT_TRIALS: u64 = 100_000;

fn required<T>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("{field}: missing (set it in the config file or by flag)")))
}

fn field_err(field: &str) -> impl Fn(lbsp_core::ModelError) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

/// Network section to model parameters; `alpha` may instead come from
/// `packet_size / bandwidth`.
pub fn network_params(net: &NetworkSection) -> Result<NetworkParams, CliError> {
    let p = required(net.p, "network.p")?;
    let beta = required(net.beta, "network.beta")?;
    match (net.alpha, net.packet_size, net.bandwidth) {
        (alpha, Some(size), Some(bw)) => {
            let params = NetworkParams::from_link(p, size, bw, beta).map_err(field_err("network"))?;
            if let Some(a) = alpha {
                NetworkParams { alpha: a, ..params }
                    .validate()
                    .map_err(field_err("network.alpha"))?;
            }
            Ok(params)
        }
        (Some(alpha), None, None) => NetworkParams::new(p, alpha, beta).map_err(field_err("network")),
        (None, _, _) => Err(CliError::Config(
            "network.alpha: missing (give alpha, or packet_size and bandwidth)".into(),
        )),
        (Some(_), _, _) => Err(CliError::Config(
            "network: packet_size and bandwidth must be given together".into(),
        )),
    }
}

macro_rules! pick {
    ($o:expr, $f:expr, $name:ident) => {
        $o.$name.clone().or_else(|| $f.$name.clone())
    };
}

impl RunConfig {
    /// Merges flags over the file. Fields on the sweep axis may be omitted.
    pub fn resolve(file: &ConfigFile, over: &Overrides) -> Result<Self, CliError> {
        let (fnet, onet) = (&file.network, &over.network);
        let net = NetworkSection {
            p: pick!(onet, fnet, p),
            alpha: pick!(onet, fnet, alpha),
            beta: pick!(onet, fnet, beta),
            packet_size: pick!(onet, fnet, packet_size),
            bandwidth: pick!(onet, fnet, bandwidth),
        };
        let (fs, os) = (&file.scenario, &over.scenario);
        let sweep = match &over.sweep {
            Some(s) => Some(s.clone()),
            None => file.sweep.resolve()?,
        };
        let sweeps = |a: Axis| sweep.as_ref().is_some_and(|s| s.axis == a);

        let mut net = net;
        if sweeps(Axis::P) && net.p.is_none() {
            net.p = Some(0.0);
        }
        let network = network_params(&net)?;

        let model: Model = match pick!(os, fs, model) {
            Some(m) => m.parse()?,
            None => Model::Lbsp,
        };
        let policy = match pick!(os, fs, policy) {
            Some(p) => p.parse().map_err(field_err("scenario.policy"))?,
            None if model == Model::Conceptual => RetransmitPolicy::AllOnAnyLoss,
            None => RetransmitPolicy::LostOnly,
        };
        if model == Model::Conceptual && policy != RetransmitPolicy::AllOnAnyLoss {
            return Err(CliError::Config(
                "scenario.policy: the conceptual model retransmits whole rounds (all-on-any-loss)".into(),
            ));
        }
        let comm: CommPattern = required(pick!(os, fs, comm), "scenario.comm")?
            .parse()
            .map_err(field_err("scenario.comm"))?;
        let w = match pick!(os, fs, w) {
            Some(w) => w,
            None if sweeps(Axis::W) => 1.0,
            None => required(None, "scenario.w")?,
        };
        let work = Workload::new(w, pick!(os, fs, rounds).unwrap_or(1)).map_err(field_err("scenario.w"))?;
        let redundancy = Redundancy::new(pick!(os, fs, k).unwrap_or(1)).map_err(field_err("scenario.k"))?;
        let n = match pick!(os, fs, n) {
            Some(n) => n,
            None if sweeps(Axis::N) => 1,
            None => required(None, "scenario.n")?,
        };
        let scenario = Scenario {
            network,
            comm,
            work,
            redundancy,
            policy,
            n,
        };
        scenario.validate().map_err(field_err("scenario"))?;

        if let Some(s) = &sweep {
            validate_sweep(s)?;
        }

        let format = match over.format.clone().or_else(|| file.output.format.clone()) {
            Some(f) => f.parse()?,
            None => Format::Csv,
        };
        let (fsim, osim) = (&file.simulate, &over.simulate);
        Ok(RunConfig {
            scenario,
            model,
            sweep,
            format,
            output: over.output.clone().or_else(|| file.output.path.clone()),
            seed: pick!(osim, fsim, seed),
            trials: pick!(osim, fsim, trials).unwrap_or(DEFAULT_TRIALS),
            max_rounds: pick!(osim, fsim, max_rounds).unwrap_or(lbsp_sim::DEFAULT_MAX_ROUNDS),
            exclude_capped: pick!(osim, fsim, exclude_capped).unwrap_or(false),
        })
    }

    /// The scenario at each sweep point (or the single configured point).
    pub fn points(&self) -> Result<Vec<Scenario>, CliError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![self.scenario.clone()]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let s = match sweep.axis {
                    Axis::N => self.scenario.with_n(v as u64),
                    Axis::P => self.scenario.with_loss(v),
                    Axis::K => self
                        .scenario
                        .with_k(Redundancy::new(v as u32).map_err(field_err("sweep.k"))?),
                    Axis::W => self.scenario.with_work(v),
                };
                s.validate().map_err(field_err("sweep"))?;
                Ok(s)
            })
            .collect()
    }
}

fn validate_sweep(s: &Sweep) -> Result<(), CliError> {
    let field = format!("sweep.{}", s.axis.name());
    if s.values.is_empty() {
        return Err(CliError::Config(format!("{field}: no values")));
    }
    let integral = matches!(s.axis, Axis::N | Axis::K);
    for &v in &s.values {
        if integral && (v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 && s.axis == Axis::K) {
            return Err(CliError::Config(format!(
                "{field}: {v} is not a positive integer"
            )));
        }
    }
    Ok(())
}

/// The subset of the configuration the node-count optimum depends on.
#[derive(Debug, Clone)]
pub struct OptimalNConfig {
    pub p: f64,
    pub k: u32,
    pub comm: CommPattern,
    pub sweep: Option<Sweep>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl OptimalNConfig {
    pub fn resolve(file: &ConfigFile, over: &Overrides) -> Result<Self, CliError> {
        let sweep = match &over.sweep {
            Some(s) => Some(s.clone()),
            None => file.sweep.resolve()?,
        };
        if let Some(s) = &sweep {
            if !matches!(s.axis, Axis::P | Axis::K) {
                return Err(CliError::Config(format!(
                    "sweep.{}: optimal-n can only sweep p or k",
                    s.axis.name()
                )));
            }
            validate_sweep(s)?;
        }
        let sweeps_p = sweep.as_ref().is_some_and(|s| s.axis == Axis::P);
        let p = match pick!(over.network, file.network, p) {
            Some(p) => p,
            None if sweeps_p => 0.0,
            None => required(None, "network.p")?,
        };
        let comm = required(pick!(over.scenario, file.scenario, comm), "scenario.comm")?
            .parse()
            .map_err(field_err("scenario.comm"))?;
        Ok(OptimalNConfig {
            p,
            k: pick!(over.scenario, file.scenario, k).unwrap_or(1),
            comm,
            sweep,
            format: match over.format.clone().or_else(|| file.output.format.clone()) {
                Some(f) => f.parse()?,
                None => Format::Csv,
            },
            output: over.output.clone().or_else(|| file.output.path.clone()),
        })
    }

    pub fn points(&self) -> Vec<(f64, u32)> {
        match &self.sweep {
            None => vec![(self.p, self.k)],
            Some(s) => s
                .values
                .iter()
                .map(|&v| match s.axis {
                    Axis::P => (v, self.k),
                    _ => (self.p, v as u32),
                })
                .collect(),
        }
    }
}
