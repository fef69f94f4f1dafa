//! Command-line front end for the Lossy-BSP model: parameter sweeps, the
//! algorithm reference table, optimizers, simulation and path probing.

pub mod commands;
pub mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{ConfigFile, NetworkSection, Overrides, ScenarioSection, SimulateSection};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] lbsp_core::ModelError),
    #[error(transparent)]
    Sim(#[from] lbsp_sim::SimError),
    #[error(transparent)]
    Probe(#[from] lbsp_probe::ProbeError),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("reference table deviation: {0}")]
    Deviation(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for reference-table deviations and 3
    /// for network failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Deviation(_) => 2,
            CliError::Probe(lbsp_probe::ProbeError::Io(_) | lbsp_probe::ProbeError::NoEchoes(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lbsp", version, about = "Lossy-BSP performance model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Speedup over a sweep of n, p, k or w.
    Speedup(ScenarioArgs),
    /// Algorithm reference table: computed next to listed values.
    Table2(OutputArgs),
    /// Closed-form node count maximizing the conceptual speedup.
    OptimalN(ScenarioArgs),
    /// Copy count maximizing the L-BSP speedup.
    OptimalK(OptimalKArgs),
    /// Monte Carlo estimate next to the analytic model.
    Simulate(SimulateArgs),
    /// Measure loss, round-trip time and bandwidth to a responder.
    Probe(ProbeArgs),
    /// Run the echo responder for `probe`.
    ProbeServe(ServeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Per-packet loss probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Seconds to put one packet on the wire.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Round-trip delay in seconds.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Packet size in bytes (with --bandwidth, instead of --alpha).
    #[arg(long)]
    pub packet_size: Option<f64>,
    /// Bandwidth in bytes/second.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Communication pattern c(n): 1, log2n, log2sq, n, nlog2n, n2.
    #[arg(long)]
    pub comm: Option<String>,
    /// Sequential work in seconds.
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Copies sent per packet.
    #[arg(long)]
    pub k: Option<u32>,
    /// lost-only or all-on-any-loss.
    #[arg(long)]
    pub policy: Option<String>,
    /// Processor count.
    #[arg(long)]
    pub n: Option<u64>,
    /// lbsp or conceptual.
    #[arg(long)]
    pub model: Option<String>,
    /// One sweep axis, e.g. `n=2^1..2^17`, `p=0.01,0.05,0.1` or `k=1..8`.
    #[arg(long)]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub out: OutputArgs,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ConfigFile, Overrides), CliError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let over = Overrides {
            network: NetworkSection {
                p: self.p,
                alpha: self.alpha,
                beta: self.beta,
                packet_size: self.packet_size,
                bandwidth: self.bandwidth,
            },
            scenario: ScenarioSection {
                comm: self.comm.clone(),
                w: self.w,
                rounds: self.rounds,
                k: self.k,
                policy: self.policy.clone(),
                n: self.n,
                model: self.model.clone(),
            },
            sweep: self.sweep.as_deref().map(config::parse_sweep_flag).transpose()?,
            format: self.out.format.clone(),
            output: self.out.output.clone(),
            simulate: SimulateSection::default(),
        };
        Ok((file, over))
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimalKArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Largest copy count searched.
    #[arg(long, default_value_t = lbsp_core::DEFAULT_K_MAX)]
    pub k_max: u32,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Master seed; required here or in [simulate].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Per-trial cap on transmission rounds.
    #[arg(long)]
    pub max_rounds: Option<u64>,
    /// Leave capped trials out of the mean.
    #[arg(long)]
    pub exclude_capped: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    /// Responder address, host:port.
    #[arg(long, required_unless_present = "import")]
    pub peer: Option<String>,
    /// Local address to bind.
    #[arg(long, default_value = "0.0.0.0:0")]
    pub bind: String,
    /// Datagram sizes in bytes, e.g. `64,512,1472` or `2^6..2^14`.
    #[arg(long, default_value = "1024")]
    pub sizes: String,
    #[arg(long, default_value_t = 100)]
    pub packets: u32,
    /// Milliseconds between probes.
    #[arg(long, default_value_t = 10.0)]
    pub interval_ms: f64,
    /// Milliseconds to wait for late echoes.
    #[arg(long, default_value_t = 2000.0)]
    pub drain_ms: f64,
    /// Packets in the bandwidth burst.
    #[arg(long, default_value_t = 100)]
    pub burst: u32,
    /// Convert a probe CSV row into a `[network]` config section.
    #[arg(long, conflicts_with = "peer")]
    pub import: Option<PathBuf>,
    /// Row of the imported CSV (0-based).
    #[arg(long, requires = "import", conflicts_with = "size")]
    pub row: Option<usize>,
    /// Pick the imported row with this packet size.
    #[arg(long, requires = "import")]
    pub size: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "0.0.0.0:9000")]
    pub bind: String,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Speedup(args) => {
            let (file, over) = args.load()?;
            commands::speedup(&config::RunConfig::resolve(&file, &over)?, stdout)
        }
        Command::Table2(out) => commands::table2(&out, stdout),
        Command::OptimalN(args) => {
            let (file, over) = args.load()?;
            commands::optimal_n(&config::OptimalNConfig::resolve(&file, &over)?, stdout)
        }
        Command::OptimalK(args) => {
            let (file, over) = args.scenario.load()?;
            commands::optimal_k(&config::RunConfig::resolve(&file, &over)?, args.k_max, stdout)
        }
        Command::Simulate(args) => {
            let (file, mut over) = args.scenario.load()?;
            over.simulate = SimulateSection {
                seed: args.seed,
                trials: args.trials,
                max_rounds: args.max_rounds,
                exclude_capped: args.exclude_capped.then_some(true),
            };
            commands::simulate(&config::RunConfig::resolve(&file, &over)?, stdout)
        }
        Command::Probe(args) => commands::probe(&args, stdout),
        Command::ProbeServe(args) => commands::probe_serve(&args),
    }
}
