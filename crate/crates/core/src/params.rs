//! Model inputs: network, communication pattern, workload and redundancy.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_non_negative, check_probability, ModelError, Result};

/// Per-packet network characteristics of a path.
///
/// `p` applies identically to data and acknowledgment packets. `alpha` is the
/// time to put one packet on the wire and `beta` the round-trip delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

const ALPHA_CONSISTENCY: f64 = 1e-9;

impl NetworkParams {
    pub fn new(p: f64, alpha: f64, beta: f64) -> Result<Self> {
        let params = NetworkParams {
            p,
            alpha,
            beta,
            packet_size: None,
            bandwidth: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds the parameters from a packet size (bytes) and bandwidth
    /// (bytes/second); `alpha = packet_size / bandwidth`.
    pub fn from_link(p: f64, packet_size: f64, bandwidth: f64, beta: f64) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(ModelError::Domain {
                name: "bandwidth",
                value: bandwidth,
                domain: "(0, inf)",
            });
        }
        let params = NetworkParams {
            p,
            alpha: packet_size / bandwidth,
            beta,
            packet_size: Some(packet_size),
            bandwidth: Some(bandwidth),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", self.p)?;
        check_non_negative("alpha", self.alpha)?;
        check_non_negative("beta", self.beta)?;
        if let (Some(size), Some(bw)) = (self.packet_size, self.bandwidth) {
            check_non_negative("packet_size", size)?;
            let derived = size / bw;
            let scale = derived.abs().max(f64::MIN_POSITIVE);
            if ((self.alpha - derived) / scale).abs() > ALPHA_CONSISTENCY {
                return Err(ModelError::Domain {
                    name: "alpha",
                    value: self.alpha,
                    domain: "packet_size / bandwidth",
                });
            }
        }
        Ok(())
    }

    pub fn with_loss(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
}

/// Canonical communication complexity families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommKind {
    Constant1,
    Log2N,
    Log2SquaredN,
    Linear,
    NLog2N,
    Squared,
    Custom,
}

impl CommKind {
    pub const CANONICAL: [CommKind; 6] = [
        CommKind::Constant1,
        CommKind::Log2N,
        CommKind::Log2SquaredN,
        CommKind::Linear,
        CommKind::NLog2N,
        CommKind::Squared,
    ];
}

/// A user-supplied packet count function `n -> c(n)`.
#[derive(Clone)]
pub struct CustomComm {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomComm {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomComm {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CustomComm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomComm").field("label", &self.label).finish()
    }
}

/// Number of logical packets a round injects, as a function of node count.
///
/// Logarithms are base 2 throughout.
#[derive(Debug, Clone)]
pub enum CommPattern {
    Constant1,
    Log2N,
    Log2SquaredN,
    Linear,
    NLog2N,
    Squared,
    Custom(CustomComm),
}

impl CommPattern {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CommPattern::Custom(CustomComm::new(label, f))
    }

    pub fn from_kind(kind: CommKind) -> Option<Self> {
        Some(match kind {
            CommKind::Constant1 => CommPattern::Constant1,
            CommKind::Log2N => CommPattern::Log2N,
            CommKind::Log2SquaredN => CommPattern::Log2SquaredN,
            CommKind::Linear => CommPattern::Linear,
            CommKind::NLog2N => CommPattern::NLog2N,
            CommKind::Squared => CommPattern::Squared,
            CommKind::Custom => return None,
        })
    }

    pub fn kind(&self) -> CommKind {
        match self {
            CommPattern::Constant1 => CommKind::Constant1,
            CommPattern::Log2N => CommKind::Log2N,
            CommPattern::Log2SquaredN => CommKind::Log2SquaredN,
            CommPattern::Linear => CommKind::Linear,
            CommPattern::NLog2N => CommKind::NLog2N,
            CommPattern::Squared => CommKind::Squared,
            CommPattern::Custom(_) => CommKind::Custom,
        }
    }

    /// `c(n)` for a (possibly non-integer) node count `n >= 1`.
    pub fn eval(&self, n: f64) -> f64 {
        let lg = n.log2();
        let c = match self {
            CommPattern::Constant1 => 1.0,
            CommPattern::Log2N => lg,
            CommPattern::Log2SquaredN => lg * lg,
            CommPattern::Linear => n,
            CommPattern::NLog2N => n * lg,
            CommPattern::Squared => n * n,
            CommPattern::Custom(custom) => (custom.f)(n),
        };
        c.max(0.0)
    }

    pub fn name(&self) -> &str {
        match self {
            CommPattern::Constant1 => "1",
            CommPattern::Log2N => "log2n",
            CommPattern::Log2SquaredN => "log2sq",
            CommPattern::Linear => "n",
            CommPattern::NLog2N => "nlog2n",
            CommPattern::Squared => "n2",
            CommPattern::Custom(custom) => custom.label(),
        }
    }
}

impl fmt::Display for CommPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommPattern {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '(' && *c != ')')
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "1" | "const" | "constant" | "constant1" => CommPattern::Constant1,
            "log2n" | "logn" | "log" => CommPattern::Log2N,
            "log2sq" | "log2^2n" | "log2squaredn" | "log2n^2" | "logsq" => CommPattern::Log2SquaredN,
            "n" | "linear" => CommPattern::Linear,
            "nlog2n" | "nlogn" => CommPattern::NLog2N,
            "n2" | "n^2" | "squared" => CommPattern::Squared,
            _ => return Err(ModelError::UnsupportedPattern(s.to_string())),
        })
    }
}

impl Serialize for CommPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CommPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Work per round on one processor (seconds) and number of rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub w: f64,
    pub rounds: u32,
}

impl Workload {
    pub fn new(w: f64, rounds: u32) -> Result<Self> {
        let work = Workload { w, rounds };
        work.validate()?;
        Ok(work)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0) {
            return Err(ModelError::Domain {
                name: "w",
                value: self.w,
                domain: "(0, inf)",
            });
        }
        if self.rounds == 0 {
            return Err(ModelError::Domain {
                name: "rounds",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        Ok(())
    }

    /// Sequential time `T(1) = w * r`.
    pub fn sequential_time(&self) -> f64 {
        self.w * f64::from(self.rounds)
    }
}

/// Number of copies sent for each logical packet (and each acknowledgment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Redundancy(u32);

impl Redundancy {
    pub const SINGLE: Redundancy = Redundancy(1);

    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            Err(ModelError::Domain {
                name: "k",
                value: 0.0,
                domain: "[1, inf)",
            })
        } else {
            Ok(Redundancy(k))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Redundancy {
    type Error = ModelError;
    fn try_from(k: u32) -> Result<Self> {
        Redundancy::new(k)
    }
}

impl From<Redundancy> for u32 {
    fn from(k: Redundancy) -> u32 {
        k.0
    }
}

/// What the sender resends after a timeout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetransmitPolicy {
    /// Any loss fails the whole round and every packet is sent again.
    AllOnAnyLoss,
    /// Only packets without an acknowledgment are sent again.
    LostOnly,
}

impl FromStr for RetransmitPolicy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all" | "all-on-any-loss" | "allonanyloss" | "retransmit-all" => {
                Ok(RetransmitPolicy::AllOnAnyLoss)
            }
            "lost" | "lost-only" | "lostonly" => Ok(RetransmitPolicy::LostOnly),
            _ => Err(ModelError::UnsupportedPattern(s.to_string())),
        }
    }
}

impl fmt::Display for RetransmitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RetransmitPolicy::AllOnAnyLoss => "all-on-any-loss",
            RetransmitPolicy::LostOnly => "lost-only",
        })
    }
}

/// A complete model instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub network: NetworkParams,
    pub comm: CommPattern,
    pub work: Workload,
    pub redundancy: Redundancy,
    pub policy: RetransmitPolicy,
    /// Processor count.
    pub n: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.work.validate()?;
        if self.n == 0 {
            return Err(ModelError::Domain {
                name: "n",
                value: 0.0,
                domain: "[1, inf)",
            });
        }
        Ok(())
    }

    /// `c(n)` for this scenario's node count.
    pub fn packets(&self) -> f64 {
        self.comm.eval(self.n as f64)
    }

    pub fn with_n(&self, n: u64) -> Self {
        Scenario { n, ..self.clone() }
    }

    pub fn with_k(&self, k: Redundancy) -> Self {
        Scenario {
            redundancy: k,
            ..self.clone()
        }
    }

    pub fn with_loss(&self, p: f64) -> Self {
        Scenario {
            network: self.network.with_loss(p),
            ..self.clone()
        }
    }

    pub fn with_work(&self, w: f64) -> Self {
        Scenario {
            work: Workload { w, ..self.work },
            ..self.clone()
        }
    }
}
