use std::io::{Read, Write};

use lbsp_core::NetworkParams;
use serde::{Deserialize, Serialize};

use crate::ProbeError;

/// Measurements for one packet size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub packet_size: usize,
    pub sent: u64,
    pub echoed: u64,
    /// Round-trip loss, `1 - echoed / sent`.
    pub loss_rate: f64,
    pub rtt_mean: Option<f64>,
    pub rtt_p50: Option<f64>,
    pub rtt_p95: Option<f64>,
    /// Bytes/second from the responder-timed burst.
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// One-way loss from the echoed fraction, assuming both directions drop
/// independently with the same probability: `(1 - p)^2 = echoed / sent`.
pub fn one_way_loss(echoed_fraction: f64) -> f64 {
    (1.0 - echoed_fraction.clamp(0.0, 1.0).sqrt()).clamp(0.0, 1.0)
}

impl ProbeSample {
    pub fn one_way_loss(&self) -> f64 {
        if self.sent == 0 {
            return 1.0;
        }
        one_way_loss(self.echoed as f64 / self.sent as f64)
    }

    pub fn to_network_params(&self) -> Result<NetworkParams, ProbeError> {
        if self.echoed == 0 {
            return Err(ProbeError::NoEchoes(self.packet_size));
        }
        let beta = self.rtt_mean.ok_or(ProbeError::NoEchoes(self.packet_size))?;
        let bandwidth = self
            .bandwidth
            .ok_or(ProbeError::MissingBandwidth(self.packet_size))?;
        Ok(NetworkParams::from_link(
            self.one_way_loss(),
            self.packet_size as f64,
            bandwidth,
            beta,
        )?)
    }
}

pub fn to_network_params(sample: &ProbeSample) -> Result<NetworkParams, ProbeError> {
    sample.to_network_params()
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    packet_size: usize,
    sent: u64,
    echoed: u64,
    loss_rate: f64,
    rtt_mean: Option<f64>,
    rtt_p50: Option<f64>,
    rtt_p95: Option<f64>,
    bandwidth: Option<f64>,
}

pub fn write_csv<W: Write>(samples: &[ProbeSample], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(CsvRow {
            packet_size: s.packet_size,
            sent: s.sent,
            echoed: s.echoed,
            loss_rate: s.loss_rate,
            rtt_mean: s.rtt_mean,
            rtt_p50: s.rtt_p50,
            rtt_p95: s.rtt_p95,
            bandwidth: s.bandwidth,
        })?;
    }
    if samples.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 8] = [
    "packet_size",
    "sent",
    "echoed",
    "loss_rate",
    "rtt_mean",
    "rtt_p50",
    "rtt_p95",
    "bandwidth",
];

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<ProbeSample>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CsvRow>()
        .map(|row| {
            row.map(|row| ProbeSample {
                packet_size: row.packet_size,
                sent: row.sent,
                echoed: row.echoed,
                loss_rate: row.loss_rate,
                rtt_mean: row.rtt_mean,
                rtt_p50: row.rtt_p50,
                rtt_p95: row.rtt_p95,
                bandwidth: row.bandwidth,
                warning: None,
            })
        })
        .collect()
}
