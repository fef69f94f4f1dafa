//! Datagram path probe: measures round-trip loss, delay and bandwidth for a
//! set of packet sizes and turns them into model network parameters.
//!
//! A client sends sequenced probes that the [`serve`] responder echoes, then
//! a back-to-back burst the responder times on arrival. Works over UDP or the
//! in-process [`channel_pair`] link.

mod channel;
mod client;
mod endpoint;
mod responder;
mod sample;
pub mod wire;

pub use channel::{channel_pair, ChannelEndpoint, LinkConfig, Peer};
pub use client::{run_probe, ProbeOptions, MAX_DATAGRAM};
pub use endpoint::Endpoint;
pub use responder::{serve, BurstSummary, ServeStats, SUMMARY_COPIES};
pub use sample::{one_way_loss, read_csv, to_network_params, write_csv, ProbeSample, CSV_HEADER};
pub use wire::{PacketType, ProbePacket, HEADER_LEN};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("network error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid probe options: {0}")]
    Options(String),
    #[error("no echoes received for {0}-byte packets")]
    NoEchoes(usize),
    #[error("no bandwidth estimate for {0}-byte packets")]
    MissingBandwidth(usize),
    #[error(transparent)]
    Model(#[from] lbsp_core::ModelError),
}
