//! Echo responder. Serves one client at a time: bursts from interleaved
//! clients would be merged into one measurement.

use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use log::debug;

use crate::endpoint::Endpoint;
use crate::wire::{PacketType, ProbePacket, HEADER_LEN};

pub const SUMMARY_COPIES: usize = 5;
const POLL: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub echoed: u64,
    pub bursts: u64,
    pub ignored: u64,
}

struct Burst {
    id: u32,
    count: u32,
    first: Instant,
    last: Instant,
}

/// Summary of a timed burst: how many packets arrived and the time between
/// the first and last arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstSummary {
    pub id: u32,
    pub received: u32,
    pub elapsed_ns: u64,
}

impl BurstSummary {
    pub fn encode(&self) -> Vec<u8> {
        let mut v = ProbePacket::new(PacketType::BurstSummary, self.id, self.elapsed_ns, 4).encode_padded();
        v[HEADER_LEN..].copy_from_slice(&self.received.to_le_bytes());
        v
    }

    pub fn decode(header: &ProbePacket, datagram: &[u8]) -> Option<Self> {
        if header.kind != PacketType::BurstSummary || datagram.len() < HEADER_LEN + 4 {
            return None;
        }
        let received = u32::from_le_bytes(datagram[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
        Some(BurstSummary {
            id: header.seq,
            received,
            elapsed_ns: header.sent_at,
        })
    }
}

/// Runs until `stop` is set, answering probes and timing bursts.
pub fn serve<E: Endpoint>(endpoint: &E, stop: &AtomicBool) -> io::Result<ServeStats> {
    let mut stats = ServeStats::default();
    let mut buf = vec![0u8; 65_536];
    let mut burst: Option<Burst> = None;
    let mut last_summary: Option<BurstSummary> = None;
    while !stop.load(Ordering::Relaxed) {
        let Some((len, from)) = endpoint.recv_from(&mut buf, POLL)? else {
            continue;
        };
        let now = Instant::now();
        let Ok(pkt) = ProbePacket::decode(&buf[..len]) else {
            stats.ignored += 1;
            continue;
        };
        match pkt.kind {
            PacketType::Probe => {
                let echo = ProbePacket::new(PacketType::Echo, pkt.seq, pkt.sent_at, 0);
                endpoint.send_to(&echo.encode(), from)?;
                stats.echoed += 1;
            }
            PacketType::Burst => match &mut burst {
                Some(b) if b.id == pkt.seq => {
                    b.count += 1;
                    b.last = now;
                }
                _ => {
                    burst = Some(Burst {
                        id: pkt.seq,
                        count: 1,
                        first: now,
                        last: now,
                    })
                }
            },
            PacketType::BurstEnd => {
                let summary = match burst.take() {
                    Some(b) if b.id == pkt.seq => {
                        stats.bursts += 1;
                        BurstSummary {
                            id: b.id,
                            received: b.count,
                            elapsed_ns: (b.last - b.first).as_nanos() as u64,
                        }
                    }
                    other => {
                        burst = other;
                        match last_summary {
                            Some(s) if s.id == pkt.seq => s,
                            _ => BurstSummary {
                                id: pkt.seq,
                                received: 0,
                                elapsed_ns: 0,
                            },
                        }
                    }
                };
                debug!("burst {} summary: {:?}", pkt.seq, summary);
                let bytes = summary.encode();
                for _ in 0..SUMMARY_COPIES {
                    endpoint.send_to(&bytes, from)?;
                }
                last_summary = Some(summary);
            }
            PacketType::Echo | PacketType::BurstSummary => stats.ignored += 1,
        }
    }
    Ok(stats)
}
