//! In-process lossy datagram link for deterministic tests.

use std::io;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::endpoint::Endpoint;

/// One direction of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Independent drop probability per datagram.
    pub loss: f64,
    /// One-way propagation delay.
    pub delay: Duration,
    /// Serialization rate in bytes/second; `None` is infinitely fast.
    pub bandwidth: Option<f64>,
}

impl LinkConfig {
    pub fn lossless() -> Self {
        LinkConfig {
            loss: 0.0,
            delay: Duration::ZERO,
            bandwidth: None,
        }
    }

    pub fn with_loss(loss: f64) -> Self {
        LinkConfig {
            loss,
            ..Self::lossless()
        }
    }
}

/// Which side of a [`channel_pair`] a datagram came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Peer;

struct Datagram {
    deliver_at: Instant,
    bytes: Vec<u8>,
}

struct Outgoing {
    rng: ChaCha8Rng,
    link_free_at: Instant,
}

pub struct ChannelEndpoint {
    config: LinkConfig,
    out: Mutex<Outgoing>,
    tx: Sender<Datagram>,
    rx: Receiver<Datagram>,
    pending: Mutex<Option<Datagram>>,
}

/// Two connected endpoints. `a_to_b` governs what the first endpoint sends.
pub fn channel_pair(a_to_b: LinkConfig, b_to_a: LinkConfig, seed: u64) -> (ChannelEndpoint, ChannelEndpoint) {
    let (tx_ab, rx_ab) = crossbeam_channel::unbounded();
    let (tx_ba, rx_ba) = crossbeam_channel::unbounded();
    let side = |config, stream, tx, rx| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ChannelEndpoint {
            config,
            out: Mutex::new(Outgoing {
                rng,
                link_free_at: Instant::now(),
            }),
            tx,
            rx,
            pending: Mutex::new(None),
        }
    };
    (side(a_to_b, 0, tx_ab, rx_ba), side(b_to_a, 1, tx_ba, rx_ab))
}

impl Endpoint for ChannelEndpoint {
    type Addr = Peer;

    fn send_to(&self, buf: &[u8], _addr: Peer) -> io::Result<()> {
        let mut out = self.out.lock().unwrap();
        let now = Instant::now();
        let start = out.link_free_at.max(now);
        let wire = match self.config.bandwidth {
            Some(bw) => Duration::from_secs_f64(buf.len() as f64 / bw),
            None => Duration::ZERO,
        };
        out.link_free_at = start + wire;
        if out.rng.random::<f64>() < self.config.loss {
            return Ok(());
        }
        let d = Datagram {
            deliver_at: start + wire + self.config.delay,
            bytes: buf.to_vec(),
        };
        // a closed peer behaves like a black hole
        let _ = self.tx.send(d);
        Ok(())
    }

    fn recv_from(&self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<(usize, Peer)>> {
        let deadline = Instant::now() + timeout;
        let mut pending = self.pending.lock().unwrap();
        let d = match pending.take() {
            Some(d) => d,
            None => match self.rx.recv_deadline(deadline) {
                Ok(d) => d,
                Err(RecvTimeoutError::Timeout | RecvTimeoutError::Disconnected) => return Ok(None),
            },
        };
        if d.deliver_at > deadline {
            std::thread::sleep(deadline.saturating_duration_since(Instant::now()));
            *pending = Some(d);
            return Ok(None);
        }
        std::thread::sleep(d.deliver_at.saturating_duration_since(Instant::now()));
        let n = d.bytes.len().min(buf.len());
        buf[..n].copy_from_slice(&d.bytes[..n]);
        Ok(Some((n, Peer)))
    }
}
