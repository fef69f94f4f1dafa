use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::endpoint::Endpoint;
use crate::responder::BurstSummary;
use crate::sample::ProbeSample;
use crate::wire::{PacketType, ProbePacket, HEADER_LEN};
use crate::ProbeError;

/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65_507;
const POLL: Duration = Duration::from_millis(20);
const BURST_END_RETRY: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    /// Datagram sizes in bytes, header included.
    pub packet_sizes: Vec<usize>,
    pub packets_per_size: u32,
    pub send_interval: Duration,
    /// How long to wait for stragglers after the last probe is sent.
    pub drain_timeout: Duration,
    pub burst_len: u32,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            packet_sizes: vec![1024],
            packets_per_size: 100,
            send_interval: Duration::from_millis(10),
            drain_timeout: Duration::from_secs(2),
            burst_len: 100,
        }
    }
}

impl ProbeOptions {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.packet_sizes.is_empty() {
            return Err(ProbeError::Options("no packet sizes given".into()));
        }
        if let Some(&s) = self
            .packet_sizes
            .iter()
            .find(|&&s| !(HEADER_LEN..=MAX_DATAGRAM).contains(&s))
        {
            return Err(ProbeError::Options(format!(
                "packet size {s} outside [{HEADER_LEN}, {MAX_DATAGRAM}]"
            )));
        }
        if self.packets_per_size == 0 {
            return Err(ProbeError::Options("packets_per_size must be >= 1".into()));
        }
        Ok(())
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

struct Client<'a, E: Endpoint> {
    endpoint: &'a E,
    peer: E::Addr,
    epoch: Instant,
    buf: Vec<u8>,
}

impl<E: Endpoint> Client<'_, E> {
    fn now_ns(&self) -> u64 {
        self.epoch.elapsed().as_nanos() as u64
    }

    fn recv(&mut self, timeout: Duration) -> Result<Option<(ProbePacket, usize)>, ProbeError> {
        match self.endpoint.recv_from(&mut self.buf, timeout)? {
            Some((len, _)) => Ok(ProbePacket::decode(&self.buf[..len]).ok().map(|p| (p, len))),
            None => Ok(None),
        }
    }

    /// Sends the sequenced probes and collects echo round-trip times.
    fn echo_phase(&mut self, base: u32, size: usize, opts: &ProbeOptions) -> Result<Vec<f64>, ProbeError> {
        const NOT_DONE: u64 = u64::MAX;
        let n = opts.packets_per_size;
        let payload = (size - HEADER_LEN) as u32;
        let finished_at = AtomicU64::new(NOT_DONE);
        let endpoint = self.endpoint;
        let peer = self.peer;
        let epoch = self.epoch;
        let mut seen = HashSet::new();
        let mut rtts = Vec::with_capacity(n as usize);

        std::thread::scope(|scope| -> Result<(), ProbeError> {
            let sender = scope.spawn(|| -> std::io::Result<()> {
                let mut next = Instant::now();
                let result = (|| {
                    for i in 0..n {
                        let now = epoch.elapsed().as_nanos() as u64;
                        let pkt = ProbePacket::new(PacketType::Probe, base + i, now, payload);
                        endpoint.send_to(&pkt.encode_padded(), peer)?;
                        if !opts.send_interval.is_zero() {
                            next += opts.send_interval;
                            std::thread::sleep(next.saturating_duration_since(Instant::now()));
                        }
                    }
                    Ok(())
                })();
                finished_at.store(epoch.elapsed().as_nanos() as u64, Ordering::Release);
                result
            });

            let drain = opts.drain_timeout.as_nanos() as u64;
            loop {
                let done = finished_at.load(Ordering::Acquire);
                if done != NOT_DONE && (seen.len() as u32 == n || self.now_ns() >= done.saturating_add(drain))
                {
                    break;
                }
                if let Some((pkt, _)) = self.recv(POLL)? {
                    let ours = pkt.kind == PacketType::Echo && pkt.seq.wrapping_sub(base) < n;
                    if ours && seen.insert(pkt.seq) {
                        let rtt = self.now_ns().saturating_sub(pkt.sent_at);
                        rtts.push(rtt as f64 * 1e-9);
                    }
                }
            }
            sender.join().expect("probe sender panicked")?;
            Ok(())
        })?;
        Ok(rtts)
    }

    /// Sends a back-to-back burst and waits for the responder's timing.
    fn burst_phase(
        &mut self,
        id: u32,
        size: usize,
        opts: &ProbeOptions,
    ) -> Result<Option<BurstSummary>, ProbeError> {
        if opts.burst_len == 0 {
            return Ok(None);
        }
        let data = ProbePacket::new(PacketType::Burst, id, 0, (size - HEADER_LEN) as u32).encode_padded();
        for _ in 0..opts.burst_len {
            self.endpoint.send_to(&data, self.peer)?;
        }
        let end = ProbePacket::new(PacketType::BurstEnd, id, 0, 0).encode();
        let deadline = Instant::now() + opts.drain_timeout;
        let mut resend_at = Instant::now();
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Ok(None);
            }
            if now >= resend_at {
                self.endpoint.send_to(&end, self.peer)?;
                resend_at = now + BURST_END_RETRY;
            }
            let wait = resend_at.min(deadline).saturating_duration_since(now);
            if let Some((pkt, len)) = self.recv(wait)? {
                if let Some(s) = BurstSummary::decode(&pkt, &self.buf[..len]) {
                    if s.id == id {
                        return Ok(Some(s));
                    }
                }
            }
        }
    }
}

/// Probes `peer` once per packet size; blocks until every size is done.
pub fn run_probe<E: Endpoint>(
    endpoint: &E,
    peer: E::Addr,
    opts: &ProbeOptions,
) -> Result<Vec<ProbeSample>, ProbeError> {
    opts.validate()?;
    let mut client = Client {
        endpoint,
        peer,
        epoch: Instant::now(),
        buf: vec![0u8; 65_536],
    };
    let mut base = 0u32;
    let mut samples = Vec::with_capacity(opts.packet_sizes.len());
    for &size in &opts.packet_sizes {
        let mut rtts = client.echo_phase(base, size, opts)?;
        let burst = client.burst_phase(base.wrapping_add(opts.packets_per_size), size, opts)?;
        base = base.wrapping_add(opts.packets_per_size + 1);

        let sent = u64::from(opts.packets_per_size);
        let echoed = rtts.len() as u64;
        rtts.sort_by(|a, b| a.total_cmp(b));
        let mut warning = None;
        let (rtt_mean, rtt_p50, rtt_p95) = if rtts.is_empty() {
            warning = Some(format!(
                "no echoes for {size}-byte packets; is the responder reachable?"
            ));
            (None, None, None)
        } else {
            let mean = rtts.iter().sum::<f64>() / rtts.len() as f64;
            (
                Some(mean),
                Some(percentile(&rtts, 0.5)),
                Some(percentile(&rtts, 0.95)),
            )
        };
        let bandwidth = match burst {
            Some(s) if s.received >= 2 && s.elapsed_ns > 0 => {
                Some(f64::from(s.received - 1) * size as f64 / (s.elapsed_ns as f64 * 1e-9))
            }
            _ => {
                warning.get_or_insert_with(|| format!("no usable burst timing for {size}-byte packets"));
                None
            }
        };
        if let Some(w) = &warning {
            warn!("{w}");
        }
        debug!("size {size}: {echoed}/{sent} echoed, burst {burst:?}");
        samples.push(ProbeSample {
            packet_size: size,
            sent,
            echoed,
            loss_rate: 1.0 - echoed as f64 / sent as f64,
            rtt_mean,
            rtt_p50,
            rtt_p95,
            bandwidth,
            warning,
        });
    }
    Ok(samples)
}
