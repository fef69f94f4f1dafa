//! Fixed 24-byte little-endian probe header.

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"LBSP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketType {
    Probe = 1,
    Echo = 2,
    Burst = 3,
    BurstSummary = 4,
    BurstEnd = 5,
}

impl PacketType {
    fn from_u16(v: u16) -> Option<Self> {
        Some(match v {
            1 => PacketType::Probe,
            2 => PacketType::Echo,
            3 => PacketType::Burst,
            4 => PacketType::BurstSummary,
            5 => PacketType::BurstEnd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProbePacket {
    pub kind: PacketType,
    pub seq: u32,
    /// Sender's monotonic clock in nanoseconds since its own epoch.
    pub sent_at: u64,
    pub payload_len: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("datagram shorter than the {HEADER_LEN}-byte header ({0} bytes)")]
    Short(usize),
    #[error("bad magic")]
    Magic,
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("unknown packet type {0}")]
    Type(u16),
}

impl ProbePacket {
    pub fn new(kind: PacketType, seq: u32, sent_at: u64, payload_len: u32) -> Self {
        ProbePacket {
            kind,
            seq,
            sent_at,
            payload_len,
        }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6..8].copy_from_slice(&(self.kind as u16).to_le_bytes());
        b[8..12].copy_from_slice(&self.seq.to_le_bytes());
        b[12..20].copy_from_slice(&self.sent_at.to_le_bytes());
        b[20..24].copy_from_slice(&self.payload_len.to_le_bytes());
        b
    }

    /// Header followed by `payload_len` zero bytes.
    pub fn encode_padded(&self) -> Vec<u8> {
        let mut v = vec![0u8; HEADER_LEN + self.payload_len as usize];
        v[..HEADER_LEN].copy_from_slice(&self.encode());
        v
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        if buf.len() < HEADER_LEN {
            return Err(WireError::Short(buf.len()));
        }
        if buf[0..4] != MAGIC {
            return Err(WireError::Magic);
        }
        let u16_at = |i: usize| u16::from_le_bytes([buf[i], buf[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(WireError::Version(version));
        }
        let raw = u16_at(6);
        let kind = PacketType::from_u16(raw).ok_or(WireError::Type(raw))?;
        Ok(ProbePacket {
            kind,
            seq: u32_at(8),
            sent_at: u64::from_le_bytes(buf[12..20].try_into().unwrap()),
            payload_len: u32_at(20),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fixed() {
        let b = ProbePacket::new(PacketType::Echo, 0x0403_0201, 0x0807_0605_0403_0201, 7).encode();
        assert_eq!(&b[..4], b"LBSP");
        assert_eq!(&b[4..8], &[1, 0, 2, 0]);
        assert_eq!(&b[8..12], &[1, 2, 3, 4]);
        assert_eq!(&b[12..20], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(&b[20..24], &[7, 0, 0, 0]);
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(ProbePacket::decode(&[0; 10]), Err(WireError::Short(10)));
        assert_eq!(ProbePacket::decode(&[0; 24]), Err(WireError::Magic));
        let mut b = ProbePacket::new(PacketType::Probe, 1, 2, 3).encode();
        b[6] = 9;
        assert_eq!(ProbePacket::decode(&b), Err(WireError::Type(9)));
        b[4] = 2;
        assert_eq!(ProbePacket::decode(&b), Err(WireError::Version(2)));
    }
}
