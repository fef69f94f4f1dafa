use std::fmt::Debug;
use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

/// A datagram socket as seen by the probe client and responder.
pub trait Endpoint: Sync {
    type Addr: Copy + Debug + Send + Sync;

    fn send_to(&self, buf: &[u8], addr: Self::Addr) -> io::Result<()>;

    /// Waits up to `timeout` for one datagram; `Ok(None)` on timeout.
    fn recv_from(&self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<(usize, Self::Addr)>>;
}

impl Endpoint for UdpSocket {
    type Addr = SocketAddr;

    fn send_to(&self, buf: &[u8], addr: SocketAddr) -> io::Result<()> {
        UdpSocket::send_to(self, buf, addr).map(|_| ())
    }

    fn recv_from(&self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<(usize, SocketAddr)>> {
        self.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
        match UdpSocket::recv_from(self, buf) {
            Ok(r) => Ok(Some(r)),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
