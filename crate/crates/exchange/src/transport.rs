//! Datagram transports: an in-process loopback network with deterministic
//! loss injection for tests, and a thin UDP binding.

use std::collections::HashMap;
use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ExchangeError;

/// An unreliable, unordered datagram channel, addressed by string. UDP
/// endpoints use socket addresses; loopback endpoints use plain names.
pub trait Transport: Send + Sync {
    fn send(&self, dest: &str, datagram: &[u8]) -> Result<(), ExchangeError>;
    /// Blocks up to `timeout`; `Ok(None)` means nothing arrived in time.
    fn recv(&self, timeout: Duration) -> Result<Option<(String, Vec<u8>)>, ExchangeError>;
    fn local_addr(&self) -> String;
}

struct LossModel {
    rng: ChaCha8Rng,
    drop_probability: f64,
}

struct NetworkInner {
    endpoints: HashMap<String, Sender<(String, Vec<u8>)>>,
    loss: Option<LossModel>,
}

/// A shared in-process network. Every `send` either delivers immediately to
/// the destination mailbox or is dropped by the seeded loss model, so test
/// runs are reproducible.
#[derive(Clone)]
pub struct LoopbackNetwork {
    inner: Arc<Mutex<NetworkInner>>,
}

impl LoopbackNetwork {
    pub fn new() -> Self {
        LoopbackNetwork {
            inner: Arc::new(Mutex::new(NetworkInner {
                endpoints: HashMap::new(),
                loss: None,
            })),
        }
    }

    pub fn with_loss(seed: u64, drop_probability: f64) -> Self {
        let net = Self::new();
        net.inner.lock().unwrap().loss = Some(LossModel {
            rng: ChaCha8Rng::seed_from_u64(seed),
            drop_probability,
        });
        net
    }

    pub fn endpoint(&self, name: &str) -> LoopbackEndpoint {
        let (tx, rx) = channel();
        self.inner
            .lock()
            .unwrap()
            .endpoints
            .insert(name.to_string(), tx);
        LoopbackEndpoint {
            name: name.to_string(),
            network: self.clone(),
            mailbox: Mutex::new(rx),
        }
    }
}

impl Default for LoopbackNetwork {
    fn default() -> Self {
        Self::new()
    }
}

pub struct LoopbackEndpoint {
    name: String,
    network: LoopbackNetwork,
    mailbox: Mutex<Receiver<(String, Vec<u8>)>>,
}

impl Transport for LoopbackEndpoint {
    fn send(&self, dest: &str, datagram: &[u8]) -> Result<(), ExchangeError> {
        let mut inner = self.network.inner.lock().unwrap();
        if let Some(loss) = inner.loss.as_mut() {
            let p = loss.drop_probability;
            if loss.rng.gen_bool(p) {
                log::debug!(
                    "loopback drops {} -> {dest} ({} bytes)",
                    self.name,
                    datagram.len()
                );
                return Ok(());
            }
        }
        let Some(tx) = inner.endpoints.get(dest) else {
            return Err(ExchangeError::Transport(format!("no endpoint {dest}")));
        };
        // a closed mailbox behaves like a dead host, not an error
        let _ = tx.send((self.name.clone(), datagram.to_vec()));
        Ok(())
    }

    fn recv(&self, timeout: Duration) -> Result<Option<(String, Vec<u8>)>, ExchangeError> {
        match self.mailbox.lock().unwrap().recv_timeout(timeout) {
            Ok(message) => Ok(Some(message)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(ExchangeError::Transport("network torn down".into()))
            }
        }
    }

    fn local_addr(&self) -> String {
        self.name.clone()
    }
}

/// Decorator dropping a seeded fraction of datagrams in both directions.
/// Lets loss be injected on any transport, including real UDP sockets.
pub struct LossyTransport<T> {
    inner: T,
    rng: Mutex<ChaCha8Rng>,
    drop_probability: f64,
}

impl<T: Transport> LossyTransport<T> {
    pub fn new(inner: T, seed: u64, drop_probability: f64) -> Self {
        LossyTransport {
            inner,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            drop_probability,
        }
    }

    fn dropped(&self) -> bool {
        self.rng.lock().unwrap().gen_bool(self.drop_probability)
    }
}

impl<T: Transport> Transport for LossyTransport<T> {
    fn send(&self, dest: &str, datagram: &[u8]) -> Result<(), ExchangeError> {
        if self.dropped() {
            log::debug!("loss injection drops {} bytes to {dest}", datagram.len());
            return Ok(());
        }
        self.inner.send(dest, datagram)
    }

    fn recv(&self, timeout: Duration) -> Result<Option<(String, Vec<u8>)>, ExchangeError> {
        match self.inner.recv(timeout)? {
            Some(message) if self.dropped() => {
                log::debug!("loss injection drops {} inbound bytes", message.1.len());
                Ok(None)
            }
            other => Ok(other),
        }
    }

    fn local_addr(&self) -> String {
        self.inner.local_addr()
    }
}

pub struct UdpTransport {
    socket: UdpSocket,
}

impl UdpTransport {
    /// Bind a socket; use port 0 for an ephemeral client port.
    pub fn bind(addr: &str) -> Result<Self, ExchangeError> {
        let socket = UdpSocket::bind(addr).map_err(|e| ExchangeError::Transport(e.to_string()))?;
        Ok(UdpTransport { socket })
    }
}

impl Transport for UdpTransport {
    fn send(&self, dest: &str, datagram: &[u8]) -> Result<(), ExchangeError> {
        let addr: SocketAddr = dest
            .parse()
            .map_err(|_| ExchangeError::Transport(format!("bad address {dest}")))?;
        self.socket
            .send_to(datagram, addr)
            .map_err(|e| ExchangeError::Transport(e.to_string()))?;
        Ok(())
    }

    fn recv(&self, timeout: Duration) -> Result<Option<(String, Vec<u8>)>, ExchangeError> {
        self.socket
            .set_read_timeout(Some(timeout))
            .map_err(|e| ExchangeError::Transport(e.to_string()))?;
        let mut buf = vec![0u8; 65536];
        match self.socket.recv_from(&mut buf) {
            Ok((len, from)) => {
                buf.truncate(len);
                Ok(Some((from.to_string(), buf)))
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                Ok(None)
            }
            Err(e) => Err(ExchangeError::Transport(e.to_string())),
        }
    }

    fn local_addr(&self) -> String {
        self.socket
            .local_addr()
            .map(|a| a.to_string())
            .unwrap_or_else(|_| "unknown".into())
    }
}
