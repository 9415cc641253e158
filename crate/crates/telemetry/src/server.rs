//! TCP and websocket endpoints sharing one subscriber hub.
//!
//! Every connection gets its own thread, outbound queue and `seq` counter.
//! The simulation loop pushes into the queues through [`Hub::broadcast`] and
//! drains inbound commands with [`Hub::drain_inbound`] once per tick.

use std::collections::VecDeque;
use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use arachne_core::command::Command;
use log::{debug, info, warn};
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use crate::message::{decode_command, encode, Payload, TelemetryMessage};

pub const DEFAULT_TCP_PORT: u16 = 7411;
pub const DEFAULT_WS_PORT: u16 = 7412;

const POLL: Duration = Duration::from_millis(5);
const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeConfig {
    pub host: String,
    /// Zero picks a free port.
    pub tcp_port: u16,
    pub ws_port: u16,
    /// A client whose outbound queue grows past this many messages is dropped.
    pub queue_bound: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            tcp_port: DEFAULT_TCP_PORT,
            ws_port: DEFAULT_WS_PORT,
            queue_bound: 16_384,
        }
    }
}

#[derive(Debug, Error)]
#[error("cannot bind {transport} endpoint {addr}: {source}")]
pub struct BindError {
    pub transport: &'static str,
    pub addr: String,
    #[source]
    pub source: io::Error,
}

/// Inbound traffic for the simulation loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Command(Command),
    /// A line that failed to decode, with the reason.
    Malformed(String),
}

#[derive(Debug, Default)]
struct Outbox {
    seq: u64,
    queue: VecDeque<String>,
    closing: bool,
    dropped: bool,
}

#[derive(Debug)]
struct Client {
    id: u64,
    outbox: Mutex<Outbox>,
    /// Kept for shutting the socket down from other threads.
    stream: TcpStream,
}

pub struct Hub {
    clients: Mutex<Vec<Arc<Client>>>,
    queue_bound: usize,
    inbound_tx: Mutex<Sender<Inbound>>,
    inbound_rx: Mutex<Receiver<Inbound>>,
    next_id: AtomicU64,
    shutdown: AtomicBool,
    threads: Mutex<Vec<JoinHandle<()>>>,
}

impl Hub {
    pub fn new(queue_bound: usize) -> Self {
        let (tx, rx) = mpsc::channel();
        Self {
            clients: Mutex::new(Vec::new()),
            queue_bound,
            inbound_tx: Mutex::new(tx),
            inbound_rx: Mutex::new(rx),
            next_id: AtomicU64::new(1),
            shutdown: AtomicBool::new(false),
            threads: Mutex::new(Vec::new()),
        }
    }

    pub fn client_count(&self) -> usize {
        self.clients.lock().unwrap().len()
    }

    /// Queues `(t_sim, payload)` messages for every client, in order.
    pub fn broadcast(&self, messages: &[(f64, Payload)]) {
        if messages.is_empty() {
            return;
        }
        let mut clients = self.clients.lock().unwrap();
        clients.retain(|c| {
            let mut out = c.outbox.lock().unwrap();
            if out.dropped {
                return false;
            }
            for (t_sim, payload) in messages {
                out.seq += 1;
                let line = encode(&TelemetryMessage {
                    seq: out.seq,
                    t_sim: *t_sim,
                    payload: payload.clone(),
                });
                out.queue.push_back(line);
            }
            if out.queue.len() > self.queue_bound {
                warn!(
                    "client {} fell {} messages behind, disconnecting",
                    c.id,
                    out.queue.len()
                );
                out.dropped = true;
                out.queue.clear();
                let _ = c.stream.shutdown(Shutdown::Both);
                return false;
            }
            true
        });
    }

    /// Everything received since the last call, in arrival order.
    pub fn drain_inbound(&self) -> Vec<Inbound> {
        self.inbound_rx.lock().unwrap().try_iter().collect()
    }

    /// Lets every connection flush its queue, then close.
    pub fn close_all(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for c in self.clients.lock().unwrap().drain(..) {
            c.outbox.lock().unwrap().closing = true;
        }
    }

    fn is_shutting_down(&self) -> bool {
        self.shutdown.load(Ordering::SeqCst)
    }

    fn register(&self, stream: &TcpStream) -> io::Result<Arc<Client>> {
        let client = Arc::new(Client {
            id: self.next_id.fetch_add(1, Ordering::SeqCst),
            outbox: Mutex::new(Outbox::default()),
            stream: stream.try_clone()?,
        });
        let mut clients = self.clients.lock().unwrap();
        if self.is_shutting_down() {
            client.outbox.lock().unwrap().closing = true;
        } else {
            clients.push(client.clone());
        }
        Ok(client)
    }

    fn unregister(&self, id: u64) {
        self.clients.lock().unwrap().retain(|c| c.id != id);
    }

    fn inbound(&self) -> Sender<Inbound> {
        self.inbound_tx.lock().unwrap().clone()
    }

    fn spawn(&self, name: String, f: impl FnOnce() + Send + 'static) {
        let handle = thread::Builder::new().name(name).spawn(f).expect("spawn thread");
        self.threads.lock().unwrap().push(handle);
    }
}

/// One side of a connection, polled by its thread.
trait Transport {
    fn send(&mut self, line: &str) -> io::Result<()>;
    /// Waits briefly for input and appends any complete lines. An error ends the connection.
    fn recv(&mut self, lines: &mut Vec<Vec<u8>>) -> io::Result<()>;
    fn finish(&mut self);
}

fn timed_out(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    partial: Vec<u8>,
}

impl Transport for TcpTransport {
    fn send(&mut self, line: &str) -> io::Result<()> {
        self.writer.write_all(line.as_bytes())
    }

    fn recv(&mut self, lines: &mut Vec<Vec<u8>>) -> io::Result<()> {
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => Err(ErrorKind::UnexpectedEof.into()),
            Ok(_) if self.partial.ends_with(b"\n") => {
                lines.push(std::mem::take(&mut self.partial));
                Ok(())
            }
            Ok(_) => Ok(()),
            Err(e) if timed_out(&e) => {
                if self.partial.len() > MAX_LINE {
                    lines.push(std::mem::take(&mut self.partial));
                }
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish(&mut self) {
        let _ = self.writer.flush();
        let _ = self.writer.shutdown(Shutdown::Write);
        // read until the peer closes so unread input does not reset the connection
        let deadline = Instant::now() + Duration::from_secs(1);
        let mut sink = Vec::new();
        while Instant::now() < deadline {
            sink.clear();
            match self.reader.read_until(b'\n', &mut sink) {
                Ok(0) => break,
                Ok(_) => {}
                Err(e) if timed_out(&e) => {}
                Err(_) => break,
            }
        }
    }
}

struct WsTransport {
    ws: WebSocket<TcpStream>,
}

impl Transport for WsTransport {
    fn send(&mut self, line: &str) -> io::Result<()> {
        self.ws.send(Message::text(line)).map_err(ws_io)
    }

    fn recv(&mut self, lines: &mut Vec<Vec<u8>>) -> io::Result<()> {
        match self.ws.read() {
            Ok(Message::Text(t)) => {
                lines.extend(
                    t.as_str()
                        .split('\n')
                        .filter(|l| !l.trim().is_empty())
                        .map(|l| l.as_bytes().to_vec()),
                );
                Ok(())
            }
            Ok(Message::Binary(b)) => {
                lines.extend(b.split(|&c| c == b'\n').filter(|l| !l.is_empty()).map(<[u8]>::to_vec));
                Ok(())
            }
            Ok(Message::Close(_)) => Err(ErrorKind::ConnectionAborted.into()),
            Ok(_) => Ok(()),
            Err(tungstenite::Error::Io(e)) if timed_out(&e) => Ok(()),
            Err(e) => Err(ws_io(e)),
        }
    }

    fn finish(&mut self) {
        let _ = self.ws.close(None);
        let deadline = Instant::now() + Duration::from_secs(1);
        while Instant::now() < deadline {
            match self.ws.read() {
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if timed_out(&e) => {}
                Err(_) => break,
            }
        }
    }
}

fn ws_io(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

fn run_connection(hub: &Hub, client: &Client, mut transport: impl Transport, inbound: Sender<Inbound>) {
    let mut lines = Vec::new();
    loop {
        let (batch, closing) = {
            let mut out = client.outbox.lock().unwrap();
            if out.dropped {
                return;
            }
            (std::mem::take(&mut out.queue), out.closing)
        };
        if closing && batch.is_empty() {
            transport.finish();
            return;
        }
        for line in &batch {
            if let Err(e) = transport.send(line) {
                debug!("client {}: send failed: {e}", client.id);
                return;
            }
        }
        if let Err(e) = transport.recv(&mut lines) {
            debug!("client {}: {e}", client.id);
            return;
        }
        for line in lines.drain(..) {
            let item = match decode_command(&line) {
                Ok(cmd) => Inbound::Command(cmd),
                Err(e) => {
                    debug!("client {}: {e}", client.id);
                    Inbound::Malformed(e.to_string())
                }
            };
            if inbound.send(item).is_err() {
                return;
            }
        }
        if hub.is_shutting_down() {
            client.outbox.lock().unwrap().closing = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Tcp,
    Ws,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Tcp => "tcp",
            Kind::Ws => "websocket",
        }
    }
}

type Session = Box<dyn FnOnce(&Hub, &Client, Sender<Inbound>)>;

fn handle(hub: Arc<Hub>, stream: TcpStream, kind: Kind) {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_nodelay(true);
    let transport: Session = match kind {
        Kind::Tcp => {
            let reader = match stream.try_clone() {
                Ok(r) => r,
                Err(e) => return warn!("{peer}: {e}"),
            };
            let _ = reader.set_read_timeout(Some(POLL));
            let t = TcpTransport {
                reader: BufReader::new(reader),
                writer: stream.try_clone().expect("clone accepted socket"),
                partial: Vec::new(),
            };
            Box::new(move |h, c, tx| run_connection(h, c, t, tx))
        }
        Kind::Ws => {
            let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
            let ws = match tungstenite::accept(stream.try_clone().expect("clone accepted socket")) {
                Ok(ws) => ws,
                Err(e) => return warn!("{peer}: websocket handshake failed: {e}"),
            };
            let _ = ws.get_ref().set_read_timeout(Some(POLL));
            Box::new(move |h, c, tx| run_connection(h, c, WsTransport { ws }, tx))
        }
    };
    let client = match hub.register(&stream) {
        Ok(c) => c,
        Err(e) => return warn!("{peer}: {e}"),
    };
    info!("client {} connected over {} from {peer}", client.id, kind.as_str());
    transport(&hub, &client, hub.inbound());
    hub.unregister(client.id);
    info!("client {} disconnected", client.id);
}

fn accept_loop(hub: Arc<Hub>, listener: TcpListener, kind: Kind) {
    while !hub.is_shutting_down() {
        match listener.accept() {
            Ok((stream, _)) => {
                let h = hub.clone();
                hub.spawn(format!("{}-client", kind.as_str()), move || handle(h, stream, kind));
            }
            Err(e) if timed_out(&e) => thread::sleep(POLL),
            Err(e) => {
                warn!("{} accept failed: {e}", kind.as_str());
                thread::sleep(POLL);
            }
        }
    }
}

/// A running service. Dropping it without [`Server::shutdown`] leaves the
/// threads running until the process exits.
pub struct Server {
    hub: Arc<Hub>,
    tcp_addr: SocketAddr,
    ws_addr: SocketAddr,
    acceptors: Vec<JoinHandle<()>>,
}

fn listen(host: &str, port: u16, transport: &'static str) -> Result<TcpListener, BindError> {
    let addr = format!("{host}:{port}");
    let err = |source| BindError {
        transport,
        addr: addr.clone(),
        source,
    };
    let l = TcpListener::bind(&addr).map_err(err)?;
    l.set_nonblocking(true).map_err(err)?;
    Ok(l)
}

impl Server {
    pub fn bind(cfg: &ServeConfig) -> Result<Server, BindError> {
        let tcp = listen(&cfg.host, cfg.tcp_port, "tcp")?;
        let ws = listen(&cfg.host, cfg.ws_port, "websocket")?;
        let tcp_addr = tcp.local_addr().expect("bound socket has an address");
        let ws_addr = ws.local_addr().expect("bound socket has an address");
        let hub = Arc::new(Hub::new(cfg.queue_bound));
        let acceptors = [(tcp, Kind::Tcp), (ws, Kind::Ws)]
            .into_iter()
            .map(|(l, kind)| {
                let h = hub.clone();
                thread::Builder::new()
                    .name(format!("{}-accept", kind.as_str()))
                    .spawn(move || accept_loop(h, l, kind))
                    .expect("spawn thread")
            })
            .collect();
        info!("telemetry on tcp://{tcp_addr} and ws://{ws_addr}");
        Ok(Server {
            hub,
            tcp_addr,
            ws_addr,
            acceptors,
        })
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }

    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn ws_addr(&self) -> SocketAddr {
        self.ws_addr
    }

    /// Flushes every client queue, closes the connections and joins all threads.
    pub fn shutdown(self) {
        self.hub.close_all();
        for a in self.acceptors {
            let _ = a.join();
        }
        let threads = std::mem::take(&mut *self.hub.threads.lock().unwrap());
        for t in threads {
            let _ = t.join();
        }
    }
}
