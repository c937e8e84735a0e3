//! Plaintext HTTP forward proxy that records every exchange to dump files
//! in the ingestion naming convention.
//!
//! Each incoming request is written to `<n>-request.txt` immediately upon
//! receipt and forwarded to the upstream API; the response is relayed back
//! to the client and written to `<n>-response.txt`. Upstream failures
//! leave an orphan request file and answer the client with 502. Bodies are
//! de-chunked and hop-by-hop headers dropped before anything is written,
//! so ingestion always sees message-complete bodies.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

const UPSTREAM_TIMEOUT: Duration = Duration::from_secs(10);
const CLIENT_READ_TIMEOUT: Duration = Duration::from_secs(60);
const MAX_HEADERS: usize = 128;

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("cannot bind {address}: {source}")]
    Bind {
        address: String,
        source: std::io::Error,
    },
    #[error("invalid upstream URL {url:?}: {reason}")]
    InvalidUpstream { url: String, reason: String },
    #[error("output directory {0:?} is not writable: {1}")]
    OutputDir(PathBuf, String),
}

#[derive(Debug, Clone)]
pub struct ProxyConfig {
    /// host:port to listen on.
    pub listen_address: String,
    /// scheme://host:port of the API under test; plaintext HTTP only.
    pub upstream_base: String,
    /// Directory that receives the `<n>-request.txt`/`<n>-response.txt`
    /// dump files.
    pub output_dir: PathBuf,
    /// First sequence id to assign.
    pub starting_sequence: u64,
}

struct Upstream {
    host: String,
    port: u16,
    /// Value for the forwarded Host header.
    authority: String,
}

struct ProxyInner {
    listener: TcpListener,
    upstream: Upstream,
    output_dir: PathBuf,
    next_sequence: Mutex<u64>,
    stopped: AtomicBool,
}

/// A bound, not-yet-serving proxy.
pub struct ProxyServer {
    inner: Arc<ProxyInner>,
}

/// Handle to a proxy serving on a background thread.
pub struct ProxyHandle {
    inner: Arc<ProxyInner>,
    thread: std::thread::JoinHandle<()>,
}

fn parse_upstream(url: &str) -> Result<Upstream, ProxyError> {
    let invalid = |reason: &str| ProxyError::InvalidUpstream {
        url: url.to_string(),
        reason: reason.to_string(),
    };
    let parsed = url::Url::parse(url).map_err(|err| invalid(&err.to_string()))?;
    if parsed.scheme() != "http" {
        return Err(invalid("only plaintext http upstreams are supported"));
    }
    let host = parsed.host_str().ok_or_else(|| invalid("missing host"))?.to_string();
    let port = parsed.port().unwrap_or(80);
    let authority = if port == 80 {
        host.clone()
    } else {
        format!("{host}:{port}")
    };
    Ok(Upstream {
        host,
        port,
        authority,
    })
}

impl ProxyServer {
    pub fn bind(config: &ProxyConfig) -> Result<ProxyServer, ProxyError> {
        let upstream = parse_upstream(&config.upstream_base)?;
        std::fs::create_dir_all(&config.output_dir)
            .map_err(|err| ProxyError::OutputDir(config.output_dir.clone(), err.to_string()))?;
        let listener = TcpListener::bind(&config.listen_address).map_err(|source| {
            ProxyError::Bind {
                address: config.listen_address.clone(),
                source,
            }
        })?;
        Ok(ProxyServer {
            inner: Arc::new(ProxyInner {
                listener,
                upstream,
                output_dir: config.output_dir.clone(),
                next_sequence: Mutex::new(config.starting_sequence),
                stopped: AtomicBool::new(false),
            }),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.inner.listener.local_addr().expect("bound listener has an address")
    }

    /// Serve on the current thread until [`ProxyHandle::shutdown`] (or
    /// process termination for the CLI).
    pub fn serve(self) {
        accept_loop(&self.inner);
    }

    /// Serve on a background thread.
    pub fn spawn(self) -> ProxyHandle {
        let inner = Arc::clone(&self.inner);
        let thread = std::thread::spawn(move || accept_loop(&inner));
        ProxyHandle {
            inner: self.inner,
            thread,
        }
    }
}

impl ProxyHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.inner.listener.local_addr().expect("bound listener has an address")
    }

    pub fn shutdown(self) {
        self.inner.stopped.store(true, Ordering::SeqCst);
        // Poke the blocking accept so the loop observes the flag.
        let _ = TcpStream::connect(self.local_addr());
        let _ = self.thread.join();
    }
}

/// Bind and serve until interrupted; the CLI entry point.
pub fn serve(config: &ProxyConfig) -> Result<(), ProxyError> {
    let server = ProxyServer::bind(config)?;
    log::info!(
        "capture proxy listening on {} for upstream {}",
        server.local_addr(),
        config.upstream_base
    );
    server.serve();
    Ok(())
}

fn accept_loop(inner: &Arc<ProxyInner>) {
    loop {
        match inner.listener.accept() {
            Ok((stream, _)) => {
                if inner.stopped.load(Ordering::SeqCst) {
                    return;
                }
                let inner = Arc::clone(inner);
                std::thread::spawn(move || {
                    if let Err(err) = handle_connection(&inner, stream) {
                        log::warn!("proxy connection error: {err}");
                    }
                });
            }
            Err(err) => {
                if inner.stopped.load(Ordering::SeqCst) {
                    return;
                }
                log::warn!("proxy accept error: {err}");
            }
        }
    }
}

/// One parsed wire message with its framing already resolved.
struct WireMessage {
    /// Request: `METHOD target`; response: `code reason`.
    start: StartLine,
    headers: Vec<(String, String)>,
    body: Vec<u8>,
}

enum StartLine {
    Request { method: String, target: String },
    Response { code: u16, reason: String },
}

impl WireMessage {
    fn wants_close(&self) -> bool {
        header_value(&self.headers, "connection")
            .is_some_and(|v| v.to_ascii_lowercase().contains("close"))
    }

    /// Serialize with hop-by-hop headers removed and the Content-Length
    /// made consistent with the actual body. `force_length` adds a length
    /// header even to bodyless messages (needed for relaying).
    fn serialize_normalized(&self, force_length: bool, host_override: Option<&str>) -> Vec<u8> {
        let mut out = Vec::new();
        match &self.start {
            StartLine::Request { method, target } => {
                out.extend_from_slice(format!("{method} {target} HTTP/1.1\r\n").as_bytes());
            }
            StartLine::Response { code, reason } => {
                let sep = if reason.is_empty() { "" } else { " " };
                out.extend_from_slice(format!("HTTP/1.1 {code}{sep}{reason}\r\n").as_bytes());
            }
        }
        let had_framing = header_value(&self.headers, "content-length").is_some()
            || header_value(&self.headers, "transfer-encoding").is_some();
        let mut wrote_length = false;
        for (name, value) in &self.headers {
            if is_hop_by_hop(name) {
                continue;
            }
            if name.eq_ignore_ascii_case("content-length") {
                if wrote_length {
                    continue;
                }
                wrote_length = true;
                out.extend_from_slice(
                    format!("{name}: {}\r\n", self.body.len()).as_bytes(),
                );
                continue;
            }
            if name.eq_ignore_ascii_case("host") {
                if let Some(host) = host_override {
                    out.extend_from_slice(format!("{name}: {host}\r\n").as_bytes());
                    continue;
                }
            }
            out.extend_from_slice(format!("{name}: {value}\r\n").as_bytes());
        }
        if !wrote_length && (force_length || !self.body.is_empty() || had_framing) {
            out.extend_from_slice(format!("Content-Length: {}\r\n", self.body.len()).as_bytes());
        }
        if host_override.is_some() {
            // Upstream connections are one-shot.
            out.extend_from_slice(b"Connection: close\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.body);
        out
    }
}

fn is_hop_by_hop(name: &str) -> bool {
    [
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "proxy-connection",
        "te",
        "trailer",
        "transfer-encoding",
        "upgrade",
    ]
    .iter()
    .any(|h| name.eq_ignore_ascii_case(h))
}

fn header_value<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

/// Read one message head (start line + headers + blank line) from the
/// stream. Returns `None` on a clean EOF before any bytes arrive.
fn read_head<R: BufRead>(reader: &mut R) -> std::io::Result<Option<Vec<u8>>> {
    let mut head = Vec::new();
    loop {
        let mut line = Vec::new();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            if head.is_empty() {
                return Ok(None);
            }
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "connection closed inside message head",
            ));
        }
        head.extend_from_slice(&line);
        if line == b"\r\n" || line == b"\n" {
            if head.len() == line.len() {
                // Tolerate a stray leading blank line.
                head.clear();
                continue;
            }
            return Ok(Some(head));
        }
    }
}

fn read_sized_body<R: BufRead>(
    reader: &mut R,
    headers: &[(String, String)],
    is_request: bool,
) -> std::io::Result<Vec<u8>> {
    let chunked = header_value(headers, "transfer-encoding")
        .is_some_and(|v| v.to_ascii_lowercase().contains("chunked"));
    if chunked {
        return read_chunked_body(reader);
    }
    if let Some(length) = header_value(headers, "content-length") {
        let length: usize = length.trim().parse().map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, "bad Content-Length")
        })?;
        let mut body = vec![0u8; length];
        reader.read_exact(&mut body)?;
        return Ok(body);
    }
    if is_request {
        // A request without framing headers has no body.
        Ok(Vec::new())
    } else {
        // A response without framing is delimited by connection close.
        let mut body = Vec::new();
        reader.read_to_end(&mut body)?;
        Ok(body)
    }
}

fn read_chunked_body<R: BufRead>(reader: &mut R) -> std::io::Result<Vec<u8>> {
    let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
    let mut body = Vec::new();
    loop {
        let mut size_line = Vec::new();
        if reader.read_until(b'\n', &mut size_line)? == 0 {
            return Err(bad("eof inside chunked body"));
        }
        let text = String::from_utf8_lossy(&size_line);
        let size = usize::from_str_radix(
            text.trim_end().split(';').next().unwrap_or("").trim(),
            16,
        )
        .map_err(|_| bad("invalid chunk size"))?;
        if size == 0 {
            // Consume optional trailers up to the final blank line.
            loop {
                let mut trailer = Vec::new();
                if reader.read_until(b'\n', &mut trailer)? == 0 {
                    return Ok(body);
                }
                if trailer == b"\r\n" || trailer == b"\n" {
                    return Ok(body);
                }
            }
        }
        let mut chunk = vec![0u8; size];
        reader.read_exact(&mut chunk)?;
        body.extend_from_slice(&chunk);
        let mut crlf = Vec::new();
        reader.read_until(b'\n', &mut crlf)?;
    }
}

fn read_request<R: BufRead>(reader: &mut R) -> std::io::Result<Option<WireMessage>> {
    let Some(head) = read_head(reader)? else {
        return Ok(None);
    };
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let mut header_buf = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut parsed = httparse::Request::new(&mut header_buf);
    match parsed.parse(&head) {
        Ok(httparse::Status::Complete(_)) => {}
        Ok(httparse::Status::Partial) => return Err(bad("truncated request head".into())),
        Err(err) => return Err(bad(format!("malformed request head: {err}"))),
    }
    let headers = own_headers(parsed.headers);
    let body = read_sized_body(reader, &headers, true)?;
    Ok(Some(WireMessage {
        start: StartLine::Request {
            method: parsed.method.unwrap_or("").to_string(),
            target: parsed.path.unwrap_or("/").to_string(),
        },
        headers,
        body,
    }))
}

fn read_response<R: BufRead>(reader: &mut R) -> std::io::Result<WireMessage> {
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let head = read_head(reader)?
        .ok_or_else(|| bad("upstream closed before sending a response".into()))?;
    let mut header_buf = [httparse::EMPTY_HEADER; MAX_HEADERS];
    let mut parsed = httparse::Response::new(&mut header_buf);
    match parsed.parse(&head) {
        Ok(httparse::Status::Complete(_)) => {}
        Ok(httparse::Status::Partial) => return Err(bad("truncated response head".into())),
        Err(err) => return Err(bad(format!("malformed response head: {err}"))),
    }
    let headers = own_headers(parsed.headers);
    let body = read_sized_body(reader, &headers, false)?;
    Ok(WireMessage {
        start: StartLine::Response {
            code: parsed.code.unwrap_or(0),
            reason: parsed.reason.unwrap_or("").to_string(),
        },
        headers,
        body,
    })
}

fn own_headers(parsed: &[httparse::Header<'_>]) -> Vec<(String, String)> {
    parsed
        .iter()
        .map(|h| {
            (
                h.name.to_string(),
                String::from_utf8_lossy(h.value).trim().to_string(),
            )
        })
        .collect()
}

impl ProxyInner {
    /// Allocate the next sequence id and write the request dump; the
    /// counter and the write are under one lock so ids are strictly
    /// increasing with no gaps among completed accepts.
    fn record_request(&self, request: &WireMessage) -> u64 {
        let mut counter = self.next_sequence.lock().expect("sequence lock");
        let sequence = *counter;
        *counter += 1;
        let path = self.output_dir.join(format!("{sequence}-request.txt"));
        if let Err(err) = std::fs::write(&path, request.serialize_normalized(false, None)) {
            log::error!("cannot write {path:?}: {err}");
        }
        sequence
    }

    fn record_response(&self, sequence: u64, response: &WireMessage) {
        let path = self.output_dir.join(format!("{sequence}-response.txt"));
        if let Err(err) = std::fs::write(&path, response.serialize_normalized(false, None)) {
            log::error!("cannot write {path:?}: {err}");
        }
    }

    fn forward(&self, request: &WireMessage) -> std::io::Result<WireMessage> {
        let address = (self.upstream.host.as_str(), self.upstream.port)
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| {
                std::io::Error::new(std::io::ErrorKind::NotFound, "upstream did not resolve")
            })?;
        let mut upstream = TcpStream::connect_timeout(&address, UPSTREAM_TIMEOUT)?;
        upstream.set_read_timeout(Some(UPSTREAM_TIMEOUT))?;
        upstream.set_write_timeout(Some(UPSTREAM_TIMEOUT))?;
        upstream.write_all(
            &request.serialize_normalized(true, Some(&self.upstream.authority)),
        )?;
        upstream.flush()?;
        let mut reader = BufReader::new(upstream);
        read_response(&mut reader)
    }
}

fn handle_connection(inner: &Arc<ProxyInner>, stream: TcpStream) -> std::io::Result<()> {
    stream.set_read_timeout(Some(CLIENT_READ_TIMEOUT))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    loop {
        let Some(request) = read_request(&mut reader)? else {
            return Ok(());
        };
        let wants_close = request.wants_close();
        let sequence = inner.record_request(&request);
        match inner.forward(&request) {
            Ok(response) => {
                inner.record_response(sequence, &response);
                writer.write_all(&response.serialize_normalized(true, None))?;
                writer.flush()?;
            }
            Err(err) => {
                log::warn!("exchange {sequence}: upstream failure: {err}");
                writer.write_all(
                    b"HTTP/1.1 502 Bad Gateway\r\nContent-Length: 0\r\nConnection: close\r\n\r\n",
                )?;
                writer.flush()?;
                return Ok(());
            }
        }
        if wants_close {
            return Ok(());
        }
    }
}
