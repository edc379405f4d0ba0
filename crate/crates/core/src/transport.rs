//! Minimal request/response abstraction over HTTP so that every external
//! client can run against recorded fixtures instead of the network.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone)]
pub struct Request {
    pub method: Method,
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Option<Vec<u8>>,
    /// Logical source name (`virustotal`, `abuseipdb`, `github`, ...).
    pub source: String,
    /// What is being asked about: an IP, a hash or a search query string.
    pub subject: String,
}

impl Request {
    pub fn get(source: &str, subject: &str, url: String) -> Self {
        Request {
            method: Method::Get,
            url,
            headers: Vec::new(),
            body: None,
            source: source.to_string(),
            subject: subject.to_string(),
        }
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    /// Header names lowercased.
    pub headers: BTreeMap<String, String>,
    pub body: Vec<u8>,
}

impl Response {
    pub fn new(status: u16, body: Vec<u8>) -> Self {
        Response {
            status,
            headers: BTreeMap::new(),
            body,
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("network failure: {0}")]
    Network(String),
    #[error("network access disabled")]
    Offline,
}

pub trait Transport: Send + Sync {
    fn send(&self, req: &Request) -> Result<Response, TransportError>;

    /// True when requests leave the process.
    fn is_network(&self) -> bool;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, req: &Request) -> Result<Response, TransportError> {
        (**self).send(req)
    }

    fn is_network(&self) -> bool {
        (**self).is_network()
    }
}

/// Percent-encodes a fixture subject into a file name.
pub fn fixture_file_name(subject: &str) -> String {
    let mut out = String::with_capacity(subject.len() + 5);
    for b in subject.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'.' | b'-' | b'_') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out.push_str(".json");
    out
}

/// Serves recorded response bodies from `<dir>/<source>/<subject>.json`.
/// Subjects without a recording answer 404.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport { dir: dir.into() }
    }

    pub fn path_for(&self, source: &str, subject: &str) -> PathBuf {
        self.dir.join(source).join(fixture_file_name(subject))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Transport for FixtureTransport {
    fn send(&self, req: &Request) -> Result<Response, TransportError> {
        match std::fs::read(self.path_for(&req.source, &req.subject)) {
            Ok(body) => Ok(Response::new(200, body)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Response::new(404, Vec::new())),
            Err(e) => Err(TransportError::Network(e.to_string())),
        }
    }

    fn is_network(&self) -> bool {
        false
    }
}

/// Refuses every request.
#[derive(Debug, Clone, Default)]
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn send(&self, _req: &Request) -> Result<Response, TransportError> {
        Err(TransportError::Offline)
    }

    fn is_network(&self) -> bool {
        false
    }
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("pocscan/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &Request) -> Result<Response, TransportError> {
        let mut builder = match req.method {
            Method::Get => self.client.get(&req.url),
            Method::Post => self.client.post(&req.url),
        };
        for (k, v) in &req.headers {
            builder = builder.header(k, v);
        }
        if let Some(body) = &req.body {
            builder = builder.body(body.clone());
        }
        let resp = builder.send().map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| v.to_str().ok().map(|v| (k.as_str().to_ascii_lowercase(), v.to_string())))
            .collect();
        let body = resp
            .bytes()
            .map_err(|e| TransportError::Network(e.to_string()))?
            .to_vec();
        Ok(Response { status, headers, body })
    }

    fn is_network(&self) -> bool {
        true
    }
}

/// A request observed by [`RecordingTransport`].
#[derive(Debug, Clone)]
pub struct Recorded {
    pub source: String,
    pub subject: String,
    pub at: Instant,
}

/// Wraps another transport and remembers every request sent through it.
pub struct RecordingTransport<T> {
    inner: T,
    calls: AtomicUsize,
    log: Mutex<Vec<Recorded>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            calls: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<Recorded> {
        self.log.lock().expect("recording lock").clone()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, req: &Request) -> Result<Response, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().expect("recording lock").push(Recorded {
            source: req.source.clone(),
            subject: req.subject.clone(),
            at: Instant::now(),
        });
        self.inner.send(req)
    }

    fn is_network(&self) -> bool {
        self.inner.is_network()
    }
}
