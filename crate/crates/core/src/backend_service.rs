//! The bundled verification service: `POST /check` runs the formal integrity
//! checker on the request body and answers with the diagnostics JSON.
//! `GET /health` answers `ok`.

use std::io::{self, Read};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tiny_http::{Header, Method, Request, Response, Server};

use crate::formal::{check_text, BackendDiagnostics, DiagnosticEntry, Severity};

pub const DEFAULT_MAX_BODY_BYTES: usize = 4 * 1024 * 1024;
const WORKERS: usize = 4;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind_address: String,
    pub max_body_bytes: usize,
}

impl ServiceConfig {
    pub fn new(bind_address: impl Into<String>) -> Self {
        ServiceConfig {
            bind_address: bind_address.into(),
            max_body_bytes: DEFAULT_MAX_BODY_BYTES,
        }
    }
}

pub struct ServiceHandle {
    addr: SocketAddr,
    server: Arc<Server>,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL for clients, e.g. `http://127.0.0.1:8080`.
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the service is stopped from elsewhere.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds and starts serving on background threads.
pub fn serve(config: ServiceConfig) -> io::Result<ServiceHandle> {
    let server = Server::http(&config.bind_address)
        .map_err(|e| io::Error::new(io::ErrorKind::AddrNotAvailable, format!("{}: {e}", config.bind_address)))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| io::Error::new(io::ErrorKind::Unsupported, "not an IP listener"))?;
    let server = Arc::new(server);
    let stop = Arc::new(AtomicBool::new(false));
    let workers = (0..WORKERS)
        .map(|_| {
            let server = server.clone();
            let stop = stop.clone();
            let limit = config.max_body_bytes;
            thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match server.recv_timeout(Duration::from_millis(100)) {
                        Ok(Some(request)) => handle(request, limit),
                        Ok(None) => {}
                        Err(_) => return,
                    }
                }
            })
        })
        .collect();
    Ok(ServiceHandle {
        addr,
        server,
        stop,
        workers,
    })
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn text(status: u16, body: &str) -> Response<io::Cursor<Vec<u8>>> {
    Response::from_string(body).with_status_code(status)
}

fn handle(mut request: Request, limit: usize) {
    let path = request.url().split('?').next().unwrap_or("").to_string();
    let response = match (request.method(), path.as_str()) {
        (Method::Get, "/health") => text(200, "ok"),
        (Method::Post, "/check") => {
            if request.body_length().is_some_and(|n| n > limit) {
                text(413, "request body too large")
            } else {
                let mut body = Vec::new();
                let read = request.as_reader().take(limit as u64 + 1).read_to_end(&mut body);
                match read {
                    Err(_) => text(400, "could not read request body"),
                    Ok(_) if body.len() > limit => text(413, "request body too large"),
                    Ok(_) => {
                        let diagnostics = check_body(&body);
                        let json = serde_json::to_string(&diagnostics).expect("diagnostics serialize");
                        Response::from_string(json).with_header(json_header())
                    }
                }
            }
        }
        (_, "/check") | (_, "/health") => text(405, "method not allowed"),
        _ => text(404, "not found"),
    };
    let _ = request.respond(response);
}

/// What the service answers for a given request body.
pub fn check_body(body: &[u8]) -> BackendDiagnostics {
    match std::str::from_utf8(body) {
        Ok(text) => check_text(text),
        Err(e) => BackendDiagnostics::from_entries(vec![DiagnosticEntry {
            id: "syntax".into(),
            severity: Severity::Error,
            message: format!("request body is not UTF-8: {e}"),
            line: None,
        }]),
    }
}
