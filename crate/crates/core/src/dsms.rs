//! Dynamic safety management: ingests runtime records into the runtime model
//! artifact and periodically re-evaluates the part of the case that depends
//! on it. The monitor only reads runtime data and writes its status file and
//! the runtime document; it never acts on the system.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::artifact_store::{read_document, resolve_document, StoreError};
use crate::case_model::{check_wellformed, has_errors, ArtifactRecord, AssuranceCase};
use crate::evaluator::{evaluate_artifact, evaluate_loaded, propagate, ArtifactResult, Status};
use crate::formal::{FormalChecker, LocalChecker, RemoteChecker};
use crate::impact::impacted_by;

/// Artifact metadata key marking a runtime model (`"true"`).
pub const RUNTIME_METADATA_KEY: &str = "runtime";
pub const DEFAULT_INTERVAL_MS: u64 = 50;

const POLL: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleReading {
    pub ns_rel_dist: f64,
    pub ew_rel_dist: f64,
    pub obs_depth: f64,
    pub obs_ns_vel: f64,
    pub obs_ew_vel: f64,
    pub obs_roc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RuntimeRecord {
    pub seq: u64,
    pub received_at: DateTime<Utc>,
    pub payload: ObstacleReading,
}

/// NDJSON wire form of one record.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    seq: u64,
    ns_rel_dist: f64,
    ew_rel_dist: f64,
    obs_depth: f64,
    obs_ns_vel: f64,
    obs_ew_vel: f64,
    obs_roc: f64,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("record seq {seq} does not follow {last}")]
    OutOfOrder { seq: u64, last: u64 },
    #[error("artifact {0} is not a runtime model")]
    NotRuntime(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("writing runtime document {path}: {source}")]
    Write { path: String, source: io::Error },
}

pub fn parse_record(line: &str) -> Result<RuntimeRecord, DriverError> {
    let w: WireRecord = serde_json::from_str(line).map_err(|e| DriverError::Malformed(e.to_string()))?;
    Ok(RuntimeRecord {
        seq: w.seq,
        received_at: Utc::now(),
        payload: ObstacleReading {
            ns_rel_dist: w.ns_rel_dist,
            ew_rel_dist: w.ew_rel_dist,
            obs_depth: w.obs_depth,
            obs_ns_vel: w.obs_ns_vel,
            obs_ew_vel: w.obs_ew_vel,
            obs_roc: w.obs_roc,
        },
    })
}

pub fn record_line(seq: u64, r: &ObstacleReading) -> String {
    json!({
        "seq": seq,
        "ns_rel_dist": r.ns_rel_dist,
        "ew_rel_dist": r.ew_rel_dist,
        "obs_depth": r.obs_depth,
        "obs_ns_vel": r.obs_ns_vel,
        "obs_ew_vel": r.obs_ew_vel,
        "obs_roc": r.obs_roc,
    })
    .to_string()
}

pub fn runtime_document_bytes(reading: &ObstacleReading) -> Vec<u8> {
    let doc = json!({
        "$type": "LreRuntimeAssurance",
        "reading": {
            "$type": "ObstacleReading",
            "ns_rel_dist": reading.ns_rel_dist,
            "ew_rel_dist": reading.ew_rel_dist,
            "obs_depth": reading.obs_depth,
            "obs_ns_vel": reading.obs_ns_vel,
            "obs_ew_vel": reading.obs_ew_vel,
            "obs_roc": reading.obs_roc,
        }
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text.into_bytes()
}

pub fn is_runtime(record: &ArtifactRecord) -> bool {
    record.metadata.get(RUNTIME_METADATA_KEY).map(String::as_str) == Some("true")
}

/// Replaces `path` with `bytes` via a temporary file in the same directory.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_data()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes the record's reading as the whole runtime document of `target`,
/// returning the bytes written.
pub fn apply_driver(record: &RuntimeRecord, target: &ArtifactRecord, root: &Path) -> Result<Vec<u8>, DriverError> {
    if !is_runtime(target) {
        return Err(DriverError::NotRuntime(target.id.clone()));
    }
    let path = resolve_document(target, root)?;
    let bytes = runtime_document_bytes(&record.payload);
    write_atomically(&path, &bytes).map_err(|source| DriverError::Write {
        path: path.display().to_string(),
        source,
    })?;
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ingest {
    FileTail(PathBuf),
    TcpListen(u16),
}

impl FromStr for Ingest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: needs a path".into());
            }
            Ok(Ingest::FileTail(PathBuf::from(path)))
        } else if let Some(port) = s.strip_prefix("tcp:") {
            port.parse()
                .map(Ingest::TcpListen)
                .map_err(|_| format!("invalid port `{port}`"))
        } else {
            Err(format!("expected file:PATH or tcp:PORT, got `{s}`"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonitorConfig {
    pub interval_ms: u64,
    pub ingest: Ingest,
    pub status_path: PathBuf,
    /// Empty means every artifact marked as a runtime model.
    pub dynamic_artifact_ids: Vec<String>,
    /// Directory artifact document paths are relative to.
    pub root: PathBuf,
    /// Verification backend for theory artifacts; in-process when `None`.
    pub backend: Option<String>,
}

impl MonitorConfig {
    pub fn new(ingest: Ingest, status_path: impl Into<PathBuf>, root: impl Into<PathBuf>) -> Self {
        MonitorConfig {
            interval_ms: DEFAULT_INTERVAL_MS,
            ingest,
            status_path: status_path.into(),
            dynamic_artifact_ids: Vec::new(),
            root: root.into(),
            backend: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusSnapshot {
    pub timestamp: DateTime<Utc>,
    pub case_valid: bool,
    pub failed_nodes: Vec<String>,
    pub last_seq: u64,
    pub evaluation_count: u64,
    pub degraded: bool,
    pub rejected_records: u64,
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("interval must be at least 1 ms")]
    Interval,
    #[error("case is not well-formed")]
    IllFormed,
    #[error("no dynamic artifacts: mark one with metadata runtime=true or name it explicitly")]
    NoDynamicArtifacts,
    #[error("dynamic artifact {0} is not in the case")]
    UnknownArtifact(String),
    #[error("dynamic artifact {0} is cited by no node")]
    Uncited(String),
    #[error("dynamic artifact {0} is not a runtime model")]
    NotRuntime(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

enum IngestEvent {
    Applied { seq: u64, bytes: Vec<u8> },
    Rejected,
    Degraded(bool),
}

/// Background document writer. Only the newest pending content per path is
/// written, so slow storage delays persistence but never ingestion or
/// evaluation.
struct Persister {
    pending: Mutex<BTreeMap<PathBuf, Vec<u8>>>,
    ready: Condvar,
    closed: AtomicBool,
    failing: AtomicBool,
}

impl Persister {
    fn new() -> Self {
        Persister {
            pending: Mutex::new(BTreeMap::new()),
            ready: Condvar::new(),
            closed: AtomicBool::new(false),
            failing: AtomicBool::new(false),
        }
    }

    fn submit(&self, path: &Path, bytes: Vec<u8>) {
        self.pending.lock().expect("persister lock").insert(path.to_path_buf(), bytes);
        self.ready.notify_one();
    }

    fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        self.ready.notify_one();
    }

    /// Runs until closed, then flushes what is still pending.
    fn run(&self) {
        loop {
            let batch = {
                let mut pending = self.pending.lock().expect("persister lock");
                while pending.is_empty() && !self.closed.load(Ordering::SeqCst) {
                    pending = self
                        .ready
                        .wait_timeout(pending, Duration::from_millis(50))
                        .expect("persister lock")
                        .0;
                }
                std::mem::take(&mut *pending)
            };
            if batch.is_empty() {
                return;
            }
            for (path, bytes) in batch {
                let ok = write_atomically(&path, &bytes).is_ok();
                self.failing.store(!ok, Ordering::SeqCst);
            }
        }
    }
}

struct Shared {
    status: Mutex<Option<Arc<StatusSnapshot>>>,
    subscribers: Mutex<Vec<Sender<StatusSnapshot>>>,
    stop: AtomicBool,
    persister: Persister,
}

/// Running monitor. Dropping it stops the threads.
pub struct MonitorHandle {
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
    local_addr: Option<SocketAddr>,
}

impl MonitorHandle {
    /// The last published snapshot, if a tick has completed.
    pub fn current_status(&self) -> Option<StatusSnapshot> {
        self.shared
            .status
            .lock()
            .expect("status lock")
            .as_deref()
            .cloned()
    }

    /// Receives every snapshot published from now on.
    pub fn subscribe(&self) -> Receiver<StatusSnapshot> {
        let (tx, rx) = mpsc::channel();
        self.shared.subscribers.lock().expect("subscriber lock").push(tx);
        rx
    }

    /// Address of the TCP ingest listener, when there is one.
    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.local_addr
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let mut threads: Vec<JoinHandle<()>> = self.threads.drain(..).collect();
        // The persister goes last so it flushes the final versions.
        let persister = threads.pop();
        for t in threads {
            let _ = t.join();
        }
        self.shared.persister.close();
        if let Some(p) = persister {
            let _ = p.join();
        }
    }
}

/// Resolves the dynamic artifacts and checks the monitor's preconditions.
pub fn dynamic_artifacts(case: &AssuranceCase, requested: &[String]) -> Result<Vec<ArtifactRecord>, MonitorError> {
    let records: Vec<ArtifactRecord> = if requested.is_empty() {
        case.artifacts().filter(|a| is_runtime(a)).cloned().collect()
    } else {
        requested
            .iter()
            .map(|id| {
                case.artifact(id)
                    .cloned()
                    .ok_or_else(|| MonitorError::UnknownArtifact(id.clone()))
            })
            .collect::<Result<_, _>>()?
    };
    if records.is_empty() {
        return Err(MonitorError::NoDynamicArtifacts);
    }
    for r in &records {
        if !case.nodes().any(|n| n.citations.contains(&r.id)) {
            return Err(MonitorError::Uncited(r.id.clone()));
        }
    }
    Ok(records)
}

/// Nodes whose verdict can depend on the dynamic artifacts.
pub fn dynamic_subset(case: &AssuranceCase, dynamic: &[ArtifactRecord]) -> BTreeSet<String> {
    let ids: BTreeSet<&str> = dynamic.iter().map(|a| a.id.as_str()).collect();
    impacted_by(case, &ids).into_iter().collect()
}

/// Starts the ingester and evaluator threads and returns immediately.
pub fn run_monitor(case: &AssuranceCase, config: MonitorConfig) -> Result<MonitorHandle, MonitorError> {
    if config.interval_ms < 1 {
        return Err(MonitorError::Interval);
    }
    if has_errors(&check_wellformed(case)) {
        return Err(MonitorError::IllFormed);
    }
    let dynamic = dynamic_artifacts(case, &config.dynamic_artifact_ids)?;
    // Records are written into the first dynamic artifact.
    let driver_target = dynamic[0].clone();
    if !is_runtime(&driver_target) {
        return Err(MonitorError::NotRuntime(driver_target.id.clone()));
    }

    let checker: Arc<dyn FormalChecker> = match &config.backend {
        Some(url) => Arc::new(RemoteChecker::new(url.clone())),
        None => Arc::new(LocalChecker),
    };
    let dynamic_ids: BTreeSet<String> = dynamic.iter().map(|a| a.id.clone()).collect();
    let static_results: BTreeMap<String, ArtifactResult> = case
        .artifacts()
        .filter(|a| !dynamic_ids.contains(&a.id))
        .map(|a| (a.id.clone(), evaluate_artifact(a, &config.root, checker.as_ref())))
        .collect();

    let shared = Arc::new(Shared {
        status: Mutex::new(None),
        subscribers: Mutex::new(Vec::new()),
        stop: AtomicBool::new(false),
        persister: Persister::new(),
    });
    let runtime_path = resolve_document(&driver_target, &config.root)?;
    let (line_tx, line_rx) = mpsc::channel::<Result<String, bool>>();
    let (event_tx, event_rx) = mpsc::channel::<IngestEvent>();
    let mut threads = Vec::new();
    let mut local_addr = None;

    match &config.ingest {
        Ingest::FileTail(path) => {
            let path = path.clone();
            let shared = shared.clone();
            threads.push(thread::spawn(move || tail_file(&path, &shared.stop, &line_tx)));
        }
        Ingest::TcpListen(port) => match TcpListener::bind(("127.0.0.1", *port)) {
            Ok(listener) => {
                listener.set_nonblocking(true)?;
                local_addr = Some(listener.local_addr()?);
                let shared = shared.clone();
                threads.push(thread::spawn(move || accept_loop(listener, shared, line_tx)));
            }
            Err(_) => {
                let _ = line_tx.send(Err(true));
                drop(line_tx);
            }
        },
    }

    {
        let shared = shared.clone();
        threads.push(thread::spawn(move || apply_loop(line_rx, event_tx, &runtime_path, &shared)));
    }

    let evaluator = Evaluator {
        case: case.clone(),
        subset: dynamic_subset(case, &dynamic),
        dynamic,
        static_results,
        checker,
        root: config.root.clone(),
        status_path: config.status_path.clone(),
        interval: Duration::from_millis(config.interval_ms),
    };
    {
        let shared = shared.clone();
        threads.push(thread::spawn(move || evaluator.run(event_rx, &shared)));
    }
    {
        let shared = shared.clone();
        threads.push(thread::spawn(move || shared.persister.run()));
    }

    Ok(MonitorHandle {
        shared,
        threads,
        local_addr,
    })
}

/// Sends complete lines appended to `path`. `Err(degraded)` reports whether
/// the file is currently unreadable.
fn tail_file(path: &Path, stop: &AtomicBool, tx: &Sender<Result<String, bool>>) {
    let mut offset = 0u64;
    let mut partial = Vec::new();
    let mut degraded = None;
    let report = |d: bool, degraded: &mut Option<bool>| {
        if *degraded != Some(d) {
            *degraded = Some(d);
            let _ = tx.send(Err(d));
        }
    };
    while !stop.load(Ordering::SeqCst) {
        match fs::File::open(path) {
            Err(_) => report(true, &mut degraded),
            Ok(mut file) => {
                report(false, &mut degraded);
                let len = file.metadata().map(|m| m.len()).unwrap_or(0);
                if len < offset {
                    offset = 0;
                    partial.clear();
                }
                if len > offset && file.seek(SeekFrom::Start(offset)).is_ok() {
                    let mut chunk = Vec::new();
                    if let Ok(n) = file.read_to_end(&mut chunk) {
                        offset += n as u64;
                        partial.extend_from_slice(&chunk);
                        while let Some(end) = partial.iter().position(|&b| b == b'\n') {
                            let line: Vec<u8> = partial.drain(..=end).collect();
                            let text = String::from_utf8_lossy(&line).trim().to_string();
                            if !text.is_empty() && tx.send(Ok(text)).is_err() {
                                return;
                            }
                        }
                    }
                }
            }
        }
        thread::sleep(POLL);
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, tx: Sender<Result<String, bool>>) {
    let mut connections = Vec::new();
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let tx = tx.clone();
                let shared = shared.clone();
                connections.push(thread::spawn(move || read_connection(stream, &shared.stop, &tx)));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(_) => {
                let _ = tx.send(Err(true));
                thread::sleep(POLL);
            }
        }
    }
    for c in connections {
        let _ = c.join();
    }
}

fn read_connection(stream: TcpStream, stop: &AtomicBool, tx: &Sender<Result<String, bool>>) {
    if stream.set_nonblocking(false).is_err() || stream.set_read_timeout(Some(Duration::from_millis(20))).is_err() {
        return;
    }
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    while !stop.load(Ordering::SeqCst) {
        match reader.read_line(&mut line) {
            Ok(0) => return,
            Ok(_) => {
                if line.ends_with('\n') {
                    let text = line.trim().to_string();
                    line.clear();
                    if !text.is_empty() && tx.send(Ok(text)).is_err() {
                        return;
                    }
                }
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(_) => return,
        }
    }
}

/// The single producer of runtime document versions: validates each line,
/// enforces increasing `seq`, and hands each new version to the evaluator
/// and the persister.
fn apply_loop(lines: Receiver<Result<String, bool>>, events: Sender<IngestEvent>, runtime_path: &Path, shared: &Shared) {
    let mut last: Option<u64> = None;
    for item in lines {
        let event = match item {
            Err(degraded) => IngestEvent::Degraded(degraded),
            Ok(line) => match parse_record(&line) {
                Ok(record) if last.is_some_and(|l| record.seq <= l) => IngestEvent::Rejected,
                Ok(record) => {
                    last = Some(record.seq);
                    let bytes = runtime_document_bytes(&record.payload);
                    shared.persister.submit(runtime_path, bytes.clone());
                    IngestEvent::Applied { seq: record.seq, bytes }
                }
                Err(_) => IngestEvent::Rejected,
            },
        };
        if events.send(event).is_err() {
            return;
        }
    }
}

struct Evaluator {
    case: AssuranceCase,
    dynamic: Vec<ArtifactRecord>,
    subset: BTreeSet<String>,
    static_results: BTreeMap<String, ArtifactResult>,
    checker: Arc<dyn FormalChecker>,
    root: PathBuf,
    status_path: PathBuf,
    interval: Duration,
}

impl Evaluator {
    fn run(self, events: Receiver<IngestEvent>, shared: &Shared) {
        let driver_id = self.dynamic[0].id.clone();
        let mut current = read_document(&self.dynamic[0], &self.root);
        let mut last_seq = 0;
        let mut count = 0;
        let mut rejected = 0;
        let mut degraded = false;
        let mut next_tick = Instant::now();

        while !shared.stop.load(Ordering::SeqCst) {
            // Collect ingestion up to the tick deadline.
            let mut versions: Vec<Vec<u8>> = Vec::new();
            loop {
                let now = Instant::now();
                if now >= next_tick {
                    break;
                }
                match events.recv_timeout((next_tick - now).min(Duration::from_millis(10))) {
                    Ok(IngestEvent::Applied { seq, bytes }) => {
                        last_seq = seq;
                        versions.push(bytes);
                    }
                    Ok(IngestEvent::Rejected) => rejected += 1,
                    Ok(IngestEvent::Degraded(d)) => degraded = d,
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => thread::sleep(POLL.min(next_tick.saturating_duration_since(Instant::now()))),
                }
                if shared.stop.load(Ordering::SeqCst) {
                    return;
                }
            }
            next_tick += self.interval;
            if next_tick < Instant::now() {
                next_tick = Instant::now() + self.interval;
            }

            if let Some(last) = versions.last() {
                current = Ok(last.clone());
            } else {
                versions.push(match &current {
                    Ok(b) => b.clone(),
                    Err(_) => Vec::new(),
                });
            }
            let mut failed = BTreeSet::new();
            for bytes in &versions {
                let mut results = self.static_results.clone();
                for record in &self.dynamic {
                    let loaded = if record.id == driver_id {
                        match &current {
                            Ok(_) => Ok(bytes.clone()),
                            Err(_) => read_document(record, &self.root),
                        }
                    } else {
                        read_document(record, &self.root)
                    };
                    results.insert(record.id.clone(), evaluate_loaded(record, loaded, self.checker.as_ref()));
                }
                for (id, verdict) in propagate(&self.case, &results) {
                    if verdict.status == Status::Invalid && self.subset.contains(&id) {
                        failed.insert(id);
                    }
                }
            }
            count += 1;
            let snapshot = StatusSnapshot {
                timestamp: Utc::now(),
                case_valid: failed.is_empty(),
                failed_nodes: failed.into_iter().collect(),
                last_seq,
                evaluation_count: count,
                degraded: degraded || shared.persister.failing.load(Ordering::SeqCst),
                rejected_records: rejected,
            };
            let mut text = serde_json::to_string_pretty(&snapshot).expect("status serializes");
            text.push('\n');
            shared.persister.submit(&self.status_path, text.into_bytes());
            *shared.status.lock().expect("status lock") = Some(Arc::new(snapshot.clone()));
            shared
                .subscribers
                .lock()
                .expect("subscriber lock")
                .retain(|s| s.send(snapshot.clone()).is_ok());
        }
    }
}

impl Drop for MonitorHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}
