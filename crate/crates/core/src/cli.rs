//! Command-line frontend. Exit codes: 0 success or valid, 1 case invalid or
//! findings present, 2 usage, I/O or transport error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};

use crate::backend_service::{serve, ServiceConfig, DEFAULT_MAX_BODY_BYTES};
use crate::case_model::{check_wellformed, has_errors, parse_case, AssuranceCase, CaseError};
use crate::dsms::{run_monitor, Ingest, MonitorConfig, DEFAULT_INTERVAL_MS};
use crate::evaluator::{evaluate_case, EvalError, Status};
use crate::formal::{export_module, FormalChecker, LocalChecker, RemoteChecker};
use crate::impact::{impact_of, load_baseline, save_baseline, snapshot};
use crate::lre::generate_bundle;

pub const ROOT_ENV: &str = "CASEFORGE_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "caseforge", version, about = "Model-based assurance case engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a case file for well-formedness.
    Validate { case: PathBuf },
    /// Evaluate every constraint and propagate validity.
    Evaluate {
        case: PathBuf,
        #[arg(long)]
        root: Option<PathBuf>,
        /// Verification backend URL for theory artifacts.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render one argument module as a formal document.
    ExportFormal {
        case: PathBuf,
        #[arg(long)]
        module: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Check a formal document's integrity.
    CheckFormal {
        path: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Record artifact fingerprints as a baseline.
    Snapshot {
        case: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Report argument nodes affected by artifact changes since a baseline.
    Impact {
        case: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Re-evaluate the dynamic part of the case against runtime records.
    Monitor {
        case: PathBuf,
        #[arg(long, default_value_t = DEFAULT_INTERVAL_MS, value_parser = clap::value_parser!(u64).range(1..))]
        interval_ms: u64,
        /// `file:PATH` or `tcp:PORT`.
        #[arg(long)]
        ingest: Ingest,
        #[arg(long)]
        status: PathBuf,
        #[arg(long)]
        root: Option<PathBuf>,
        /// Dynamic artifact id; repeatable. Defaults to artifacts marked runtime.
        #[arg(long = "dynamic")]
        dynamic: Vec<String>,
        #[arg(long)]
        backend: Option<String>,
        /// Stop after this long instead of running until killed.
        #[arg(long)]
        duration_ms: Option<u64>,
    },
    /// Run the bundled verification backend.
    ServeBackend {
        #[arg(long)]
        bind: String,
        #[arg(long, default_value_t = DEFAULT_MAX_BODY_BYTES)]
        max_body_bytes: usize,
    },
    /// Write an example bundle.
    GenExample { example: Example, dir: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Example {
    Auv,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("error: {message}");
            EXIT_ERROR
        }
    }
}

fn load_case(path: &Path) -> Result<AssuranceCase, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_case(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

/// Loads a case, turning reference errors into findings rather than failures.
fn load_checked(path: &Path) -> Result<Result<AssuranceCase, CaseError>, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    match parse_case(&bytes) {
        Ok(case) => Ok(Ok(case)),
        Err(e @ (CaseError::DanglingRef { .. } | CaseError::DuplicateId { .. })) => Ok(Err(e)),
        Err(e) => Err(Failure(format!("{}: {e}", path.display()))),
    }
}

fn root_for(case_path: &Path, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| match case_path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        })
}

fn write_report(path: &Path, json: String) -> Result<(), Failure> {
    let mut json = json;
    json.push('\n');
    fs::write(path, json).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Validate { case } => {
            let case = match load_checked(&case)? {
                Ok(case) => case,
                Err(e) => {
                    println!("{e}");
                    return Ok(EXIT_FINDINGS);
                }
            };
            let findings = check_wellformed(&case);
            for f in &findings {
                println!("{:?} {}: {}", f.code, f.subject_id, f.message);
            }
            if has_errors(&findings) {
                Ok(EXIT_FINDINGS)
            } else {
                println!("well-formed");
                Ok(EXIT_OK)
            }
        }
        Command::Evaluate {
            case: case_path,
            root,
            backend,
            report,
        } => {
            let case = match load_checked(&case_path)? {
                Ok(case) => case,
                Err(e) => {
                    println!("{e}");
                    return Ok(EXIT_FINDINGS);
                }
            };
            let root = root_for(&case_path, root);
            let remote = backend.map(RemoteChecker::new);
            let result = evaluate_case(&case, &root, remote.as_ref().map(|r| r as &dyn FormalChecker));
            let report_value = match result {
                Ok(r) => r,
                Err(EvalError::IllFormed(findings)) => {
                    for f in findings.iter().filter(|f| f.code.is_error()) {
                        println!("{:?} {}: {}", f.code, f.subject_id, f.message);
                    }
                    return Ok(EXIT_FINDINGS);
                }
            };
            for verdict in report_value.verdicts.values().filter(|v| v.status != Status::Valid) {
                let reasons: Vec<String> = verdict
                    .reasons
                    .iter()
                    .map(|r| format!("{}: {}", r.code, r.message))
                    .collect();
                println!("{} {:?}: {}", verdict.node_id, verdict.status, reasons.join("; "));
            }
            println!("case {}", if report_value.case_valid { "valid" } else { "invalid" });
            if let Some(path) = report {
                write_report(&path, report_value.to_json())?;
            }
            Ok(if report_value.case_valid { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::ExportFormal { case, module, output } => {
            let case = load_case(&case)?;
            let (_, text) = export_module(&case, &module)?;
            fs::write(&output, text).map_err(|e| Failure(format!("{}: {e}", output.display())))?;
            println!("wrote {}", output.display());
            Ok(EXIT_OK)
        }
        Command::CheckFormal { path, backend, report } => {
            let text = fs::read_to_string(&path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let diagnostics = match backend {
                Some(url) => RemoteChecker::new(url).check(&text)?,
                None => LocalChecker.check(&text)?,
            };
            for e in &diagnostics.entries {
                let line = e.line.map(|l| format!(" (line {l})")).unwrap_or_default();
                println!("{:?} {}{line}: {}", e.severity, e.id, e.message);
            }
            println!("{}", if diagnostics.ok { "ok" } else { "failed" });
            if let Some(p) = report {
                write_report(&p, serde_json::to_string_pretty(&diagnostics)?)?;
            }
            Ok(if diagnostics.ok { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Snapshot { case: case_path, output, root } => {
            let case = load_case(&case_path)?;
            let baseline = snapshot(&case, &root_for(&case_path, root))?;
            save_baseline(&baseline, &output)?;
            println!("{} fingerprints written to {}", baseline.fingerprints.len(), output.display());
            Ok(EXIT_OK)
        }
        Command::Impact {
            case: case_path,
            baseline,
            report,
            root,
        } => {
            let case = load_case(&case_path)?;
            let baseline = load_baseline(&baseline)?;
            let result = impact_of(&case, &baseline, &root_for(&case_path, root))?;
            for (label, list) in [
                ("changed", &result.changed_artifacts),
                ("added", &result.added_artifacts),
                ("removed", &result.removed_artifacts),
                ("impacted", &result.impacted_nodes),
            ] {
                if !list.is_empty() {
                    println!("{label}: {}", list.join(", "));
                }
            }
            if !result.has_changes() {
                println!("no changes");
            }
            if let Some(p) = report {
                write_report(&p, serde_json::to_string_pretty(&result)?)?;
            }
            Ok(if result.has_changes() { EXIT_FINDINGS } else { EXIT_OK })
        }
        Command::Monitor {
            case: case_path,
            interval_ms,
            ingest,
            status,
            root,
            dynamic,
            backend,
            duration_ms,
        } => {
            let case = load_case(&case_path)?;
            let mut config = MonitorConfig::new(ingest, status, root_for(&case_path, root));
            config.interval_ms = interval_ms;
            config.dynamic_artifact_ids = dynamic;
            config.backend = backend;
            let handle = run_monitor(&case, config)?;
            if let Some(addr) = handle.local_addr() {
                println!("listening on {addr}");
            }
            let updates = handle.subscribe();
            let deadline = duration_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
            let mut last_valid = None;
            loop {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    break;
                }
                if let Ok(s) = updates.recv_timeout(Duration::from_millis(100)) {
                    if last_valid != Some(s.case_valid) {
                        println!(
                            "seq {} {}{}",
                            s.last_seq,
                            if s.case_valid { "valid" } else { "INVALID " },
                            s.failed_nodes.join(", ")
                        );
                        last_valid = Some(s.case_valid);
                    }
                }
            }
            let valid = handle.current_status().is_none_or(|s| s.case_valid);
            handle.stop();
            Ok(if valid { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::ServeBackend { bind, max_body_bytes } => {
            let handle = serve(ServiceConfig {
                bind_address: bind,
                max_body_bytes,
            })?;
            println!("serving on {}", handle.url());
            handle.join();
            Ok(EXIT_OK)
        }
        Command::GenExample { example: Example::Auv, dir } => {
            let manifest = generate_bundle(&dir)?;
            for f in &manifest.files {
                println!("{}", dir.join(f).display());
            }
            Ok(EXIT_OK)
        }
    }
}
