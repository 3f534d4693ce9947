//! Collective evaluation: run every artifact constraint, then propagate
//! validity bottom-up through the argument graph and across modules.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact_store::{read_document, view_from_bytes, StoreError};
use crate::case_model::{
    check_wellformed, has_errors, resolve_away, ArgumentModule, ArgumentNode, ArtifactKind, ArtifactRecord,
    AssuranceCase, ConnectorKind, Declaration, NodeKind, WellformednessFinding,
};
use crate::cql::{check_constraint, parse_query};
use crate::formal::{FormalChecker, LocalChecker};

/// Pseudo-constraint id under which document loading failures are reported.
pub const LOAD_CONSTRAINT: &str = "load";
/// Pseudo-constraint id for the backend check of theory artifacts.
pub const INTEGRITY_CONSTRAINT: &str = "integrity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Status {
    Valid,
    Invalid,
    NeedsSupport,
    NotEvaluated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ReasonCode {
    R_CONSTRAINT_FAILED,
    R_CONSTRAINT_ERROR,
    R_ARTIFACT_MISSING,
    R_CHILD_INVALID,
    R_UNDEVELOPED,
    R_AWAY_INVALID,
    R_NO_SUPPORT,
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub code: ReasonCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeVerdict {
    pub node_id: String,
    pub status: Status,
    pub reasons: Vec<Reason>,
}

impl NodeVerdict {
    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }
}

/// Result of one constraint: a Boolean, or an error that prevented one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintOutcome {
    Checked(bool),
    Error { code: ReasonCode, message: String },
}

impl ConstraintOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ConstraintOutcome::Checked(true))
    }
}

/// Constraint id to outcome for one artifact.
pub type ArtifactResult = BTreeMap<String, ConstraintOutcome>;

pub fn artifact_passed(result: &ArtifactResult) -> bool {
    result.values().all(ConstraintOutcome::passed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub case_valid: bool,
    pub verdicts: BTreeMap<String, NodeVerdict>,
    pub evaluated_at: DateTime<Utc>,
    pub artifact_results: BTreeMap<String, ArtifactResult>,
}

impl EvaluationReport {
    pub fn status_of(&self, node_id: &str) -> Option<Status> {
        self.verdicts.get(node_id).map(|v| v.status)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("case is not well-formed: {}", summarize(.0))]
    IllFormed(Vec<WellformednessFinding>),
}

fn summarize(findings: &[WellformednessFinding]) -> String {
    findings
        .iter()
        .filter(|f| f.code.is_error())
        .map(|f| format!("{:?} {}", f.code, f.subject_id))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs every constraint of one artifact against document bytes, or the
/// load error that prevented reading them.
pub fn evaluate_loaded(
    record: &ArtifactRecord,
    bytes: Result<Vec<u8>, StoreError>,
    checker: &dyn FormalChecker,
) -> ArtifactResult {
    let mut result = ArtifactResult::new();
    let load_error = |e: StoreError| {
        let code = if e.is_missing() {
            ReasonCode::R_ARTIFACT_MISSING
        } else {
            ReasonCode::R_CONSTRAINT_ERROR
        };
        ConstraintOutcome::Error {
            code,
            message: e.to_string(),
        }
    };
    let bytes = match bytes {
        Ok(b) => b,
        Err(e) => {
            result.insert(LOAD_CONSTRAINT.into(), load_error(e));
            return result;
        }
    };

    if record.kind == ArtifactKind::Theory {
        let outcome = match String::from_utf8(bytes) {
            Err(_) => ConstraintOutcome::Error {
                code: ReasonCode::R_CONSTRAINT_ERROR,
                message: format!("theory document {} is not UTF-8", record.document_path),
            },
            Ok(text) => match checker.check(&text) {
                Ok(diagnostics) => ConstraintOutcome::Checked(diagnostics.ok),
                Err(e) => ConstraintOutcome::Error {
                    code: ReasonCode::R_CONSTRAINT_ERROR,
                    message: e.to_string(),
                },
            },
        };
        result.insert(INTEGRITY_CONSTRAINT.into(), outcome);
        return result;
    }

    let view = match view_from_bytes(record, bytes) {
        Ok(v) => v,
        Err(e) => {
            result.insert(LOAD_CONSTRAINT.into(), load_error(e));
            return result;
        }
    };
    for constraint in &record.constraints {
        let outcome = match parse_query(&constraint.body).and_then(|p| check_constraint(&p, &view)) {
            Ok(b) => ConstraintOutcome::Checked(b),
            Err(d) => ConstraintOutcome::Error {
                code: ReasonCode::R_CONSTRAINT_ERROR,
                message: d.to_string(),
            },
        };
        result.insert(constraint.id.clone(), outcome);
    }
    result
}

/// Loads the artifact from the store and runs its constraints. Never fails
/// as a whole: problems become failing outcomes.
pub fn evaluate_artifact(record: &ArtifactRecord, root: &Path, checker: &dyn FormalChecker) -> ArtifactResult {
    evaluate_loaded(record, read_document(record, root), checker)
}

pub fn evaluate_artifacts(
    case: &AssuranceCase,
    root: &Path,
    checker: &dyn FormalChecker,
) -> BTreeMap<String, ArtifactResult> {
    case.artifacts()
        .map(|a| (a.id.clone(), evaluate_artifact(a, root, checker)))
        .collect()
}

/// Assigns a verdict to every node from precomputed artifact results.
pub fn propagate(case: &AssuranceCase, artifacts: &BTreeMap<String, ArtifactResult>) -> BTreeMap<String, NodeVerdict> {
    let mut p = Propagation {
        case,
        artifacts,
        done: HashMap::new(),
        visiting: Vec::new(),
    };
    for module in &case.modules {
        for node in &module.nodes {
            p.verdict(module, node);
        }
    }
    p.done.into_iter().collect()
}

pub fn case_valid(case: &AssuranceCase, verdicts: &BTreeMap<String, NodeVerdict>) -> bool {
    case.modules.iter().all(|m| module_valid(m, verdicts))
}

pub fn module_valid(module: &ArgumentModule, verdicts: &BTreeMap<String, NodeVerdict>) -> bool {
    module
        .public_goals()
        .all(|g| verdicts.get(&g.id).is_some_and(NodeVerdict::is_valid))
}

/// Evaluates the whole case. `checker` handles theory artifacts; `None`
/// uses the in-process reference checker.
pub fn evaluate_case(
    case: &AssuranceCase,
    root: &Path,
    checker: Option<&dyn FormalChecker>,
) -> Result<EvaluationReport, EvalError> {
    let findings = check_wellformed(case);
    if has_errors(&findings) {
        return Err(EvalError::IllFormed(findings));
    }
    let artifact_results = evaluate_artifacts(case, root, checker.unwrap_or(&LocalChecker));
    Ok(report_from(case, artifact_results))
}

pub fn report_from(case: &AssuranceCase, artifact_results: BTreeMap<String, ArtifactResult>) -> EvaluationReport {
    let verdicts = propagate(case, &artifact_results);
    EvaluationReport {
        case_valid: case_valid(case, &verdicts),
        verdicts,
        evaluated_at: Utc::now(),
        artifact_results,
    }
}

struct Propagation<'a> {
    case: &'a AssuranceCase,
    artifacts: &'a BTreeMap<String, ArtifactResult>,
    done: HashMap<String, NodeVerdict>,
    visiting: Vec<String>,
}

#[derive(Default)]
struct Collect {
    reasons: Vec<Reason>,
    invalid: bool,
}

impl Collect {
    fn add(&mut self, code: ReasonCode, invalid: bool, message: String) {
        self.invalid |= invalid;
        self.reasons.push(Reason { code, message });
    }

    fn finish(self, node_id: &str) -> NodeVerdict {
        let status = if self.reasons.is_empty() {
            Status::Valid
        } else if self.invalid {
            Status::Invalid
        } else {
            Status::NeedsSupport
        };
        NodeVerdict {
            node_id: node_id.to_string(),
            status,
            reasons: self.reasons,
        }
    }
}

impl<'a> Propagation<'a> {
    fn verdict(&mut self, module: &'a ArgumentModule, node: &'a ArgumentNode) -> Status {
        if let Some(v) = self.done.get(&node.id) {
            return v.status;
        }
        if self.visiting.contains(&node.id) {
            // Only reachable for ill-formed input.
            return Status::NotEvaluated;
        }
        self.visiting.push(node.id.clone());
        let verdict = self.compute(module, node);
        self.visiting.pop();
        let status = verdict.status;
        self.done.insert(node.id.clone(), verdict);
        status
    }

    fn compute(&mut self, module: &'a ArgumentModule, node: &'a ArgumentNode) -> NodeVerdict {
        let mut c = Collect::default();

        if node.undeveloped && node.kind.may_be_undeveloped() {
            c.add(ReasonCode::R_UNDEVELOPED, false, format!("{} is undeveloped", node.id));
            return c.finish(&node.id);
        }
        if node.declaration == Declaration::NeedsSupport {
            c.add(ReasonCode::R_NO_SUPPORT, false, format!("{} is declared needsSupport", node.id));
        }

        let mut supporters = 0;
        for connector in module.connectors.iter().filter(|k| k.source == node.id) {
            let Some(child) = module.node(&connector.target) else {
                continue;
            };
            if connector.kind == ConnectorKind::SupportedBy {
                supporters += 1;
            }
            let relation = match connector.kind {
                ConnectorKind::SupportedBy => "supporting",
                ConnectorKind::InContextOf => "context",
            };
            match self.verdict(module, child) {
                Status::Valid => {}
                Status::NeedsSupport => c.add(
                    ReasonCode::R_CHILD_INVALID,
                    false,
                    format!("{relation} node {} needs support", child.id),
                ),
                Status::Invalid | Status::NotEvaluated => c.add(
                    ReasonCode::R_CHILD_INVALID,
                    true,
                    format!("{relation} node {} is invalid", child.id),
                ),
            }
        }

        match node.kind {
            NodeKind::Solution | NodeKind::Context | NodeKind::Assumption | NodeKind::Justification => {
                if node.citations.is_empty() {
                    if node.declaration.is_none() {
                        c.add(
                            ReasonCode::R_NO_SUPPORT,
                            false,
                            format!("{} cites no artifact and carries no declaration", node.id),
                        );
                    }
                } else {
                    for artifact in &node.citations {
                        self.cite(&mut c, artifact);
                    }
                }
            }
            NodeKind::Goal => {
                if supporters == 0 && !node.declaration.discharges_support() {
                    c.add(ReasonCode::R_NO_SUPPORT, false, format!("{} has no supporting node", node.id));
                }
            }
            NodeKind::Strategy => {
                if supporters == 0 {
                    c.add(ReasonCode::R_NO_SUPPORT, false, format!("{} has no supporting node", node.id));
                }
            }
            NodeKind::AwayGoal | NodeKind::AwayContext | NodeKind::AwaySolution => match resolve_away(self.case, &node.id) {
                Err(e) => c.add(ReasonCode::R_AWAY_INVALID, true, e.to_string()),
                Ok((module_id, node_id)) => {
                    let target_module = self.case.module(&module_id).expect("resolved module exists");
                    let target = target_module.node(&node_id).expect("resolved node exists");
                    match self.verdict(target_module, target) {
                        Status::Valid => {}
                        Status::NeedsSupport => c.add(
                            ReasonCode::R_AWAY_INVALID,
                            false,
                            format!("{module_id}.{node_id} needs support"),
                        ),
                        Status::Invalid | Status::NotEvaluated => c.add(
                            ReasonCode::R_AWAY_INVALID,
                            true,
                            format!("{module_id}.{node_id} is invalid"),
                        ),
                    }
                }
            },
        }
        c.finish(&node.id)
    }

    fn cite(&self, c: &mut Collect, artifact: &str) {
        let Some(result) = self.artifacts.get(artifact) else {
            c.add(
                ReasonCode::R_ARTIFACT_MISSING,
                true,
                format!("artifact {artifact} was not evaluated"),
            );
            return;
        };
        for (constraint, outcome) in result {
            match outcome {
                ConstraintOutcome::Checked(true) => {}
                ConstraintOutcome::Checked(false) => c.add(
                    ReasonCode::R_CONSTRAINT_FAILED,
                    true,
                    format!("artifact {artifact}: constraint {constraint} does not hold"),
                ),
                ConstraintOutcome::Error { code, message } => {
                    c.add(*code, true, format!("artifact {artifact}: {constraint}: {message}"))
                }
            }
        }
    }
}
