//! Change impact analysis from artifact edits to argument nodes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifact_store::fingerprint;
use crate::case_model::{resolve_away, AssuranceCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Baseline {
    pub case_id: String,
    pub created_at: DateTime<Utc>,
    pub fingerprints: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImpactReport {
    pub changed_artifacts: Vec<String>,
    pub added_artifacts: Vec<String>,
    pub removed_artifacts: Vec<String>,
    pub impacted_nodes: Vec<String>,
}

impl ImpactReport {
    pub fn has_changes(&self) -> bool {
        !(self.changed_artifacts.is_empty() && self.added_artifacts.is_empty() && self.removed_artifacts.is_empty())
    }
}

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("unreadable artifacts: {}", .0.iter().map(|(id, why)| format!("{id} ({why})")).collect::<Vec<_>>().join("; "))]
    Unreadable(Vec<(String, String)>),
    #[error("baseline belongs to case {baseline}, not {case}")]
    CaseMismatch { baseline: String, case: String },
    #[error("baseline file {path}: {message}")]
    BaselineFile { path: String, message: String },
}

pub fn snapshot(case: &AssuranceCase, root: &Path) -> Result<Baseline, ImpactError> {
    let mut fingerprints = BTreeMap::new();
    let mut unreadable = Vec::new();
    for record in case.artifacts() {
        match fingerprint(record, root) {
            Ok(fp) => {
                fingerprints.insert(fp.artifact_id, fp.digest);
            }
            Err(e) => unreadable.push((record.id.clone(), e.to_string())),
        }
    }
    if !unreadable.is_empty() {
        return Err(ImpactError::Unreadable(unreadable));
    }
    Ok(Baseline {
        case_id: case.case_id.clone(),
        created_at: Utc::now(),
        fingerprints,
    })
}

pub fn save_baseline(baseline: &Baseline, path: &Path) -> Result<(), ImpactError> {
    let mut json = serde_json::to_string_pretty(baseline).expect("baseline serializes");
    json.push('\n');
    fs::write(path, json).map_err(|e| ImpactError::BaselineFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_baseline(path: &Path) -> Result<Baseline, ImpactError> {
    let fail = |message: String| ImpactError::BaselineFile {
        path: path.display().to_string(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| fail(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| fail(e.to_string()))
}

/// Compares current artifact digests with the baseline and closes the set of
/// citing nodes upward. An artifact that can no longer be read counts as
/// changed.
pub fn impact_of(case: &AssuranceCase, baseline: &Baseline, root: &Path) -> Result<ImpactReport, ImpactError> {
    if baseline.case_id != case.case_id {
        return Err(ImpactError::CaseMismatch {
            baseline: baseline.case_id.clone(),
            case: case.case_id.clone(),
        });
    }
    let mut report = ImpactReport::default();
    let mut current = BTreeSet::new();
    for record in case.artifacts() {
        current.insert(record.id.clone());
        let digest = fingerprint(record, root).ok().map(|f| f.digest);
        match baseline.fingerprints.get(&record.id) {
            None => report.added_artifacts.push(record.id.clone()),
            Some(old) if digest.as_deref() != Some(old.as_str()) => report.changed_artifacts.push(record.id.clone()),
            Some(_) => {}
        }
    }
    report.removed_artifacts = baseline
        .fingerprints
        .keys()
        .filter(|id| !current.contains(*id))
        .cloned()
        .collect();
    report.changed_artifacts.sort();
    report.added_artifacts.sort();

    let seeds: BTreeSet<&str> = report
        .changed_artifacts
        .iter()
        .chain(&report.added_artifacts)
        .chain(&report.removed_artifacts)
        .map(String::as_str)
        .collect();
    report.impacted_nodes = impacted_by(case, &seeds);
    Ok(report)
}

/// Nodes citing any of `artifacts`, closed upward, ordered child before parent.
pub fn impacted_by(case: &AssuranceCase, artifacts: &BTreeSet<&str>) -> Vec<String> {
    let graph = DependencyGraph::new(case);
    let mut impacted: BTreeSet<&str> = BTreeSet::new();
    let mut work: Vec<&str> = case
        .nodes()
        .filter(|n| n.citations.iter().any(|a| artifacts.contains(a.as_str())))
        .map(|n| n.id.as_str())
        .collect();
    while let Some(id) = work.pop() {
        if impacted.insert(id) {
            if let Some(parents) = graph.parents.get(id) {
                work.extend(parents.iter().copied());
            }
        }
    }

    let mut order = Vec::with_capacity(impacted.len());
    let mut seen = BTreeSet::new();
    for &id in &impacted {
        postorder(id, &graph, &impacted, &mut seen, &mut order);
    }
    order
}

fn postorder<'a>(
    id: &'a str,
    graph: &DependencyGraph<'a>,
    impacted: &BTreeSet<&'a str>,
    seen: &mut BTreeSet<&'a str>,
    order: &mut Vec<String>,
) {
    if !seen.insert(id) {
        return;
    }
    if let Some(children) = graph.children.get(id) {
        for &child in children {
            if impacted.contains(child) {
                postorder(child, graph, impacted, seen, order);
            }
        }
    }
    order.push(id.to_string());
}

/// Edges from a node to the nodes it depends on: connector targets within a
/// module and, for away nodes, the node they resolve to.
struct DependencyGraph<'a> {
    children: HashMap<&'a str, BTreeSet<&'a str>>,
    parents: HashMap<&'a str, BTreeSet<&'a str>>,
}

impl<'a> DependencyGraph<'a> {
    fn new(case: &'a AssuranceCase) -> Self {
        let mut g = DependencyGraph {
            children: HashMap::new(),
            parents: HashMap::new(),
        };
        for module in &case.modules {
            for c in &module.connectors {
                g.edge(&c.source, &c.target);
            }
            for node in &module.nodes {
                let Some(target) = &node.away_target else {
                    continue;
                };
                match resolve_away(case, &node.id) {
                    Ok(_) => {
                        let referent = case.module(&target.module).and_then(|m| m.node(&target.node));
                        if let Some(referent) = referent {
                            g.edge(&node.id, &referent.id);
                        }
                    }
                    // Unresolvable away nodes fall back to the declared
                    // module dependencies: any public goal may support them.
                    Err(_) => {
                        for link in case.inter_module_supports.iter().filter(|l| l.source == module.id) {
                            if let Some(m) = case.module(&link.target) {
                                for goal in m.public_goals() {
                                    g.edge(&node.id, &goal.id);
                                }
                            }
                        }
                    }
                }
            }
        }
        g
    }

    fn edge(&mut self, parent: &'a str, child: &'a str) {
        self.children.entry(parent).or_default().insert(child);
        self.parents.entry(child).or_default().insert(parent);
    }
}
