use std::collections::HashSet;

use thiserror::Error;

use super::{FormalDocument, RefKind, Reference, Statement};
use crate::case_model::{ArgumentModule, ArgumentNode, AssuranceCase, ConnectorKind, Declaration, NodeKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExportError {
    #[error("module {0} does not exist")]
    ModuleMissing(String),
    #[error("strategy {0} has no incoming SupportedBy")]
    StrategyWithoutParent(String),
    #[error("strategy {strategy} is supported by more than one element ({parents})")]
    StrategyWithManyParents { strategy: String, parents: String },
    #[error("connector {connector} references unknown node {node}")]
    UnknownNode { connector: String, node: String },
}

fn reference_to(node: &ArgumentNode) -> Reference {
    let kind = match node.kind {
        NodeKind::Solution => RefKind::ArtifactReference,
        NodeKind::Strategy => RefKind::Inference,
        _ => RefKind::Claim,
    };
    Reference {
        kind,
        name: node.id.clone(),
    }
}

fn declaration_of(node: &ArgumentNode) -> Declaration {
    if node.kind.is_away() {
        Declaration::Assumed
    } else if node.undeveloped {
        Declaration::NeedsSupport
    } else {
        node.declaration
    }
}

fn describe_refs(refs: &[Reference]) -> String {
    refs.iter().map(Reference::to_string).collect::<Vec<_>>().join(", ")
}

/// Generates the formal document for one module.
///
/// Phases: contextual elements, goals and away elements become Claims;
/// Solutions become ArtifactReferences; each Strategy becomes one Inference
/// from its supporting elements to its parent claim; every remaining
/// SupportedBy becomes an Inference and every InContextOf a Context. Each
/// phase is ordered by id.
pub fn export_module(case: &AssuranceCase, module_id: &str) -> Result<(FormalDocument, String), ExportError> {
    let module = case
        .module(module_id)
        .ok_or_else(|| ExportError::ModuleMissing(module_id.to_string()))?;
    let doc = export(module)?;
    let text = doc.render();
    Ok((doc, text))
}

fn export(module: &ArgumentModule) -> Result<FormalDocument, ExportError> {
    let mut nodes: Vec<&ArgumentNode> = module.nodes.iter().collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut connectors: Vec<_> = module.connectors.iter().collect();
    connectors.sort_by(|a, b| a.id.cmp(&b.id));
    let node = |connector: &str, id: &str| {
        module.node(id).ok_or_else(|| ExportError::UnknownNode {
            connector: connector.to_string(),
            node: id.to_string(),
        })
    };

    let mut statements = Vec::new();

    for n in nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Goal) || n.kind.is_contextual() || n.kind.is_away())
    {
        let description = match &n.away_target {
            Some(t) => format!("{} (away: {}.{})", n.description, t.module, t.node),
            None => n.description.clone(),
        };
        statements.push(Statement::Claim {
            name: n.id.clone(),
            declaration: declaration_of(n),
            description,
        });
    }

    for n in nodes.iter().filter(|n| n.kind == NodeKind::Solution) {
        statements.push(Statement::ArtifactReference {
            name: n.id.clone(),
            description: n.description.clone(),
        });
    }

    let mut processed: HashSet<&str> = HashSet::new();
    for strategy in nodes.iter().filter(|n| n.kind == NodeKind::Strategy) {
        let incoming: Vec<_> = connectors
            .iter()
            .filter(|c| c.kind == ConnectorKind::SupportedBy && c.target == strategy.id)
            .collect();
        let parent = match incoming.as_slice() {
            [] => return Err(ExportError::StrategyWithoutParent(strategy.id.clone())),
            [one] => *one,
            many => {
                return Err(ExportError::StrategyWithManyParents {
                    strategy: strategy.id.clone(),
                    parents: many.iter().map(|c| c.source.as_str()).collect::<Vec<_>>().join(", "),
                })
            }
        };
        processed.insert(&parent.id);
        let target = reference_to(node(&parent.id, &parent.source)?);
        let mut sources = Vec::new();
        for c in connectors
            .iter()
            .filter(|c| c.kind == ConnectorKind::SupportedBy && c.source == strategy.id)
        {
            processed.insert(&c.id);
            sources.push(reference_to(node(&c.id, &c.target)?));
        }
        let description = format!("{target} is supported by {}.", describe_refs(&sources));
        statements.push(Statement::Inference {
            name: strategy.id.clone(),
            sources,
            target,
            description,
        });
    }

    for c in connectors.iter().filter(|c| !processed.contains(c.id.as_str())) {
        let supported = reference_to(node(&c.id, &c.source)?);
        let supporting = reference_to(node(&c.id, &c.target)?);
        match c.kind {
            ConnectorKind::SupportedBy => {
                let description = format!("{supported} is supported by {supporting}.");
                statements.push(Statement::Inference {
                    name: c.id.clone(),
                    sources: vec![supporting],
                    target: supported,
                    description,
                });
            }
            ConnectorKind::InContextOf => {
                let description = format!("{supported} is context for {supporting}.");
                statements.push(Statement::Context {
                    name: c.id.clone(),
                    source: supporting,
                    target: supported,
                    description,
                });
            }
        }
    }

    Ok(FormalDocument {
        statements,
        ..FormalDocument::default()
    })
}
