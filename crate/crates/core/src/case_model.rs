//! Assurance case data model: a GSN view over SACM argument and artifact
//! packages, with parsing, canonical serialization and well-formedness checks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Goal,
    Strategy,
    Solution,
    Context,
    Assumption,
    Justification,
    AwayGoal,
    AwayContext,
    AwaySolution,
}

impl NodeKind {
    pub const ALL: [NodeKind; 9] = [
        NodeKind::Goal,
        NodeKind::Strategy,
        NodeKind::Solution,
        NodeKind::Context,
        NodeKind::Assumption,
        NodeKind::Justification,
        NodeKind::AwayGoal,
        NodeKind::AwayContext,
        NodeKind::AwaySolution,
    ];

    pub fn is_away(self) -> bool {
        matches!(
            self,
            NodeKind::AwayGoal | NodeKind::AwayContext | NodeKind::AwaySolution
        )
    }

    /// Context, Assumption and Justification.
    pub fn is_contextual(self) -> bool {
        matches!(
            self,
            NodeKind::Context | NodeKind::Assumption | NodeKind::Justification
        )
    }

    /// The kind an away node must resolve to.
    pub fn away_referent(self) -> Option<NodeKind> {
        match self {
            NodeKind::AwayGoal => Some(NodeKind::Goal),
            NodeKind::AwayContext => Some(NodeKind::Context),
            NodeKind::AwaySolution => Some(NodeKind::Solution),
            _ => None,
        }
    }

    pub fn may_be_undeveloped(self) -> bool {
        matches!(self, NodeKind::Goal | NodeKind::Strategy)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Claim declarations, as used by the formal rendering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Declaration {
    #[default]
    None,
    Axiomatic,
    Assumed,
    NeedsSupport,
    Asserted,
}

impl Declaration {
    pub fn is_none(&self) -> bool {
        *self == Declaration::None
    }

    /// Keyword used in formal documents; empty for `None`.
    pub fn keyword(self) -> &'static str {
        match self {
            Declaration::None => "",
            Declaration::Axiomatic => "axiomatic",
            Declaration::Assumed => "assumed",
            Declaration::NeedsSupport => "needsSupport",
            Declaration::Asserted => "asserted",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Declaration> {
        match word {
            "axiomatic" => Some(Declaration::Axiomatic),
            "assumed" => Some(Declaration::Assumed),
            "needsSupport" => Some(Declaration::NeedsSupport),
            "asserted" => Some(Declaration::Asserted),
            _ => None,
        }
    }

    /// Axiomatic and assumed claims carry no support obligation.
    pub fn discharges_support(self) -> bool {
        matches!(self, Declaration::Axiomatic | Declaration::Assumed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AwayTarget {
    pub module: String,
    pub node: String,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArgumentNode {
    pub id: String,
    pub kind: NodeKind,
    pub description: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub undeveloped: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub public: bool,
    #[serde(default, skip_serializing_if = "Declaration::is_none")]
    pub declaration: Declaration,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub away_target: Option<AwayTarget>,
}

impl ArgumentNode {
    pub fn new(id: impl Into<String>, kind: NodeKind, description: impl Into<String>) -> Self {
        ArgumentNode {
            id: id.into(),
            kind,
            description: description.into(),
            undeveloped: false,
            public: false,
            declaration: Declaration::None,
            citations: Vec::new(),
            away_target: None,
        }
    }

    pub fn public(mut self) -> Self {
        self.public = true;
        self
    }

    pub fn undeveloped(mut self) -> Self {
        self.undeveloped = true;
        self
    }

    pub fn declared(mut self, declaration: Declaration) -> Self {
        self.declaration = declaration;
        self
    }

    pub fn citing(mut self, artifact_id: impl Into<String>) -> Self {
        self.citations.push(artifact_id.into());
        self
    }

    pub fn away_to(mut self, module: impl Into<String>, node: impl Into<String>) -> Self {
        self.away_target = Some(AwayTarget {
            module: module.into(),
            node: node.into(),
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConnectorKind {
    SupportedBy,
    InContextOf,
}

/// `source` is the supported or contextualised element, `target` the
/// supporting or contextual one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connector {
    pub id: String,
    pub kind: ConnectorKind,
    pub source: String,
    pub target: String,
}

impl Connector {
    pub fn supported_by(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Connector {
            id: id.into(),
            kind: ConnectorKind::SupportedBy,
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn in_context_of(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Connector {
            id: id.into(),
            kind: ConnectorKind::InContextOf,
            source: source.into(),
            target: target.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgumentModule {
    pub id: String,
    #[serde(default)]
    pub nodes: Vec<ArgumentNode>,
    #[serde(default)]
    pub connectors: Vec<Connector>,
}

impl ArgumentModule {
    pub fn new(id: impl Into<String>) -> Self {
        ArgumentModule {
            id: id.into(),
            nodes: Vec::new(),
            connectors: Vec::new(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&ArgumentNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn public_goals(&self) -> impl Iterator<Item = &ArgumentNode> {
        self.nodes
            .iter()
            .filter(|n| n.public && n.kind == NodeKind::Goal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Tabular,
    Tree,
    Text,
    Theory,
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArtifactKind::Tabular => "tabular",
            ArtifactKind::Tree => "tree",
            ArtifactKind::Text => "text",
            ArtifactKind::Theory => "theory",
        })
    }
}

/// Executable validation rule attached to an artifact (SACM ImplementationConstraint).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRecord {
    pub id: String,
    pub language: ConstraintLanguage,
    pub body: String,
}

impl ConstraintRecord {
    pub fn cql(id: impl Into<String>, body: impl Into<String>) -> Self {
        ConstraintRecord {
            id: id.into(),
            language: ConstraintLanguage::Cql,
            body: body.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintLanguage {
    Cql,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ArtifactRecord {
    pub id: String,
    pub kind: ArtifactKind,
    pub document_path: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintRecord>,
}

impl ArtifactRecord {
    pub fn new(id: impl Into<String>, kind: ArtifactKind, document_path: impl Into<String>) -> Self {
        ArtifactRecord {
            id: id.into(),
            kind,
            document_path: document_path.into(),
            metadata: BTreeMap::new(),
            constraints: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn with_constraint(mut self, constraint: ConstraintRecord) -> Self {
        self.constraints.push(constraint);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactPackage {
    pub id: String,
    #[serde(default)]
    pub artifacts: Vec<ArtifactRecord>,
}

/// A `(supported module, supporting module)` dependency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSupport {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AssuranceCase {
    pub case_id: String,
    #[serde(default)]
    pub modules: Vec<ArgumentModule>,
    #[serde(default)]
    pub artifact_packages: Vec<ArtifactPackage>,
    #[serde(default)]
    pub inter_module_supports: Vec<ModuleSupport>,
}

impl AssuranceCase {
    pub fn new(case_id: impl Into<String>) -> Self {
        AssuranceCase {
            case_id: case_id.into(),
            modules: Vec::new(),
            artifact_packages: Vec::new(),
            inter_module_supports: Vec::new(),
        }
    }

    pub fn module(&self, id: &str) -> Option<&ArgumentModule> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn module_mut(&mut self, id: &str) -> Option<&mut ArgumentModule> {
        self.modules.iter_mut().find(|m| m.id == id)
    }

    /// Looks a node up across all modules, returning its owning module too.
    pub fn find_node(&self, node_id: &str) -> Option<(&ArgumentModule, &ArgumentNode)> {
        self.modules
            .iter()
            .find_map(|m| m.node(node_id).map(|n| (m, n)))
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactRecord> {
        self.artifact_packages.iter().flat_map(|p| p.artifacts.iter())
    }

    pub fn artifact(&self, id: &str) -> Option<&ArtifactRecord> {
        self.artifacts().find(|a| a.id == id)
    }

    pub fn artifact_mut(&mut self, id: &str) -> Option<&mut ArtifactRecord> {
        self.artifact_packages
            .iter_mut()
            .flat_map(|p| p.artifacts.iter_mut())
            .find(|a| a.id == id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ArgumentNode> {
        self.modules.iter().flat_map(|m| m.nodes.iter())
    }

    /// Copy with modules, nodes, connectors, packages and artifacts sorted by id.
    pub fn canonicalized(&self) -> AssuranceCase {
        let mut case = self.clone();
        case.modules.sort_by(|a, b| a.id.cmp(&b.id));
        for module in &mut case.modules {
            module.nodes.sort_by(|a, b| a.id.cmp(&b.id));
            module.connectors.sort_by(|a, b| a.id.cmp(&b.id));
        }
        case.artifact_packages.sort_by(|a, b| a.id.cmp(&b.id));
        for package in &mut case.artifact_packages {
            package.artifacts.sort_by(|a, b| a.id.cmp(&b.id));
        }
        case.inter_module_supports.sort();
        case.inter_module_supports.dedup();
        case
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum FindingCode {
    E_CONN_TYPE,
    E_CYCLE,
    E_DANGLING_REF,
    E_AWAY_UNRESOLVED,
    E_DUP_ID,
    W_UNDEVELOPED,
}

impl FindingCode {
    pub fn is_error(self) -> bool {
        self != FindingCode::W_UNDEVELOPED
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WellformednessFinding {
    pub code: FindingCode,
    pub subject_id: String,
    pub message: String,
}

impl WellformednessFinding {
    fn new(code: FindingCode, subject_id: impl Into<String>, message: impl Into<String>) -> Self {
        WellformednessFinding {
            code,
            subject_id: subject_id.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("E_DANGLING_REF {subject}: {message}")]
    DanglingRef { subject: String, message: String },
    #[error("E_DUP_ID {id}: {message}")]
    DuplicateId { id: String, message: String },
    #[error("invalid {subject}: {message}")]
    Invalid { subject: String, message: String },
}

/// Parses a case document and checks every id reference.
pub fn parse_case(bytes: &[u8]) -> Result<AssuranceCase, CaseError> {
    let case: AssuranceCase = serde_json::from_slice(bytes).map_err(|e| CaseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    for node in case.nodes() {
        if node.undeveloped && !node.kind.may_be_undeveloped() {
            return Err(CaseError::Invalid {
                subject: node.id.clone(),
                message: format!("{} nodes cannot be undeveloped", node.kind),
            });
        }
        if node.kind.is_away() != node.away_target.is_some() {
            return Err(CaseError::Invalid {
                subject: node.id.clone(),
                message: "awayTarget is required on away nodes and forbidden elsewhere".into(),
            });
        }
    }
    for artifact in case.artifacts() {
        if artifact.document_path.is_empty() {
            return Err(CaseError::Invalid {
                subject: artifact.id.clone(),
                message: "documentPath is empty".into(),
            });
        }
    }

    let mut findings = Vec::new();
    duplicate_ids(&case, &mut findings);
    dangling_refs(&case, &mut findings);
    if let Some(f) = findings.into_iter().next() {
        return Err(match f.code {
            FindingCode::E_DUP_ID => CaseError::DuplicateId {
                id: f.subject_id,
                message: f.message,
            },
            _ => CaseError::DanglingRef {
                subject: f.subject_id,
                message: f.message,
            },
        });
    }
    Ok(case)
}

/// Canonical, deterministic rendering: elements sorted by id, two-space
/// indented JSON, trailing newline.
pub fn serialize_case(case: &AssuranceCase) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&case.canonicalized()).expect("case serializes");
    out.push(b'\n');
    out
}

/// Whether the connector matrix accepts `source --kind--> target`.
pub fn connector_permitted(kind: ConnectorKind, source: NodeKind, target: NodeKind) -> bool {
    use NodeKind::*;
    match kind {
        ConnectorKind::SupportedBy => match source {
            Goal | AwayGoal => matches!(target, Goal | Strategy | Solution | AwayGoal | AwaySolution),
            Strategy => matches!(target, Goal | AwayGoal | Solution | AwaySolution),
            _ => false,
        },
        ConnectorKind::InContextOf => {
            matches!(source, Goal | AwayGoal | Strategy)
                && matches!(target, Context | Assumption | Justification | AwayContext)
        }
    }
}

/// All findings for the case; empty iff it is well-formed with no
/// undeveloped nodes. Findings are sorted.
pub fn check_wellformed(case: &AssuranceCase) -> Vec<WellformednessFinding> {
    let mut findings = Vec::new();
    duplicate_ids(case, &mut findings);
    dangling_refs(case, &mut findings);
    connector_types(case, &mut findings);
    support_cycles(case, &mut findings);
    module_cycles(case, &mut findings);

    for module in &case.modules {
        for node in &module.nodes {
            if node.kind.is_away() {
                if let Err(e) = resolve_away(case, &node.id) {
                    findings.push(WellformednessFinding::new(
                        FindingCode::E_AWAY_UNRESOLVED,
                        &node.id,
                        e.to_string(),
                    ));
                }
            }
            if node.undeveloped {
                findings.push(WellformednessFinding::new(
                    FindingCode::W_UNDEVELOPED,
                    &node.id,
                    format!("{} {} is undeveloped", node.kind, node.id),
                ));
            }
        }
    }
    findings.sort();
    findings.dedup();
    findings
}

pub fn has_errors(findings: &[WellformednessFinding]) -> bool {
    findings.iter().any(|f| f.code.is_error())
}

fn duplicate_ids(case: &AssuranceCase, findings: &mut Vec<WellformednessFinding>) {
    let mut seen_modules = HashSet::new();
    for module in &case.modules {
        if !seen_modules.insert(module.id.as_str()) {
            findings.push(WellformednessFinding::new(
                FindingCode::E_DUP_ID,
                &module.id,
                format!("module id {} declared twice", module.id),
            ));
        }
    }
    let mut seen_packages = HashSet::new();
    for package in &case.artifact_packages {
        if !seen_packages.insert(package.id.as_str()) {
            findings.push(WellformednessFinding::new(
                FindingCode::E_DUP_ID,
                &package.id,
                format!("artifact package id {} declared twice", package.id),
            ));
        }
    }
    // Artifacts: unique within a package, and citations need a case-wide unique id.
    let mut seen_artifacts = HashSet::new();
    for artifact in case.artifacts() {
        if !seen_artifacts.insert(artifact.id.as_str()) {
            findings.push(WellformednessFinding::new(
                FindingCode::E_DUP_ID,
                &artifact.id,
                format!("artifact id {} declared twice", artifact.id),
            ));
        }
        let mut seen_constraints = HashSet::new();
        for c in &artifact.constraints {
            if !seen_constraints.insert(c.id.as_str()) {
                findings.push(WellformednessFinding::new(
                    FindingCode::E_DUP_ID,
                    &c.id,
                    format!("constraint id {} declared twice in {}", c.id, artifact.id),
                ));
            }
        }
    }
    // Node and connector ids share one case-wide namespace.
    let mut seen_elements = HashSet::new();
    for module in &case.modules {
        let ids = module
            .nodes
            .iter()
            .map(|n| &n.id)
            .chain(module.connectors.iter().map(|c| &c.id));
        for id in ids {
            if !seen_elements.insert(id.as_str()) {
                findings.push(WellformednessFinding::new(
                    FindingCode::E_DUP_ID,
                    id,
                    format!("element id {id} declared twice"),
                ));
            }
        }
    }
}

fn dangling_refs(case: &AssuranceCase, findings: &mut Vec<WellformednessFinding>) {
    let module_ids: HashSet<&str> = case.modules.iter().map(|m| m.id.as_str()).collect();
    let artifact_ids: HashSet<&str> = case.artifacts().map(|a| a.id.as_str()).collect();

    for link in &case.inter_module_supports {
        for end in [&link.source, &link.target] {
            if !module_ids.contains(end.as_str()) {
                findings.push(WellformednessFinding::new(
                    FindingCode::E_DANGLING_REF,
                    end,
                    format!("interModuleSupports names unknown module {end}"),
                ));
            }
        }
    }
    for module in &case.modules {
        let local: HashSet<&str> = module.nodes.iter().map(|n| n.id.as_str()).collect();
        for c in &module.connectors {
            for end in [&c.source, &c.target] {
                if !local.contains(end.as_str()) {
                    findings.push(WellformednessFinding::new(
                        FindingCode::E_DANGLING_REF,
                        end,
                        format!(
                            "connector {} references {end}, which is not a node of module {}",
                            c.id, module.id
                        ),
                    ));
                }
            }
        }
        for node in &module.nodes {
            for cited in &node.citations {
                if !artifact_ids.contains(cited.as_str()) {
                    findings.push(WellformednessFinding::new(
                        FindingCode::E_DANGLING_REF,
                        cited,
                        format!("node {} cites unknown artifact {cited}", node.id),
                    ));
                }
            }
        }
    }
}

fn connector_types(case: &AssuranceCase, findings: &mut Vec<WellformednessFinding>) {
    for module in &case.modules {
        let kinds: HashMap<&str, NodeKind> =
            module.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
        for c in &module.connectors {
            let (Some(&src), Some(&tgt)) = (kinds.get(c.source.as_str()), kinds.get(c.target.as_str())) else {
                continue;
            };
            if !connector_permitted(c.kind, src, tgt) {
                findings.push(WellformednessFinding::new(
                    FindingCode::E_CONN_TYPE,
                    &c.id,
                    format!("{:?} from {src} {} to {tgt} {} is not permitted", c.kind, c.source, c.target),
                ));
            }
        }
    }
}

/// Returns one representative per cycle: the smallest id on it.
fn find_cycles<'a>(edges: &BTreeMap<&'a str, Vec<&'a str>>) -> Vec<&'a str> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
        found: &mut BTreeSet<&'a str>,
    ) {
        marks.insert(node, Mark::Active);
        stack.push(node);
        for &next in edges.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            match marks.get(next) {
                Some(Mark::Active) => {
                    let start = stack.iter().rposition(|&n| n == next).unwrap_or(0);
                    if let Some(&min) = stack[start..].iter().min() {
                        found.insert(min);
                    }
                }
                Some(Mark::Done) => {}
                None => visit(next, edges, marks, stack, found),
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
    }

    let mut marks = HashMap::new();
    let mut found = BTreeSet::new();
    for &node in edges.keys() {
        if !marks.contains_key(node) {
            visit(node, edges, &mut marks, &mut Vec::new(), &mut found);
        }
    }
    found.into_iter().collect()
}

fn support_cycles(case: &AssuranceCase, findings: &mut Vec<WellformednessFinding>) {
    for module in &case.modules {
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for c in module.connectors.iter().filter(|c| c.kind == ConnectorKind::SupportedBy) {
            edges.entry(&c.source).or_default().push(&c.target);
        }
        for node in find_cycles(&edges) {
            findings.push(WellformednessFinding::new(
                FindingCode::E_CYCLE,
                node,
                format!("SupportedBy cycle through {node} in module {}", module.id),
            ));
        }
    }
}

fn module_cycles(case: &AssuranceCase, findings: &mut Vec<WellformednessFinding>) {
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for link in &case.inter_module_supports {
        edges.entry(&link.source).or_default().push(&link.target);
    }
    for module in &case.modules {
        for node in &module.nodes {
            if let Some(t) = &node.away_target {
                if t.module != module.id {
                    edges.entry(&module.id).or_default().push(&t.module);
                }
            }
        }
    }
    for module in find_cycles(&edges) {
        findings.push(WellformednessFinding::new(
            FindingCode::E_CYCLE,
            module,
            format!("module dependency cycle through {module}"),
        ));
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("E_AWAY_UNRESOLVED {node}: {reason}")]
pub struct AwayError {
    pub node: String,
    pub reason: String,
}

/// Resolves an away node to the public node it stands for.
pub fn resolve_away(case: &AssuranceCase, node_id: &str) -> Result<(String, String), AwayError> {
    let fail = |reason: String| AwayError {
        node: node_id.to_string(),
        reason,
    };
    let (owner, node) = case
        .find_node(node_id)
        .ok_or_else(|| fail("no such node".into()))?;
    let expected = node
        .kind
        .away_referent()
        .ok_or_else(|| fail(format!("{} is not an away node", node.kind)))?;
    let target = node
        .away_target
        .as_ref()
        .ok_or_else(|| fail("away node has no target".into()))?;
    if target.module == owner.id {
        return Err(fail(format!("target module {} is the owning module", target.module)));
    }
    let module = case
        .module(&target.module)
        .ok_or_else(|| fail(format!("module {} does not exist", target.module)))?;
    let referent = module
        .node(&target.node)
        .ok_or_else(|| fail(format!("{} has no node {}", target.module, target.node)))?;
    if referent.kind != expected {
        return Err(fail(format!(
            "{} resolves to a {} but a {expected} is required",
            node.kind, referent.kind
        )));
    }
    if !referent.public {
        return Err(fail(format!("{}.{} is not public", target.module, target.node)));
    }
    Ok((module.id.clone(), referent.id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_modules() -> AssuranceCase {
        let mut case = AssuranceCase::new("c");
        let mut a = ArgumentModule::new("A");
        a.nodes.push(ArgumentNode::new("G1", NodeKind::Goal, "top"));
        a.nodes.push(ArgumentNode::new("AG", NodeKind::AwayGoal, "away").away_to("B", "BG"));
        a.connectors.push(Connector::supported_by("c1", "G1", "AG"));
        let mut b = ArgumentModule::new("B");
        b.nodes.push(ArgumentNode::new("BG", NodeKind::Goal, "public goal").public());
        b.nodes.push(ArgumentNode::new("BP", NodeKind::Goal, "private goal"));
        b.nodes.push(ArgumentNode::new("BC", NodeKind::Context, "context"));
        case.modules.push(a);
        case.modules.push(b);
        case
    }

    #[test]
    fn minimal_document_parses() {
        let doc = br#"{"caseId":"m","modules":[{"id":"M","nodes":[{"id":"G1","kind":"Goal","description":"g"}],"connectors":[]}],"artifactPackages":[],"interModuleSupports":[]}"#;
        let case = parse_case(doc).unwrap();
        assert_eq!(case.modules.len(), 1);
        assert_eq!(case.modules[0].nodes.len(), 1);
    }

    #[test]
    fn unknown_connector_target_is_dangling() {
        let doc = br#"{"caseId":"m","modules":[{"id":"M","nodes":[{"id":"G1","kind":"Goal","description":"g"}],"connectors":[{"id":"c","kind":"SupportedBy","source":"G1","target":"Nope"}]}],"artifactPackages":[],"interModuleSupports":[]}"#;
        match parse_case(doc) {
            Err(CaseError::DanglingRef { subject, .. }) => assert_eq!(subject, "Nope"),
            other => panic!("expected dangling ref, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_json_are_syntax_errors() {
        let doc = br#"{"caseId":"m","modules":[],"extra":1}"#;
        assert!(matches!(parse_case(doc), Err(CaseError::Syntax { .. })));
        let doc = b"{\n  \"caseId\": \"m\",\n  oops }";
        match parse_case(doc) {
            Err(CaseError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_node_ids_rejected() {
        let doc = br#"{"caseId":"m","modules":[{"id":"M","nodes":[{"id":"G1","kind":"Goal","description":"g"},{"id":"G1","kind":"Goal","description":"h"}]}]}"#;
        assert!(matches!(parse_case(doc), Err(CaseError::DuplicateId { .. })));
    }

    #[test]
    fn undeveloped_solution_rejected() {
        let doc = br#"{"caseId":"m","modules":[{"id":"M","nodes":[{"id":"S","kind":"Solution","description":"s","undeveloped":true}]}]}"#;
        assert!(matches!(parse_case(doc), Err(CaseError::Invalid { .. })));
    }

    #[test]
    fn serialization_is_canonical() {
        let mut case = AssuranceCase::new("c");
        let mut m = ArgumentModule::new("M");
        m.nodes.push(ArgumentNode::new("G2", NodeKind::Goal, "b"));
        m.nodes.push(ArgumentNode::new("G1", NodeKind::Goal, "a"));
        case.modules.push(m.clone());
        let first = serialize_case(&case);

        m.nodes.reverse();
        case.modules[0] = m;
        assert_eq!(first, serialize_case(&case));
        let again = serialize_case(&parse_case(&first).unwrap());
        assert_eq!(first, again);
    }

    #[test]
    fn goal_to_solution_is_clean() {
        let mut case = AssuranceCase::new("c");
        let mut m = ArgumentModule::new("M");
        m.nodes.push(ArgumentNode::new("G", NodeKind::Goal, "g"));
        m.nodes.push(ArgumentNode::new("S", NodeKind::Solution, "s"));
        m.connectors.push(Connector::supported_by("c", "G", "S"));
        case.modules.push(m);
        assert!(check_wellformed(&case).is_empty());
    }

    #[test]
    fn context_cannot_support() {
        let mut case = AssuranceCase::new("c");
        let mut m = ArgumentModule::new("M");
        m.nodes.push(ArgumentNode::new("G", NodeKind::Goal, "g"));
        m.nodes.push(ArgumentNode::new("C", NodeKind::Context, "c"));
        m.connectors.push(Connector::supported_by("c1", "C", "G"));
        case.modules.push(m);
        let findings = check_wellformed(&case);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::E_CONN_TYPE);
        assert_eq!(findings[0].subject_id, "c1");
    }

    #[test]
    fn two_goal_cycle_detected() {
        let mut case = AssuranceCase::new("c");
        let mut m = ArgumentModule::new("M");
        m.nodes.push(ArgumentNode::new("G1", NodeKind::Goal, "g"));
        m.nodes.push(ArgumentNode::new("G2", NodeKind::Goal, "g"));
        m.connectors.push(Connector::supported_by("a", "G1", "G2"));
        m.connectors.push(Connector::supported_by("b", "G2", "G1"));
        case.modules.push(m);
        let findings = check_wellformed(&case);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::E_CYCLE);
    }

    #[test]
    fn module_cycle_detected() {
        let mut case = two_modules();
        case.inter_module_supports.push(ModuleSupport { source: "A".into(), target: "B".into() });
        case.inter_module_supports.push(ModuleSupport { source: "B".into(), target: "A".into() });
        let findings = check_wellformed(&case);
        assert!(findings.iter().any(|f| f.code == FindingCode::E_CYCLE && f.subject_id == "A"));
    }

    #[test]
    fn away_goal_resolves_to_public_goal() {
        let case = two_modules();
        assert_eq!(resolve_away(&case, "AG").unwrap(), ("B".into(), "BG".into()));
        assert!(check_wellformed(&case).is_empty());
    }

    #[test]
    fn away_goal_to_private_goal_fails() {
        let mut case = two_modules();
        case.modules[0].nodes[1].away_target = Some(AwayTarget { module: "B".into(), node: "BP".into() });
        assert!(resolve_away(&case, "AG").is_err());
        let findings = check_wellformed(&case);
        assert_eq!(findings[0].code, FindingCode::E_AWAY_UNRESOLVED);
    }

    #[test]
    fn away_context_to_goal_is_kind_mismatch() {
        let mut case = two_modules();
        case.modules[0]
            .nodes
            .push(ArgumentNode::new("AC", NodeKind::AwayContext, "ctx").away_to("B", "BG"));
        let err = resolve_away(&case, "AC").unwrap_err();
        assert!(err.reason.contains("Context"), "{err}");
    }

    #[test]
    fn undeveloped_goal_warns() {
        let mut case = AssuranceCase::new("c");
        let mut m = ArgumentModule::new("M");
        m.nodes.push(ArgumentNode::new("G", NodeKind::Goal, "g").undeveloped());
        case.modules.push(m);
        let findings = check_wellformed(&case);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::W_UNDEVELOPED);
        assert!(!has_errors(&findings));
    }
}
