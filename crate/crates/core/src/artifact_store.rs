//! Loading engineering artifacts into a uniform element view, and
//! fingerprinting them for change impact analysis.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use serde_json::Value as Json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::case_model::{ArtifactKind, ArtifactRecord};

/// Metadata key naming the element type of tabular rows.
pub const ROW_TYPE_KEY: &str = "rowType";
/// Metadata key listing comma-separated columns whose blank cells are filled
/// from the row above (merged spreadsheet cells).
pub const FILL_DOWN_KEY: &str = "fillDown";
/// Key carrying the element type in tree documents.
pub const TYPE_KEY: &str = "$type";

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Boolean(bool),
    Real(f64),
    Text(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Boolean(b) => write!(f, "{b}"),
            Scalar::Real(r) => write!(f, "{r}"),
            Scalar::Text(t) => write!(f, "{t:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Child {
    One(Arc<Element>),
    Many(Vec<Arc<Element>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub type_name: String,
    pub attributes: BTreeMap<String, Scalar>,
    pub children: BTreeMap<String, Child>,
}

impl Element {
    pub fn new(type_name: impl Into<String>) -> Self {
        Element {
            type_name: type_name.into(),
            attributes: BTreeMap::new(),
            children: BTreeMap::new(),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&Scalar> {
        self.attributes.get(name)
    }
}

/// A loaded artifact. `elements` holds every typed element in document
/// order; it is empty for text and theory artifacts.
#[derive(Debug, Clone)]
pub struct ArtifactView {
    pub artifact_id: String,
    pub kind: ArtifactKind,
    pub elements: Vec<Arc<Element>>,
    pub raw_bytes: Vec<u8>,
}

impl ArtifactView {
    /// Elements of the given type, in document order.
    pub fn all(&self, type_name: &str) -> Vec<Arc<Element>> {
        self.elements
            .iter()
            .filter(|e| e.type_name == type_name)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fingerprint {
    pub artifact_id: String,
    pub digest: String,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{artifact}: document {path} is missing or unreadable: {source}")]
    Missing {
        artifact: String,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{artifact}: document path {path} escapes the case root")]
    PathEscape { artifact: String, path: String },
    #[error("{artifact}: malformed table: {message}")]
    MalformedTable { artifact: String, message: String },
    #[error("{artifact}: malformed tree document: {message}")]
    MalformedTree { artifact: String, message: String },
}

impl StoreError {
    pub fn is_missing(&self) -> bool {
        matches!(self, StoreError::Missing { .. })
    }
}

/// Resolves the record's document under `root`, refusing absolute paths,
/// parent components, and symlinks that leave the root.
pub fn resolve_document(record: &ArtifactRecord, root: &Path) -> Result<PathBuf, StoreError> {
    let escape = || StoreError::PathEscape {
        artifact: record.id.clone(),
        path: record.document_path.clone(),
    };
    let relative = Path::new(&record.document_path);
    if relative
        .components()
        .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir))
    {
        return Err(escape());
    }
    let path = root.join(relative);
    if let (Ok(real_root), Ok(real_path)) = (root.canonicalize(), path.canonicalize()) {
        if !real_path.starts_with(real_root) {
            return Err(escape());
        }
    }
    Ok(path)
}

pub fn read_document(record: &ArtifactRecord, root: &Path) -> Result<Vec<u8>, StoreError> {
    let path = resolve_document(record, root)?;
    fs::read(&path).map_err(|source| StoreError::Missing {
        artifact: record.id.clone(),
        path: record.document_path.clone(),
        source,
    })
}

pub fn load_artifact(record: &ArtifactRecord, root: &Path) -> Result<ArtifactView, StoreError> {
    let bytes = read_document(record, root)?;
    view_from_bytes(record, bytes)
}

/// Builds a view from document bytes already in memory.
pub fn view_from_bytes(record: &ArtifactRecord, raw_bytes: Vec<u8>) -> Result<ArtifactView, StoreError> {
    let elements = match record.kind {
        ArtifactKind::Tabular => load_table(record, &raw_bytes)?,
        ArtifactKind::Tree => load_tree(record, &raw_bytes)?,
        ArtifactKind::Text | ArtifactKind::Theory => Vec::new(),
    };
    Ok(ArtifactView {
        artifact_id: record.id.clone(),
        kind: record.kind,
        elements,
        raw_bytes,
    })
}

fn load_table(record: &ArtifactRecord, bytes: &[u8]) -> Result<Vec<Arc<Element>>, StoreError> {
    let malformed = |message: String| StoreError::MalformedTable {
        artifact: record.id.clone(),
        message,
    };
    let row_type = record.metadata.get(ROW_TYPE_KEY).cloned().unwrap_or_else(|| {
        Path::new(&record.document_path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let fill_down: Vec<&str> = record
        .metadata
        .get(FILL_DOWN_KEY)
        .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    for column in &fill_down {
        if !headers.iter().any(|h| h == column) {
            return Err(malformed(format!("fillDown column {column} is not in the header")));
        }
    }

    let mut previous: Option<BTreeMap<String, Scalar>> = None;
    let mut elements = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| malformed(e.to_string()))?;
        let mut attributes: BTreeMap<String, Scalar> = headers
            .iter()
            .zip(row.iter())
            .map(|(h, cell)| (h.clone(), Scalar::Text(cell.to_string())))
            .collect();
        if let Some(prev) = &previous {
            for &column in &fill_down {
                if attributes.get(column) == Some(&Scalar::Text(String::new())) {
                    if let Some(v) = prev.get(column) {
                        attributes.insert(column.to_string(), v.clone());
                    }
                }
            }
        }
        previous = Some(attributes.clone());
        elements.push(Arc::new(Element {
            type_name: row_type.clone(),
            attributes,
            children: BTreeMap::new(),
        }));
    }
    Ok(elements)
}

fn load_tree(record: &ArtifactRecord, bytes: &[u8]) -> Result<Vec<Arc<Element>>, StoreError> {
    let malformed = |message: String| StoreError::MalformedTree {
        artifact: record.id.clone(),
        message,
    };
    let doc: Json = serde_json::from_slice(bytes).map_err(|e| malformed(e.to_string()))?;
    let mut elements = Vec::new();
    match &doc {
        Json::Object(map) if map.contains_key(TYPE_KEY) => {
            build_element(&doc, "$", &mut elements).map_err(malformed)?;
        }
        Json::Object(map) => {
            for (key, value) in map {
                collect_top_level(value, key, &mut elements).map_err(malformed)?;
            }
        }
        Json::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                collect_top_level(item, &format!("[{i}]"), &mut elements).map_err(malformed)?;
            }
        }
        _ => return Err(malformed("top level must be an object or array".into())),
    }
    Ok(elements)
}

fn collect_top_level(value: &Json, at: &str, out: &mut Vec<Arc<Element>>) -> Result<(), String> {
    match value {
        Json::Object(_) => build_element(value, at, out).map(|_| ()),
        Json::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                build_element(item, &format!("{at}[{i}]"), out)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Pre-order construction: the element's slot in `out` is reserved before its
/// children are built so document order is parent-first.
fn build_element(value: &Json, at: &str, out: &mut Vec<Arc<Element>>) -> Result<Arc<Element>, String> {
    let map = value
        .as_object()
        .ok_or_else(|| format!("{at}: expected an object"))?;
    let type_name = match map.get(TYPE_KEY) {
        Some(Json::String(t)) if !t.is_empty() => t.clone(),
        Some(_) => return Err(format!("{at}: {TYPE_KEY} must be a non-empty string")),
        None => return Err(format!("{at}: object has no {TYPE_KEY}")),
    };
    let slot = out.len();
    out.push(Arc::new(Element::new(type_name.clone())));

    let mut element = Element::new(type_name);
    for (key, value) in map {
        if key == TYPE_KEY {
            continue;
        }
        let path = format!("{at}.{key}");
        match value {
            Json::Null => {}
            Json::Bool(b) => {
                element.attributes.insert(key.clone(), Scalar::Boolean(*b));
            }
            Json::Number(n) => {
                let r = n.as_f64().ok_or_else(|| format!("{path}: number out of range"))?;
                element.attributes.insert(key.clone(), Scalar::Real(r));
            }
            Json::String(s) => {
                element.attributes.insert(key.clone(), Scalar::Text(s.clone()));
            }
            Json::Object(_) => {
                let child = build_element(value, &path, out)?;
                element.children.insert(key.clone(), Child::One(child));
            }
            Json::Array(items) => {
                let mut children = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    children.push(build_element(item, &format!("{path}[{i}]"), out)?);
                }
                element.children.insert(key.clone(), Child::Many(children));
            }
        }
    }
    let element = Arc::new(element);
    out[slot] = element.clone();
    Ok(element)
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn fingerprint(record: &ArtifactRecord, root: &Path) -> Result<Fingerprint, StoreError> {
    let bytes = read_document(record, root)?;
    Ok(Fingerprint {
        artifact_id: record.id.clone(),
        digest: digest_bytes(&bytes),
    })
}
