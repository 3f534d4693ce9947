use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::{parse_formal, BackendDiagnostics, DiagnosticEntry, FormalDocument, RefKind, Severity, Statement};
use crate::case_model::Declaration;

fn entry(id: &str, severity: Severity, message: String, line: Option<usize>) -> DiagnosticEntry {
    DiagnosticEntry {
        id: id.to_string(),
        severity,
        message,
        line,
    }
}

/// Logical integrity of a formal document.
///
/// Errors: duplicate names, references to missing or wrongly-kinded
/// statements, cycles among claims induced by inferences, failed machine
/// verdicts. Warnings: claims declared needsSupport, claims that nothing
/// supports (unless axiomatic, assumed, or used as a context), and machine
/// verdicts that hold.
pub fn check_integrity(doc: &FormalDocument) -> BackendDiagnostics {
    let mut entries = Vec::new();

    let mut by_name: HashMap<&str, &Statement> = HashMap::new();
    for (i, stmt) in doc.statements.iter().enumerate() {
        if by_name.insert(stmt.name(), stmt).is_some() {
            entries.push(entry(
                stmt.name(),
                Severity::Error,
                format!("duplicate statement name {}", stmt.name()),
                doc.line_of(i),
            ));
        }
    }
    // First declaration wins for reference resolution.
    let mut declared: HashMap<&str, &Statement> = HashMap::new();
    for stmt in &doc.statements {
        declared.entry(stmt.name()).or_insert(stmt);
    }

    let mut supported: HashSet<&str> = HashSet::new();
    let mut contextual: HashSet<&str> = HashSet::new();
    let mut claim_edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();

    for (i, stmt) in doc.statements.iter().enumerate() {
        for r in stmt.references() {
            match declared.get(r.name.as_str()) {
                None => entries.push(entry(
                    stmt.name(),
                    Severity::Error,
                    format!("{} references undeclared {} {}", stmt.name(), r.kind.keyword(), r.name),
                    doc.line_of(i),
                )),
                Some(target) if target.ref_kind() != Some(r.kind) => entries.push(entry(
                    stmt.name(),
                    Severity::Error,
                    format!(
                        "{} references {} as {}, but it is declared as {}",
                        stmt.name(),
                        r.name,
                        r.kind.keyword(),
                        target.ref_kind().map_or("Context", RefKind::keyword)
                    ),
                    doc.line_of(i),
                )),
                Some(_) => {}
            }
        }
        match stmt {
            Statement::Inference { sources, target, .. } => {
                supported.insert(&target.name);
                if target.kind == RefKind::Claim {
                    for s in sources.iter().filter(|s| s.kind == RefKind::Claim) {
                        claim_edges.entry(&s.name).or_default().push(&target.name);
                    }
                }
            }
            Statement::Context { source, .. } => {
                contextual.insert(&source.name);
            }
            _ => {}
        }
    }

    for cycle in claim_cycles(&claim_edges) {
        let first = cycle[0];
        entries.push(entry(
            first,
            Severity::Error,
            format!("inference cycle among claims: {}", cycle.join(" -> ")),
            None,
        ));
    }

    for (i, stmt) in doc.statements.iter().enumerate() {
        let Statement::Claim { name, declaration, .. } = stmt else {
            continue;
        };
        if *declaration == Declaration::NeedsSupport {
            entries.push(entry(
                name,
                Severity::Warning,
                format!("claim {name} needs support"),
                doc.line_of(i),
            ));
        } else if !declaration.discharges_support()
            && !supported.contains(name.as_str())
            && !contextual.contains(name.as_str())
        {
            entries.push(entry(
                name,
                Severity::Warning,
                format!("claim {name} is never the target of an inference"),
                doc.line_of(i),
            ));
        }
    }

    for (i, verdict) in doc.verdicts.iter().enumerate() {
        let id = format!("verdict:{}", verdict.property);
        let line = doc.verdict_lines.get(i).copied();
        if verdict.holds {
            entries.push(entry(
                &id,
                Severity::Warning,
                format!("machine verdict accepted: {} holds ({})", verdict.property, verdict.detail),
                line,
            ));
        } else {
            entries.push(entry(
                &id,
                Severity::Error,
                format!("machine verdict: {} fails ({})", verdict.property, verdict.detail),
                line,
            ));
        }
    }

    BackendDiagnostics::from_entries(entries)
}

/// Parses then checks. A syntax error is a failed check, not a transport
/// problem, so it comes back as an error entry.
pub fn check_text(text: &str) -> BackendDiagnostics {
    match parse_formal(text) {
        Ok(doc) => check_integrity(&doc),
        Err(e) => BackendDiagnostics::from_entries(vec![entry(
            "syntax",
            Severity::Error,
            format!("syntax error at {}:{}: {}", e.line, e.column, e.message),
            Some(e.line),
        )]),
    }
}

/// Strongly connected components with a cycle, each sorted, smallest first.
fn claim_cycles<'a>(edges: &BTreeMap<&'a str, Vec<&'a str>>) -> Vec<Vec<&'a str>> {
    struct Tarjan<'a, 'e> {
        edges: &'e BTreeMap<&'a str, Vec<&'a str>>,
        index: HashMap<&'a str, usize>,
        low: HashMap<&'a str, usize>,
        on_stack: HashSet<&'a str>,
        stack: Vec<&'a str>,
        next: usize,
        out: Vec<Vec<&'a str>>,
    }

    impl<'a> Tarjan<'a, '_> {
        fn visit(&mut self, v: &'a str) {
            self.index.insert(v, self.next);
            self.low.insert(v, self.next);
            self.next += 1;
            self.stack.push(v);
            self.on_stack.insert(v);
            let succ = self.edges.get(v).cloned().unwrap_or_default();
            for w in succ {
                if !self.index.contains_key(w) {
                    self.visit(w);
                    let lw = self.low[w];
                    let lv = self.low.get_mut(v).expect("visited");
                    *lv = (*lv).min(lw);
                } else if self.on_stack.contains(w) {
                    let iw = self.index[w];
                    let lv = self.low.get_mut(v).expect("visited");
                    *lv = (*lv).min(iw);
                }
            }
            if self.low[v] == self.index[v] {
                let mut component = Vec::new();
                loop {
                    let w = self.stack.pop().expect("non-empty");
                    self.on_stack.remove(w);
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                let self_loop = self.edges.get(v).is_some_and(|s| s.contains(&v));
                if component.len() > 1 || self_loop {
                    component.sort_unstable();
                    self.out.push(component);
                }
            }
        }
    }

    let nodes: BTreeSet<&str> = edges
        .iter()
        .flat_map(|(k, vs)| std::iter::once(*k).chain(vs.iter().copied()))
        .collect();
    let mut t = Tarjan {
        edges,
        index: HashMap::new(),
        low: HashMap::new(),
        on_stack: HashSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for n in nodes {
        if !t.index.contains_key(n) {
            t.visit(n);
        }
    }
    t.out.sort();
    t.out
}
