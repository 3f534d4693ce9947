#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use caseforge::case_model::{parse_case, AssuranceCase};
use caseforge::evaluator::{evaluate_case, EvaluationReport, Status};
use caseforge::lre::bundle::{CASE_FILE, MACHINE_PATH};
use caseforge::lre::generate_bundle;
use serde_json::Value as Json;
use tempfile::TempDir;

/// A freshly generated AUV bundle in its own temporary directory.
pub struct Bundle {
    pub dir: TempDir,
    pub case: AssuranceCase,
}

impl Bundle {
    pub fn new() -> Bundle {
        let dir = tempfile::tempdir().expect("tempdir");
        generate_bundle(dir.path()).expect("bundle");
        let case = parse_case(&fs::read(dir.path().join(CASE_FILE)).unwrap()).expect("case parses");
        Bundle { dir, case }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn evaluate(&self) -> EvaluationReport {
        evaluate_case(&self.case, self.root(), None).expect("bundle evaluates")
    }
}

pub fn statuses(report: &EvaluationReport) -> BTreeMap<String, Status> {
    report
        .verdicts
        .iter()
        .map(|(id, v)| (id.clone(), v.status))
        .collect()
}

/// Nodes whose status differs between two reports.
pub fn changed_nodes(a: &EvaluationReport, b: &EvaluationReport) -> Vec<String> {
    let (sa, sb) = (statuses(a), statuses(b));
    sa.keys()
        .chain(sb.keys())
        .filter(|id| sa.get(*id) != sb.get(*id))
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn read_json(path: &Path) -> Json {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

pub fn write_json(path: &Path, value: &Json) {
    fs::write(path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
}

/// Drops the named transition from the machine document of a bundle.
pub fn remove_transition(root: &Path, name: &str) {
    let path = root.join(MACHINE_PATH);
    let mut doc = read_json(&path);
    let list = doc["transitions"].as_array_mut().expect("transitions");
    let before = list.len();
    list.retain(|t| t["name"] != name);
    assert_eq!(list.len() + 1, before, "transition {name} not found");
    write_json(&path, &doc);
}

/// SPFM computed straight from the CSV text: safety-related failure rates
/// in the denominator, SPF/RF of goal-violating rows in the numerator.
pub fn spfm_oracle(csv: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (rate, sr, sgv, spf) = (col("FailureRate"), col("SafetyRelated"), col("SafetyGoalViolation"), col("SPF_RF"));
    let mut total = 0.0;
    let mut violating = 0.0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[sr] == "Yes" {
            total += cells[rate].parse::<f64>().unwrap();
        }
        if cells[sgv] == "Yes" {
            violating += cells[spf].parse::<f64>().unwrap();
        }
    }
    1.0 - violating / total
}

pub mod gen {
    use std::collections::BTreeMap;

    use caseforge::case_model::{
        connector_permitted, ArgumentModule, ArgumentNode, ArtifactKind, ArtifactPackage, ArtifactRecord,
        AssuranceCase, Connector, ConnectorKind, Declaration, NodeKind,
    };
    use caseforge::evaluator::{ArtifactResult, ConstraintOutcome};
    use caseforge::lre::{CmpOp, DistFn, Event, Expr, LreEnv, LreMachine, Obstacle, State, Transition};
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    pub const CONSTRAINT: &str = "c";

    /// A single-module case over a random DAG whose root goal is public.
    /// Solutions cite artifacts `A0..`; each artifact has one constraint.
    pub fn module_case(rng: &mut StdRng, size: usize, artifacts: usize) -> AssuranceCase {
        use NodeKind::*;
        let kinds = [Goal, Goal, Strategy, Solution, Solution, Context, Assumption, Justification];
        let mut nodes = vec![ArgumentNode::new("N0", Goal, "root claim").public()];
        for i in 1..size.max(2) {
            let kind = *kinds.choose(rng).unwrap();
            let mut n = ArgumentNode::new(format!("N{i}"), kind, format!("node {i}"));
            match kind {
                Solution if artifacts > 0 => n = n.citing(format!("A{}", rng.gen_range(0..artifacts))),
                Context | Assumption | Justification if rng.gen_bool(0.3) => n = n.declared(Declaration::Assumed),
                Goal if rng.gen_bool(0.15) => n = n.declared(Declaration::Axiomatic),
                _ => {}
            }
            nodes.push(n);
        }
        let mut connectors = Vec::new();
        let mut has_parent = vec![false; nodes.len()];
        for j in 1..nodes.len() {
            let mut parents: Vec<usize> = (0..j).filter(|&i| i == 0 || has_parent[i]).collect();
            parents.shuffle(rng);
            // A strategy is one inference, so it hangs under exactly one claim.
            let wanted = if nodes[j].kind == Strategy { 1 } else { rng.gen_range(1..=2) };
            let mut added = 0;
            for &i in &parents {
                if added == wanted {
                    break;
                }
                let kind = if nodes[j].kind.is_contextual() {
                    ConnectorKind::InContextOf
                } else {
                    ConnectorKind::SupportedBy
                };
                if connector_permitted(kind, nodes[i].kind, nodes[j].kind) {
                    let id = format!("k{}", connectors.len());
                    connectors.push(Connector {
                        id,
                        kind,
                        source: nodes[i].id.clone(),
                        target: nodes[j].id.clone(),
                    });
                    has_parent[j] = true;
                    added += 1;
                }
            }
        }
        // Nodes left without a permitted parent are dropped.
        let keep: Vec<bool> = has_parent.iter().enumerate().map(|(i, p)| i == 0 || *p).collect();
        let mut nodes: Vec<ArgumentNode> = nodes
            .into_iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(n, _)| n)
            .collect();
        // Goals and strategies without supporters are marked undeveloped
        // half of the time.
        for n in nodes.iter_mut() {
            let supported = connectors
                .iter()
                .any(|c| c.source == n.id && c.kind == ConnectorKind::SupportedBy);
            if !supported && n.kind.may_be_undeveloped() && n.declaration.is_none() && rng.gen_bool(0.5) {
                n.undeveloped = true;
            }
        }
        let mut module = ArgumentModule::new("M");
        module.nodes = nodes;
        module.connectors = connectors;
        let mut case = AssuranceCase::new("random");
        case.modules = vec![module];
        case.artifact_packages = vec![ArtifactPackage {
            id: "P".into(),
            artifacts: (0..artifacts)
                .map(|i| ArtifactRecord::new(format!("A{i}"), ArtifactKind::Text, format!("a{i}.txt")))
                .collect(),
        }];
        case
    }

    pub fn results(outcomes: &[bool]) -> BTreeMap<String, ArtifactResult> {
        outcomes
            .iter()
            .enumerate()
            .map(|(i, ok)| {
                let mut r = ArtifactResult::new();
                r.insert(CONSTRAINT.into(), ConstraintOutcome::Checked(*ok));
                (format!("A{i}"), r)
            })
            .collect()
    }

    /// Formal text exported from a random module, then possibly damaged.
    pub fn formal_text(rng: &mut StdRng) -> String {
        let size = rng.gen_range(2..12);
        let case = module_case(rng, size, 2);
        let (_, text) = caseforge::formal::export_module(&case, "M").expect("exports");
        corrupt(rng, &text)
    }

    pub fn corrupt(rng: &mut StdRng, text: &str) -> String {
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let pick = rng.gen_range(0..lines.len());
        match rng.gen_range(0..8) {
            0 => {}
            1 => {
                lines.remove(pick);
            }
            2 => {
                let l = lines[pick].clone();
                lines.push(l);
            }
            3 => lines[pick] = lines[pick].replacen("@{Claim N", "@{Claim Missing", 1),
            4 => lines[pick] = lines[pick].replacen("@{Claim", "@{ArtifactReference", 1),
            5 => lines[pick] = lines[pick].replacen("<{", "<(", 1).replacen("<<", "<", 1),
            6 => lines.push("Inference loop src <{@{Claim N0}}> tgt <{@{Claim N0}}> <<N0 supports itself.>>".into()),
            _ => lines.push(format!(
                "(* verdict: random_property = {}; synthetic *)",
                if rng.gen_bool(0.5) { "holds" } else { "fails" }
            )),
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    fn guard(rng: &mut StdRng) -> Option<Expr> {
        let atom = |rng: &mut StdRng| -> Expr {
            match rng.gen_range(0..5) {
                0 => Expr::var("inOPEZ"),
                1 => Expr::not(Expr::var("inOPEZ")),
                2 => Expr::cmp(
                    *CmpOp::ALL.choose(rng).unwrap(),
                    Expr::var(["vel", "hvel"][rng.gen_range(0..2)]),
                    Expr::Num([0.0, 0.1, 0.5, 1.0][rng.gen_range(0..4)]),
                ),
                3 => Expr::cmp(
                    *CmpOp::ALL.choose(rng).unwrap(),
                    Expr::call(*DistFn::ALL.choose(rng).unwrap(), *Obstacle::ALL.choose(rng).unwrap()),
                    Expr::constant(["StaticObsHorizDist", "CDA", "MinSafeDist"][rng.gen_range(0..3)]),
                ),
                _ => Expr::Bool(rng.gen_bool(0.5)),
            }
        };
        match rng.gen_range(0..4) {
            0 => None,
            1 => Some(Expr::and(atom(rng), atom(rng))),
            2 => Some(Expr::or(atom(rng), atom(rng))),
            _ => Some(atom(rng)),
        }
    }

    /// A deterministic machine: per source state, triggers are distinct and
    /// there is at most one untriggered transition.
    pub fn machine(rng: &mut StdRng) -> LreMachine {
        let mut m = LreMachine::empty();
        let mut states = State::ALL.to_vec();
        states.shuffle(rng);
        states.truncate(rng.gen_range(1..=4));
        m.initial = states[0];
        m.states = states.clone();
        let mut n = 0;
        for &source in &states {
            let mut triggers: Vec<Option<Event>> = std::iter::once(None).chain(Event::ALL.into_iter().map(Some)).collect();
            triggers.shuffle(rng);
            for trigger in triggers.into_iter().take(rng.gen_range(0..=3)) {
                n += 1;
                m.transitions.push(Transition {
                    id: format!("t{n}"),
                    source,
                    target: *states.choose(rng).unwrap(),
                    trigger,
                    guard: guard(rng),
                    actions: Vec::new(),
                });
            }
        }
        m
    }

    pub fn envs(rng: &mut StdRng) -> Vec<LreEnv> {
        let count = rng.gen_range(1..=8);
        let values = [0.0, 0.1, 0.3, 1.0, 8.0];
        (0..count)
            .map(|_| {
                let mut e = LreEnv::calm(*values.choose(rng).unwrap());
                e.vel = *values.choose(rng).unwrap();
                e.hvel = *values.choose(rng).unwrap();
                e.in_opez = rng.gen_bool(0.5);
                for f in DistFn::ALL {
                    for o in Obstacle::ALL {
                        e.set_distance(f, o, *values.choose(rng).unwrap());
                    }
                }
                e
            })
            .collect()
    }
}

pub mod naive {
    use std::collections::BTreeSet;

    use caseforge::lre::{Event, LreEnv, LreMachine, State};

    fn offered() -> Vec<Option<Event>> {
        let mut v = vec![None];
        v.extend(Event::ALL.into_iter().map(Some));
        v
    }

    fn fires(m: &LreMachine, state: State, env: &LreEnv, event: Option<Event>) -> Vec<State> {
        let mut plain = Vec::new();
        let mut triggered = Vec::new();
        for t in &m.transitions {
            if t.source != state || !m.guard_holds(t, env).unwrap() {
                continue;
            }
            match t.trigger {
                None => plain.push(t.target),
                Some(e) if Some(e) == event => triggered.push(t.target),
                Some(_) => {}
            }
        }
        if plain.is_empty() {
            triggered
        } else {
            plain
        }
    }

    pub fn stuck(m: &LreMachine, state: State, envs: &[LreEnv]) -> bool {
        envs.iter()
            .all(|env| offered().into_iter().all(|ev| fires(m, state, env, ev).is_empty()))
    }

    /// Successor of one step; the machine stays put when nothing fires.
    pub fn successor(m: &LreMachine, state: State, env: &LreEnv, event: Option<Event>) -> State {
        match fires(m, state, env, event).as_slice() {
            [] => state,
            [only] => *only,
            _ => panic!("nondeterministic machine"),
        }
    }

    fn visit(m: &LreMachine, envs: &[LreEnv], state: State, seen: &mut BTreeSet<State>) {
        if !seen.insert(state) {
            return;
        }
        for env in envs {
            for ev in offered() {
                visit(m, envs, successor(m, state, env, ev), seen);
            }
        }
    }

    pub fn reachable(m: &LreMachine, envs: &[LreEnv]) -> BTreeSet<State> {
        let mut seen = BTreeSet::new();
        visit(m, envs, m.initial, &mut seen);
        seen
    }

    pub fn deadlock_free(m: &LreMachine, envs: &[LreEnv]) -> bool {
        reachable(m, envs).into_iter().all(|s| !stuck(m, s, envs))
    }
}
