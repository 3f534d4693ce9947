//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::panic::{self, AssertUnwindSafe};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use caseforge::artifact_store::{load_artifact, view_from_bytes};
use caseforge::backend_service::{serve, ServiceConfig};
use caseforge::case_model::{check_wellformed, connector_permitted, ConnectorKind, FindingCode, NodeKind};
use caseforge::cql::{check_constraint, eval_query, parse_query, Value};
use caseforge::dsms::{record_line, run_monitor, runtime_document_bytes, Ingest, MonitorConfig, ObstacleReading};
use caseforge::evaluator::{ReasonCode, Status};
use caseforge::formal::{check_integrity, check_text, parse_formal, submit_to_backend, Severity, Statement};
use caseforge::impact::{impact_of, snapshot};
use caseforge::lre::bundle::{FMEDA_CSV, FMEDA_PATH, MACHINE_PATH, READING_PATH, SPFM_RULE, THEORY_PATH};
use caseforge::lre::{check_deadlock, EnvModel, LreMachine, State, DEFAULT_STATE_CAP};
use common::{changed_nodes, gen, naive, read_json, remove_transition, spfm_oracle, statuses, write_json, Bundle};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const GOLDEN_LRE: &str = include_str!("golden/lre_module.formal");

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("{what} took {elapsed:?}, limit {limit:?}"),
    )
}

fn criterion_1() -> Outcome {
    let bundle = Bundle::new();
    let record = bundle.case.artifact("FMEDA").unwrap();
    let start = Instant::now();
    let view = load_artifact(record, bundle.root()).map_err(|e| e.to_string())?;
    let value_rule = SPFM_RULE.replace("return spfm > 0.9;", "return spfm;");
    let spfm = match eval_query(&parse_query(&value_rule).unwrap(), &view) {
        Ok(Value::Real(r)) => r,
        other => return Err(format!("SPFM query gave {other:?}")),
    };
    let passed = check_constraint(&parse_query(SPFM_RULE).unwrap(), &view).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let oracle = spfm_oracle(FMEDA_CSV);
    check((spfm - 0.934109).abs() <= 1e-6, format!("SPFM {spfm} is not 0.934109 +- 1e-6"))?;
    check((spfm - oracle).abs() <= 1e-12, format!("SPFM {spfm} differs from oracle {oracle}"))?;
    check(passed, "SPFM constraint failed")?;
    within(elapsed, Duration::from_secs(1), "SPFM evaluation")?;
    Ok(format!("SPFM = {spfm:.6} (oracle {oracle:.6}), constraint passes, {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let bundle = Bundle::new();
    let record = bundle.case.artifact("Obstacle_reading").unwrap();
    let rule = parse_query(&record.constraints[0].body).unwrap();
    let run = |r: &ObstacleReading| -> Result<(bool, Duration), String> {
        let start = Instant::now();
        let view = view_from_bytes(record, runtime_document_bytes(r)).map_err(|e| e.to_string())?;
        let ok = check_constraint(&rule, &view).map_err(|e| e.to_string())?;
        Ok((ok, start.elapsed()))
    };
    type Field = fn(&mut ObstacleReading) -> &mut f64;
    let fields: [(&str, Field, f64, f64); 6] = [
        ("ns_rel_dist", |r| &mut r.ns_rel_dist, -50.0, 50.0),
        ("ew_rel_dist", |r| &mut r.ew_rel_dist, -50.0, 50.0),
        ("obs_depth", |r| &mut r.obs_depth, -10.0, 0.0),
        ("obs_ns_vel", |r| &mut r.obs_ns_vel, -5.0, 5.0),
        ("obs_ew_vel", |r| &mut r.obs_ew_vel, -5.0, 5.0),
        ("obs_roc", |r| &mut r.obs_roc, -5.0, 5.0),
    ];
    let (ok, t) = run(&ObstacleReading::default())?;
    check(ok, "all-zero reading fails")?;
    within(t, Duration::from_secs(1), "all-zero reading")?;
    let mut runs = 1;
    for (name, field, lo, hi) in fields {
        for (value, expected) in [(lo, true), (hi, true), (lo - 0.001, false), (hi + 0.001, false)] {
            let mut r = ObstacleReading::default();
            *field(&mut r) = value;
            let (ok, t) = run(&r)?;
            check(ok == expected, format!("{name} = {value}: expected pass={expected}, got {ok}"))?;
            within(t, Duration::from_secs(1), name)?;
            runs += 1;
        }
    }
    Ok(format!("{runs} readings classified as expected"))
}

/// Nodes above `node`: SupportedBy sources, plus away nodes referring to an
/// ancestor, transitively.
fn ancestors(case: &caseforge::case_model::AssuranceCase, node: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut todo = vec![node.to_string()];
    while let Some(n) = todo.pop() {
        let parents = case
            .modules
            .iter()
            .flat_map(|m| m.connectors.iter())
            .filter(|c| c.kind == ConnectorKind::SupportedBy && c.target == n)
            .map(|c| c.source.clone())
            .chain(
                case.nodes()
                    .filter(|a| a.away_target.as_ref().is_some_and(|t| t.node == n))
                    .map(|a| a.id.clone()),
            );
        for p in parents.collect::<Vec<_>>() {
            if out.insert(p.clone()) {
                todo.push(p);
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let bundle = Bundle::new();
    let start = Instant::now();
    let nominal = bundle.evaluate();

    let non_valid: BTreeSet<String> = statuses(&nominal)
        .into_iter()
        .filter(|(_, s)| *s != Status::Valid)
        .map(|(id, _)| id)
        .collect();
    let mut expected = ancestors(&bundle.case, "LRE.Validation");
    expected.insert("LRE.Validation".into());
    check(non_valid == expected, format!("non-valid nodes {non_valid:?}, expected {expected:?}"))?;
    let v = &nominal.verdicts["LRE.Validation"];
    check(
        v.status == Status::NeedsSupport && v.reasons.iter().any(|r| r.code == ReasonCode::R_UNDEVELOPED),
        format!("LRE.Validation verdict {v:?}"),
    )?;
    let needs_support: Vec<&String> = nominal
        .verdicts
        .values()
        .filter(|v| v.reasons.iter().any(|r| r.code == ReasonCode::R_UNDEVELOPED))
        .map(|v| &v.node_id)
        .collect();
    check(needs_support == ["LRE.Validation"], format!("undeveloped reasons at {needs_support:?}"))?;

    let machine = fs::read(bundle.path(MACHINE_PATH)).unwrap();
    remove_transition(bundle.root(), "t4");
    let mutated = bundle.evaluate();
    for id in ["Sn1", "C7_a", "C6_a", "AUV_G1"] {
        check(
            mutated.status_of(id) == Some(Status::Invalid),
            format!("without t4, {id} is {:?}", mutated.status_of(id)),
        )?;
    }
    check(!mutated.case_valid, "case still valid without t4")?;

    fs::write(bundle.path(MACHINE_PATH), machine).unwrap();
    let restored = bundle.evaluate();
    check(statuses(&restored) == statuses(&nominal), "restoring t4 did not restore verdicts")?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(2), "three evaluations")?;
    Ok(format!(
        "nominal non-valid {}; t4 removal flips Sn1, C7_a, C6_a, AUV_G1 to invalid; restore ok; {elapsed:?}",
        non_valid.len()
    ))
}

fn criterion_4() -> Outcome {
    let bundle = Bundle::new();
    let out = bundle.path("lre.formal");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_caseforge"))
        .arg("export-formal")
        .arg(bundle.path("case.json"))
        .args(["--module", "LRE_Argument", "-o"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    check(status.success(), format!("export-formal exited {status}"))?;
    let text = fs::read_to_string(&out).unwrap();
    check(text == GOLDEN_LRE, "export differs from golden document")?;
    check(
        text.contains("Inference I1 src <{@{ArtifactReference Sn3}}> tgt <{@{Claim C7_c}}>"),
        "golden lacks the I1 inference",
    )?;
    let doc = parse_formal(&text).map_err(|e| e.to_string())?;
    check(doc.render() == text, "render(parse(golden)) differs")?;
    check(parse_formal(&doc.render()).unwrap() == doc, "parse(render) differs")?;
    let diagnostics = check_integrity(&doc);
    check(diagnostics.ok, format!("integrity failed: {:?}", diagnostics.entries))?;
    let needs_support: BTreeSet<&str> = doc
        .statements
        .iter()
        .filter_map(|s| match s {
            Statement::Claim { name, declaration, .. }
                if *declaration == caseforge::case_model::Declaration::NeedsSupport =>
            {
                Some(name.as_str())
            }
            _ => None,
        })
        .collect();
    for e in &diagnostics.entries {
        check(
            e.severity == Severity::Warning && needs_support.contains(e.id.as_str()),
            format!("unexpected diagnostic {e:?}"),
        )?;
    }
    check(
        diagnostics.entries.len() == needs_support.len(),
        "not every needsSupport claim was warned about",
    )?;
    Ok(format!(
        "golden match, round trip ok, {} needsSupport warning(s) only",
        diagnostics.entries.len()
    ))
}

/// Damages one artifact document; returns a label and the document's path.
fn mutate(rng: &mut StdRng, bundle: &Bundle) -> (&'static str, PathBuf) {
    match rng.gen_range(0..5) {
        0 => {
            let path = bundle.path(FMEDA_PATH);
            let text = fs::read_to_string(&path).unwrap();
            let mut rows: Vec<Vec<String>> = text
                .lines()
                .map(|l| l.split(',').map(str::to_string).collect())
                .collect();
            let r = rng.gen_range(1..rows.len());
            let c = [1, 2, 5, 8].choose(rng).copied().unwrap();
            rows[r][c] = match c {
                2 | 5 => ["Yes", "No", ""].choose(rng).unwrap().to_string(),
                _ => format!("{}", rng.gen_range(0..200)),
            };
            let out: Vec<String> = rows.iter().map(|r| r.join(",")).collect();
            fs::write(&path, out.join("\n") + "\n").unwrap();
            ("FMEDA", path)
        }
        1 => {
            let path = bundle.path(MACHINE_PATH);
            let mut doc = read_json(&path);
            if rng.gen_bool(0.5) {
                let list = doc["transitions"].as_array_mut().unwrap();
                let i = rng.gen_range(0..list.len());
                list.remove(i);
            } else {
                let states = doc["states"].as_array_mut().unwrap();
                let i = rng.gen_range(0..states.len());
                if let Some(a) = states[i]["entry"].as_array_mut().and_then(|e| e.first_mut()) {
                    a["value"] = serde_json::json!([0.0, 0.1, 0.5, 1.0][rng.gen_range(0..4)]);
                }
            }
            write_json(&path, &doc);
            ("LRE machine", path)
        }
        2 => {
            let path = bundle.path(READING_PATH);
            let mut doc = read_json(&path);
            let field = ["ns_rel_dist", "ew_rel_dist", "obs_depth", "obs_ns_vel", "obs_ew_vel", "obs_roc"]
                .choose(rng)
                .unwrap();
            doc["reading"][field] = serde_json::json!(rng.gen_range(-60.0..60.0));
            write_json(&path, &doc);
            ("reading", path)
        }
        3 => {
            let path = bundle.path(THEORY_PATH);
            let text = fs::read_to_string(&path).unwrap();
            let mutated = if rng.gen_bool(0.5) {
                text.replace("= holds", "= fails")
            } else {
                text.replacen("<{", "<(", 1)
            };
            fs::write(&path, mutated).unwrap();
            ("theory", path)
        }
        _ => {
            let ids = ["AUV_Architecture", "Operator_Procedures", "Autopilot_Specification"];
            let record = bundle.case.artifact(ids.choose(rng).unwrap()).unwrap();
            let path = bundle.path(&record.document_path);
            if rng.gen_bool(0.5) {
                let mut f = fs::OpenOptions::new().append(true).open(&path).unwrap();
                writeln!(f, "revision {}", rng.gen::<u32>()).unwrap();
            } else {
                fs::remove_file(&path).unwrap();
            }
            ("text", path)
        }
    }
}

fn criterion_5() -> Outcome {
    let bundle = Bundle::new();
    let start = Instant::now();
    let baseline = snapshot(&bundle.case, bundle.root()).map_err(|e| e.to_string())?;
    let nominal = bundle.evaluate();
    let originals: BTreeMap<PathBuf, Vec<u8>> = bundle
        .case
        .artifacts()
        .map(|a| bundle.path(&a.document_path))
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let mut flips = 0;
    for round in 0..200 {
        let (kind, touched) = mutate(&mut rng, &bundle);
        let after = bundle.evaluate();
        let changed = changed_nodes(&nominal, &after);
        let report = match impact_of(&bundle.case, &baseline, bundle.root()) {
            Ok(r) => r,
            Err(e) => return Err(format!("round {round} ({kind}): impact failed: {e}")),
        };
        let missing: Vec<&String> = changed.iter().filter(|n| !report.impacted_nodes.contains(n)).collect();
        check(
            missing.is_empty(),
            format!("round {round} ({kind}): verdict changed outside impactedNodes: {missing:?}"),
        )?;
        if !changed.is_empty() {
            flips += 1;
        }
        fs::write(&touched, &originals[&touched]).unwrap();
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60), "200 mutations")?;
    Ok(format!("200 mutations, {flips} changed verdicts, all inside impactedNodes; {elapsed:?}"))
}

fn criterion_6() -> Outcome {
    const RECORDS: u64 = 1000;
    const BAD: u64 = 500;
    const INTERVAL_MS: u64 = 50;
    let bound = Duration::from_millis(3 * 2 * INTERVAL_MS);

    let bundle = Bundle::new();
    let feed = bundle.path("feed.ndjson");
    fs::write(&feed, b"").unwrap();
    let mut config = MonitorConfig::new(Ingest::FileTail(feed.clone()), bundle.path("status.json"), bundle.root());
    config.interval_ms = INTERVAL_MS;
    let handle = run_monitor(&bundle.case, config).map_err(|e| e.to_string())?;
    let updates = handle.subscribe();

    let (written_tx, written_rx) = mpsc::channel();
    let writer = thread::spawn(move || {
        let mut f = fs::OpenOptions::new().append(true).open(&feed).unwrap();
        let mut next = Instant::now();
        for seq in 1..=RECORDS {
            let mut reading = ObstacleReading::default();
            if seq == BAD {
                reading.obs_depth = 0.001;
            }
            f.write_all(record_line(seq, &reading).as_bytes()).unwrap();
            f.write_all(b"\n").unwrap();
            f.flush().unwrap();
            if seq == BAD {
                written_tx.send(Instant::now()).unwrap();
            }
            next += Duration::from_millis(5);
            if let Some(wait) = next.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
    });

    let mut snapshots = Vec::new();
    let done_at = Instant::now() + Duration::from_millis(5 * RECORDS + 1000);
    while Instant::now() < done_at {
        if let Ok(s) = updates.recv_timeout(Duration::from_millis(20)) {
            let last = s.last_seq;
            snapshots.push((Instant::now(), s));
            if last == RECORDS && snapshots.last().is_some_and(|(_, s)| s.case_valid) {
                break;
            }
        }
    }
    writer.join().map_err(|_| "writer panicked".to_string())?;
    handle.stop();
    let bad_written = written_rx.recv().map_err(|e| e.to_string())?;

    let (seen_at, failing) = snapshots
        .iter()
        .find(|(_, s)| s.last_seq >= BAD && !s.case_valid)
        .ok_or("no snapshot reported the out-of-range record")?;
    check(
        failing.failed_nodes.iter().any(|n| n == "Sensor.Sn2"),
        format!("failing snapshot names {:?}", failing.failed_nodes),
    )?;
    let latency = seen_at.saturating_duration_since(bad_written);
    check(latency <= bound, format!("failure reported after {latency:?}, bound {bound:?}"))?;
    let recovered = snapshots
        .iter()
        .any(|(_, s)| s.last_seq > BAD && s.case_valid && s.evaluation_count > failing.evaluation_count);
    check(recovered, "validity was not restored after in-range records")?;
    let last = &snapshots.last().ok_or("no snapshots")?.1;
    check(last.last_seq == RECORDS && last.case_valid, format!("final snapshot {last:?}"))?;
    Ok(format!(
        "failure reported {latency:?} after ingestion (bound {bound:?}), validity restored, {} snapshots",
        snapshots.len()
    ))
}

fn criterion_7() -> Outcome {
    let nominal = LreMachine::nominal();
    let envs = EnvModel::default().envs(&nominal);
    let start = Instant::now();
    let r = check_deadlock(&nominal, &envs, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(r.deadlock_free, "nominal machine deadlocks")?;
    check(
        r.states_explored > 0 && r.states_explored < 100_000,
        format!("statesExplored = {}", r.states_explored),
    )?;
    within(elapsed, Duration::from_secs(5), "nominal deadlock check")?;

    let mut sink = nominal.clone();
    sink.transitions.retain(|t| t.source != State::CAM);
    let s = check_deadlock(&sink, &EnvModel::default().envs(&sink), DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
    check(!s.deadlock_free, "CAM sink reported deadlock free")?;
    let witness = s.witness.ok_or("no witness for CAM sink")?;
    check(witness.last().map(|c| c.state) == Some(State::CAM), "witness does not end in CAM")?;

    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    for round in 0..300 {
        let m = gen::machine(&mut rng);
        let envs = gen::envs(&mut rng);
        let got = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
        let want = naive::deadlock_free(&m, &envs);
        check(got.deadlock_free == want, format!("round {round}: checker {} vs naive {want}", got.deadlock_free))?;
        if let Some(w) = got.witness {
            let last = w.last().unwrap().state;
            check(naive::stuck(&m, last, &envs), format!("round {round}: witness ends in live state"))?;
            check(w[0].state == m.initial, format!("round {round}: witness does not start initially"))?;
            for pair in w.windows(2) {
                let next = naive::successor(&m, pair[0].state, &pair[0].env, pair[0].event);
                check(next == pair[1].state, format!("round {round}: witness step is not a machine step"))?;
            }
        }
    }
    Ok(format!(
        "nominal deadlock free, {} configurations in {elapsed:?}; CAM sink witness of length {}; 300 small machines agree with the naive explorer",
        r.states_explored,
        witness.len()
    ))
}

/// The connector rules, restated as data.
fn matrix_oracle() -> BTreeMap<(ConnectorKind, NodeKind, NodeKind), bool> {
    use NodeKind::*;
    let supported_targets_from_goal = [Goal, Strategy, Solution, AwayGoal, AwaySolution];
    let supported_targets_from_strategy = [Goal, AwayGoal, Solution, AwaySolution];
    let context_sources = [Goal, AwayGoal, Strategy];
    let context_targets = [Context, Assumption, Justification, AwayContext];
    let mut table = BTreeMap::new();
    for s in NodeKind::ALL {
        for t in NodeKind::ALL {
            let supported = match s {
                Goal | AwayGoal => supported_targets_from_goal.contains(&t),
                Strategy => supported_targets_from_strategy.contains(&t),
                _ => false,
            };
            table.insert((ConnectorKind::SupportedBy, s, t), supported);
            table.insert(
                (ConnectorKind::InContextOf, s, t),
                context_sources.contains(&s) && context_targets.contains(&t),
            );
        }
    }
    table
}

fn criterion_8() -> Outcome {
    use caseforge::case_model::{ArgumentModule, ArgumentNode, AssuranceCase, Connector};
    let oracle = matrix_oracle();
    let mut accepted = 0;
    for (&(kind, s, t), &want) in &oracle {
        check(
            connector_permitted(kind, s, t) == want,
            format!("{kind:?} {s:?} -> {t:?}: expected {want}"),
        )?;
        // The same verdict through the well-formedness check of a two-node case.
        let mut source = ArgumentNode::new("S", s, "s");
        let mut target = ArgumentNode::new("T", t, "t");
        for n in [&mut source, &mut target] {
            if n.kind.is_away() {
                *n = n.clone().away_to("Other", "X");
            }
        }
        let mut m = ArgumentModule::new("M");
        m.nodes = vec![source, target];
        m.connectors = vec![Connector { id: "k".into(), kind, source: "S".into(), target: "T".into() }];
        let mut case = AssuranceCase::new("matrix");
        case.modules = vec![m];
        let flagged = check_wellformed(&case)
            .iter()
            .any(|f| f.code == FindingCode::E_CONN_TYPE && f.subject_id == "k");
        check(flagged != want, format!("{kind:?} {s:?} -> {t:?}: well-formedness disagrees"))?;
        accepted += want as usize;
    }
    check(oracle.len() == 2 * 9 * 9, "matrix is not total")?;

    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    for round in 0..200 {
        let n = rng.gen_range(2..15);
        let mut m = ArgumentModule::new("M");
        m.nodes = (0..n).map(|i| ArgumentNode::new(format!("G{i}"), NodeKind::Goal, "g")).collect();
        for j in 1..n {
            let i = rng.gen_range(0..j);
            m.connectors.push(Connector::supported_by(format!("e{j}"), format!("G{i}"), format!("G{j}")));
        }
        for _ in 0..rng.gen_range(0..n) {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i < j {
                let id = format!("x{}", m.connectors.len());
                m.connectors.push(Connector::supported_by(id, format!("G{i}"), format!("G{j}")));
            }
        }
        let mut case = AssuranceCase::new("dag");
        case.modules = vec![m.clone()];
        check(
            !check_wellformed(&case).iter().any(|f| f.code == FindingCode::E_CYCLE),
            format!("round {round}: acyclic graph flagged"),
        )?;
        // Back edge from a descendant to one of its ancestors along the spine.
        let j = rng.gen_range(1..n);
        let mut ancestor = j;
        while let Some(c) = m.connectors.iter().find(|c| c.target == format!("G{ancestor}") && c.id.starts_with('e')) {
            ancestor = c.source[1..].parse().unwrap();
            if rng.gen_bool(0.5) {
                break;
            }
        }
        m.connectors.push(Connector::supported_by("back", format!("G{j}"), format!("G{ancestor}")));
        case.modules = vec![m];
        check(
            check_wellformed(&case).iter().any(|f| f.code == FindingCode::E_CYCLE),
            format!("round {round}: back edge G{j} -> G{ancestor} not flagged"),
        )?;
    }
    Ok(format!("{} triples ({accepted} accepted) match; 200 DAG + back-edge cases flagged", oracle.len()))
}

fn criterion_9() -> Outcome {
    let service = serve(ServiceConfig::new("127.0.0.1:0")).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(0x5eed_0009);
    let mut failing = 0;
    for round in 0..50 {
        let text = gen::formal_text(&mut rng);
        let local = check_text(&text);
        let remote = submit_to_backend(&service.url(), &text).map_err(|e| format!("round {round}: {e}"))?;
        check(remote == local, format!("round {round}: remote {remote:?} vs local {local:?}"))?;
        failing += !local.ok as usize;
    }
    service.stop();
    Ok(format!("50 documents ({failing} failing checks) identical remote and local"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("SPFM reproduction", criterion_1),
        ("obstacle reading range semantics", criterion_2),
        ("evaluation propagation on the AUV bundle", criterion_3),
        ("formal export golden document", criterion_4),
        ("impact soundness under random mutation", criterion_5),
        ("runtime monitor latency", criterion_6),
        ("deadlock checker", criterion_7),
        ("well-formedness matrix and cycles", criterion_8),
        ("client/server equivalence", criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
