mod common;

use std::collections::BTreeSet;
use std::fs;

use caseforge::case_model::ConnectorKind;
use caseforge::evaluator::propagate;
use caseforge::impact::{impact_of, impacted_by, snapshot};
use caseforge::lre::bundle::{FMEDA_PATH, READING_PATH};
use common::{gen, Bundle};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const ARTIFACTS: usize = 4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn impacted_nodes_are_closed_upward(seed in any::<u64>(), size in 1usize..30, seeds in prop::collection::btree_set(0usize..ARTIFACTS, 0..=ARTIFACTS)) {
        let mut rng = StdRng::seed_from_u64(seed);
        let case = gen::module_case(&mut rng, size, ARTIFACTS);
        let names: Vec<String> = seeds.iter().map(|i| format!("A{i}")).collect();
        let artifacts: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        let impacted = impacted_by(&case, &artifacts);
        let set: BTreeSet<&str> = impacted.iter().map(String::as_str).collect();
        prop_assert_eq!(set.len(), impacted.len());
        for c in case.modules[0].connectors.iter().filter(|c| c.kind == ConnectorKind::SupportedBy) {
            if set.contains(c.target.as_str()) {
                prop_assert!(set.contains(c.source.as_str()), "{} -> {}", c.source, c.target);
            }
        }
        for n in case.nodes().filter(|n| n.citations.iter().any(|a| artifacts.contains(a.as_str()))) {
            prop_assert!(set.contains(n.id.as_str()));
        }
        // Children come before their parents.
        let index = |id: &str| impacted.iter().position(|x| x == id);
        for c in case.modules[0].connectors.iter().filter(|c| c.kind == ConnectorKind::SupportedBy) {
            if let (Some(p), Some(ch)) = (index(&c.source), index(&c.target)) {
                prop_assert!(ch < p, "{} before {}", c.target, c.source);
            }
        }
    }

    #[test]
    fn verdict_changes_stay_inside_the_impact_set(
        seed in any::<u64>(),
        size in 1usize..30,
        outcomes in prop::collection::vec(any::<bool>(), ARTIFACTS),
        pick in 0usize..ARTIFACTS,
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let case = gen::module_case(&mut rng, size, ARTIFACTS);
        let before = propagate(&case, &gen::results(&outcomes));
        let mut flipped = outcomes;
        flipped[pick] = !flipped[pick];
        let after = propagate(&case, &gen::results(&flipped));
        let name = format!("A{pick}");
        let impacted: BTreeSet<String> = impacted_by(&case, &BTreeSet::from([name.as_str()])).into_iter().collect();
        for (id, v) in &before {
            if after[id] != *v {
                prop_assert!(impacted.contains(id), "{} changed but is not impacted", id);
            }
        }
    }
}

#[test]
fn bundle_edits_are_reported_per_artifact() {
    let bundle = Bundle::new();
    let baseline = snapshot(&bundle.case, bundle.root()).unwrap();
    let clean = impact_of(&bundle.case, &baseline, bundle.root()).unwrap();
    assert!(!clean.has_changes());

    let reading = bundle.path(READING_PATH);
    let original = fs::read(&reading).unwrap();
    let mut edited = original.clone();
    edited.push(b' ');
    fs::write(&reading, &edited).unwrap();
    let report = impact_of(&bundle.case, &baseline, bundle.root()).unwrap();
    assert_eq!(report.changed_artifacts, ["Obstacle_reading"]);
    fs::write(&reading, original).unwrap();

    fs::remove_file(bundle.path(FMEDA_PATH)).unwrap();
    let report = impact_of(&bundle.case, &baseline, bundle.root()).unwrap();
    assert_eq!(report.changed_artifacts, ["FMEDA"]);
    assert!(report.impacted_nodes.contains(&"Sensor.Sn1".to_string()));

    let mut pruned = bundle.case.clone();
    for package in &mut pruned.artifact_packages {
        package.artifacts.retain(|a| a.id != "FMEDA");
    }
    let report = impact_of(&pruned, &baseline, bundle.root()).unwrap();
    assert_eq!(report.removed_artifacts, ["FMEDA"]);
    assert!(report.changed_artifacts.is_empty());
}
