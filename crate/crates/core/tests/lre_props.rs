mod common;

use caseforge::artifact_store::{load_artifact, view_from_bytes};
use caseforge::case_model::{ArtifactKind, ArtifactRecord};
use caseforge::cql::{check_constraint, parse_query};
use caseforge::lre::bundle::{HCM_ENTRY_RULE, HCM_TRANSITIONS_RULE, MACHINE_PATH};
use caseforge::lre::{
    check_deadlock, machine_from_view, EnvModel, Event, LreMachine, State, DEFAULT_STATE_CAP, DeadlockError,
};
use common::{gen, naive, Bundle};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn machine_record() -> ArtifactRecord {
    ArtifactRecord::new("LRE_Model", ArtifactKind::Tree, "machine.json")
}

fn offered() -> Vec<Option<Event>> {
    std::iter::once(None).chain(Event::ALL.into_iter().map(Some)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn machine_document_round_trips_with_identical_steps(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = gen::machine(&mut rng);
        let envs = gen::envs(&mut rng);
        let view = view_from_bytes(&machine_record(), m.to_document_bytes()).unwrap();
        let back = machine_from_view(&view).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_document_bytes(), m.to_document_bytes());
        for &state in &m.states {
            for env in &envs {
                for event in offered() {
                    prop_assert_eq!(back.step(state, env, event), m.step(state, env, event));
                    for t in m.transitions.iter().filter(|t| t.source == state) {
                        prop_assert_eq!(back.guard_holds(back.transition(&t.id).unwrap(), env), m.guard_holds(t, env));
                    }
                }
            }
        }
    }

    #[test]
    fn deadlock_check_is_deterministic_and_matches_brute_force(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = gen::machine(&mut rng);
        let envs = gen::envs(&mut rng);
        let first = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).unwrap();
        let second = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first.deadlock_free, naive::deadlock_free(&m, &envs));
        prop_assert_eq!(first.deadlock_free, first.witness.is_none());
        prop_assert!(first.states_explored <= m.states.len() * envs.len() * offered().len());
        if let Some(w) = first.witness {
            prop_assert_eq!(w[0].state, m.initial);
            prop_assert!(naive::stuck(&m, w.last().unwrap().state, &envs));
            for pair in w.windows(2) {
                prop_assert_eq!(naive::successor(&m, pair[0].state, &pair[0].env, pair[0].event), pair[1].state);
            }
        }
    }
}

#[test]
fn nominal_machine_is_deadlock_free_and_its_document_satisfies_the_rules() {
    let bundle = Bundle::new();
    let record = bundle.case.artifacts().find(|a| a.document_path == MACHINE_PATH).unwrap().clone();
    let view = load_artifact(&record, bundle.root()).unwrap();
    let m = machine_from_view(&view).unwrap();
    assert_eq!(m, LreMachine::nominal());
    for rule in [HCM_TRANSITIONS_RULE, HCM_ENTRY_RULE] {
        assert_eq!(check_constraint(&parse_query(rule).unwrap(), &view), Ok(true));
    }
    let envs = EnvModel::default().envs(&m);
    let r = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).unwrap();
    assert!(r.deadlock_free);
    assert!(r.states_explored > 0);
    assert_eq!(naive::deadlock_free(&m, &envs), r.deadlock_free);
}

#[test]
fn exceeding_the_cap_is_inconclusive() {
    let m = LreMachine::nominal();
    let envs = EnvModel::default().envs(&m);
    assert_eq!(check_deadlock(&m, &envs, 10), Err(DeadlockError::Inconclusive { cap: 10 }));
}

#[test]
fn cam_sink_yields_a_witness() {
    let mut m = LreMachine::nominal();
    m.transitions.retain(|t| t.source != State::CAM);
    let envs = EnvModel::default().envs(&m);
    let r = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).unwrap();
    assert!(!r.deadlock_free);
    let w = r.witness.unwrap();
    assert_eq!(w.last().unwrap().state, State::CAM);
    assert_eq!(w[0].state, m.initial);
}
