use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::{DistFn, Event, LreEnv, LreMachine, MachineError, Obstacle, State};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// A finite discretization of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    pub velocities: Vec<f64>,
    pub distances: Vec<f64>,
    pub in_opez: Vec<bool>,
}

impl Default for EnvModel {
    fn default() -> Self {
        EnvModel {
            velocities: vec![0.0, 0.1, 1.0],
            distances: vec![0.1, 0.3, 1.0, 8.0],
            in_opez: vec![false, true],
        }
    }
}

impl EnvModel {
    /// Grid points in lexicographic order. Only the distance pairs the
    /// machine's guards call vary; the others stay at the largest distance.
    pub fn envs(&self, machine: &LreMachine) -> Vec<LreEnv> {
        let mut calls = Vec::new();
        for t in &machine.transitions {
            if let Some(g) = &t.guard {
                g.calls(&mut calls);
            }
        }
        let pairs: Vec<(DistFn, Obstacle)> = calls.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let far = self.distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let base = LreEnv::calm(if far.is_finite() { far } else { 0.0 });

        let mut out = Vec::new();
        for &vel in &self.velocities {
            for &hvel in &self.velocities {
                for &in_opez in &self.in_opez {
                    let mut env = base;
                    env.vel = vel;
                    env.hvel = hvel;
                    env.in_opez = in_opez;
                    self.fill(&pairs, env, &mut out);
                }
            }
        }
        out
    }

    fn fill(&self, pairs: &[(DistFn, Obstacle)], env: LreEnv, out: &mut Vec<LreEnv>) {
        match pairs.split_first() {
            None => out.push(env),
            Some((&(f, o), rest)) => {
                for &d in &self.distances {
                    let mut e = env;
                    e.set_distance(f, o, d);
                    self.fill(rest, e, out);
                }
            }
        }
    }
}

/// Machine state together with the environment sample and offered event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Configuration {
    pub state: State,
    pub env: LreEnv,
    pub event: Option<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DeadlockResult {
    pub deadlock_free: bool,
    pub witness: Option<Vec<Configuration>>,
    pub states_explored: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeadlockError {
    #[error("inconclusive: state-space cap of {cap} configurations exceeded")]
    Inconclusive { cap: usize },
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn offered_events() -> Vec<Option<Event>> {
    std::iter::once(None).chain(Event::ALL.into_iter().map(Some)).collect()
}

/// Breadth-first search over (state, env, event) configurations from the
/// initial state. A configuration is stuck when its state has no transition
/// enabled under any environment sample and event. The first stuck
/// configuration in exploration order is returned with its path.
pub fn check_deadlock(machine: &LreMachine, envs: &[LreEnv], cap: usize) -> Result<DeadlockResult, DeadlockError> {
    let events = offered_events();
    let per_state = envs.len() * events.len();

    // Liveness depends only on the state, so it is computed once per state.
    let mut live = [None::<bool>; 4];
    let mut is_live = |state: State| -> Result<bool, MachineError> {
        let slot = &mut live[state as usize];
        if let Some(l) = *slot {
            return Ok(l);
        }
        let mut l = false;
        'search: for env in envs {
            for &event in &events {
                if !machine.enabled(state, env, event)?.is_empty() {
                    l = true;
                    break 'search;
                }
            }
        }
        *slot = Some(l);
        Ok(l)
    };

    // Configurations are stored in discovery order; `parent` indexes them.
    let mut configs: Vec<(Configuration, Option<usize>)> = Vec::new();
    let mut expanded = [false; 4];
    let mut queue = VecDeque::new();
    let mut enqueue_state = |state: State,
                             parent: Option<usize>,
                             configs: &mut Vec<(Configuration, Option<usize>)>,
                             queue: &mut VecDeque<usize>|
     -> Result<(), DeadlockError> {
        if expanded[state as usize] {
            return Ok(());
        }
        expanded[state as usize] = true;
        if configs.len() + per_state > cap {
            return Err(DeadlockError::Inconclusive { cap });
        }
        for env in envs {
            for &event in &events {
                queue.push_back(configs.len());
                configs.push((Configuration { state, env: *env, event }, parent));
            }
        }
        Ok(())
    };

    enqueue_state(machine.initial, None, &mut configs, &mut queue)?;
    if envs.is_empty() {
        return Ok(DeadlockResult {
            deadlock_free: true,
            witness: None,
            states_explored: 0,
        });
    }
    let mut explored = 0;
    while let Some(index) = queue.pop_front() {
        explored += 1;
        let (config, _) = configs[index];
        if !is_live(config.state)? {
            let mut path = Vec::new();
            let mut at = Some(index);
            while let Some(i) = at {
                path.push(configs[i].0);
                at = configs[i].1;
            }
            path.reverse();
            return Ok(DeadlockResult {
                deadlock_free: false,
                witness: Some(path),
                states_explored: explored,
            });
        }
        let next = machine.step(config.state, &config.env, config.event)?;
        enqueue_state(next.state, Some(index), &mut configs, &mut queue)?;
    }
    Ok(DeadlockResult {
        deadlock_free: true,
        witness: None,
        states_explored: explored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_size() {
        let m = LreMachine::nominal();
        assert_eq!(EnvModel::default().envs(&m).len(), 3 * 3 * 2 * 4 * 4 * 4);
    }

    #[test]
    fn empty_machine_witness_is_the_start() {
        let m = LreMachine::empty();
        let envs = EnvModel::default().envs(&m);
        let r = check_deadlock(&m, &envs, DEFAULT_STATE_CAP).unwrap();
        assert!(!r.deadlock_free);
        let w = r.witness.unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].state, State::OCM);
    }

    #[test]
    fn cap_gives_inconclusive() {
        let m = LreMachine::nominal();
        let envs = EnvModel::default().envs(&m);
        assert_eq!(
            check_deadlock(&m, &envs, 10).unwrap_err(),
            DeadlockError::Inconclusive { cap: 10 }
        );
    }
}
