//! The Last Response Engine fixture: an untimed interpreter for the LRE
//! state machine, an exhaustive deadlock checker, and the generator for the
//! AUV example bundle.

pub mod bundle;
pub mod deadlock;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::artifact_store::{ArtifactView, Child, Element, Scalar};

pub use bundle::{generate_bundle, BundleManifest};
pub use deadlock::{check_deadlock, Configuration, DeadlockError, DeadlockResult, EnvModel, DEFAULT_STATE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum State {
    OCM,
    MOM,
    HCM,
    CAM,
}

impl State {
    pub const ALL: [State; 4] = [State::OCM, State::MOM, State::HCM, State::CAM];

    pub fn name(self) -> &'static str {
        match self {
            State::OCM => "OCM",
            State::MOM => "MOM",
            State::HCM => "HCM",
            State::CAM => "CAM",
        }
    }

    pub fn from_name(name: &str) -> Option<State> {
        State::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Event {
    ReqVel,
    ReqHdng,
    #[serde(rename = "reqOCM")]
    ReqOCM,
    #[serde(rename = "reqMOM")]
    ReqMOM,
    #[serde(rename = "reqHCM")]
    ReqHCM,
    EndTask,
}

impl Event {
    pub const ALL: [Event; 6] = [
        Event::ReqVel,
        Event::ReqHdng,
        Event::ReqOCM,
        Event::ReqMOM,
        Event::ReqHCM,
        Event::EndTask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Event::ReqVel => "reqVel",
            Event::ReqHdng => "reqHdng",
            Event::ReqOCM => "reqOCM",
            Event::ReqMOM => "reqMOM",
            Event::ReqHCM => "reqHCM",
            Event::EndTask => "endTask",
        }
    }

    pub fn from_name(name: &str) -> Option<Event> {
        Event::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Output {
    AdvVel,
    AdvHdng,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::AdvVel => "advVel",
            Output::AdvHdng => "advHdng",
        }
    }

    pub fn from_name(name: &str) -> Option<Output> {
        match name {
            "advVel" => Some(Output::AdvVel),
            "advHdng" => Some(Output::AdvHdng),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Action {
    pub output: Output,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CmpOp {
    GreaterOrEqual,
    LessOrEqual,
    Greater,
    Less,
}

impl CmpOp {
    pub const ALL: [CmpOp; 4] = [CmpOp::GreaterOrEqual, CmpOp::LessOrEqual, CmpOp::Greater, CmpOp::Less];

    pub fn type_name(self) -> &'static str {
        match self {
            CmpOp::GreaterOrEqual => "GreaterOrEqual",
            CmpOp::LessOrEqual => "LessOrEqual",
            CmpOp::Greater => "Greater",
            CmpOp::Less => "Less",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::GreaterOrEqual => a >= b,
            CmpOp::LessOrEqual => a <= b,
            CmpOp::Greater => a > b,
            CmpOp::Less => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DistFn {
    Hdist,
    Vdist,
    Odist,
}

impl DistFn {
    pub const ALL: [DistFn; 3] = [DistFn::Hdist, DistFn::Vdist, DistFn::Odist];

    pub fn name(self) -> &'static str {
        match self {
            DistFn::Hdist => "hdist",
            DistFn::Vdist => "vdist",
            DistFn::Odist => "odist",
        }
    }

    pub fn from_name(name: &str) -> Option<DistFn> {
        DistFn::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Obstacle {
    Cdyn,
    Cstc,
}

impl Obstacle {
    pub const ALL: [Obstacle; 2] = [Obstacle::Cdyn, Obstacle::Cstc];

    pub fn name(self) -> &'static str {
        match self {
            Obstacle::Cdyn => "cdyn",
            Obstacle::Cstc => "cstc",
        }
    }

    pub fn from_name(name: &str) -> Option<Obstacle> {
        Obstacle::ALL.into_iter().find(|o| o.name() == name)
    }
}

/// Guard expression tree. Variables are `vel`, `hvel` (Real) and `inOPEZ`
/// (Boolean); constants are looked up in the machine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Var(String),
    Constant(String),
    Num(f64),
    Bool(bool),
    Call(DistFn, Obstacle),
}

impl Expr {
    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: Expr) -> Expr {
        Expr::Not(Box::new(a))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Expr {
        Expr::Constant(name.to_string())
    }

    pub fn call(f: DistFn, o: Obstacle) -> Expr {
        Expr::Call(f, o)
    }

    /// Folds over all `(function, obstacle)` pairs the expression calls.
    pub fn calls(&self, out: &mut Vec<(DistFn, Obstacle)>) {
        match self {
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) => {
                a.calls(out);
                b.calls(out);
            }
            Expr::Not(a) => a.calls(out),
            Expr::Call(f, o) => out.push((*f, *o)),
            _ => {}
        }
    }
}

pub const REAL_VARIABLES: [&str; 2] = ["vel", "hvel"];
pub const BOOL_VARIABLES: [&str; 1] = ["inOPEZ"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distances {
    pub cdyn: f64,
    pub cstc: f64,
}

impl Distances {
    pub fn uniform(d: f64) -> Self {
        Distances { cdyn: d, cstc: d }
    }

    pub fn get(&self, o: Obstacle) -> f64 {
        match o {
            Obstacle::Cdyn => self.cdyn,
            Obstacle::Cstc => self.cstc,
        }
    }

    pub fn set(&mut self, o: Obstacle, d: f64) {
        match o {
            Obstacle::Cdyn => self.cdyn = d,
            Obstacle::Cstc => self.cstc = d,
        }
    }
}

/// One sample of the sensed environment, with the distance functions
/// tabulated for the two tracked obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LreEnv {
    pub vel: f64,
    pub hvel: f64,
    #[serde(rename = "inOPEZ")]
    pub in_opez: bool,
    pub hdist: Distances,
    pub vdist: Distances,
    pub odist: Distances,
}

impl LreEnv {
    /// Stationary, outside any OPEZ, everything `far` away.
    pub fn calm(far: f64) -> Self {
        LreEnv {
            vel: 0.0,
            hvel: 0.0,
            in_opez: false,
            hdist: Distances::uniform(far),
            vdist: Distances::uniform(far),
            odist: Distances::uniform(far),
        }
    }

    pub fn distance(&self, f: DistFn, o: Obstacle) -> f64 {
        match f {
            DistFn::Hdist => self.hdist.get(o),
            DistFn::Vdist => self.vdist.get(o),
            DistFn::Odist => self.odist.get(o),
        }
    }

    pub fn set_distance(&mut self, f: DistFn, o: Obstacle, d: f64) {
        match f {
            DistFn::Hdist => self.hdist.set(o, d),
            DistFn::Vdist => self.vdist.set(o, d),
            DistFn::Odist => self.odist.set(o, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LreConstants {
    pub static_obs_horiz_dist: f64,
    pub static_obs_vert_dist: f64,
    pub min_safe_dist: f64,
    pub cda: f64,
}

impl Default for LreConstants {
    fn default() -> Self {
        LreConstants {
            static_obs_horiz_dist: 0.3,
            static_obs_vert_dist: 0.3,
            min_safe_dist: 0.3,
            cda: 7.5,
        }
    }
}

impl LreConstants {
    pub fn table(&self) -> BTreeMap<String, f64> {
        [
            ("StaticObsHorizDist", self.static_obs_horiz_dist),
            ("StaticObsVertDist", self.static_obs_vert_dist),
            ("MinSafeDist", self.min_safe_dist),
            ("CDA", self.cda),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub id: String,
    pub source: State,
    pub target: State,
    pub trigger: Option<Event>,
    pub guard: Option<Expr>,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LreMachine {
    pub states: Vec<State>,
    pub initial: State,
    pub transitions: Vec<Transition>,
    pub entry_actions: BTreeMap<State, Vec<Action>>,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MachineError {
    #[error("transition {transition}: {message}")]
    Guard { transition: String, message: String },
    #[error("transition {transition} connects undeclared state {state}")]
    UndeclaredState { transition: String, state: State },
    #[error("in {state}: transitions {} are enabled together", .transitions.join(", "))]
    Nondeterministic { state: State, transitions: Vec<String> },
    #[error("machine document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Val {
    Real(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: State,
    pub fired: Option<String>,
    pub outputs: Vec<Action>,
}

impl LreMachine {
    /// The machine of the AUV case study.
    pub fn nominal() -> Self {
        nominal_machine(LreConstants::default())
    }

    pub fn empty() -> Self {
        LreMachine {
            states: State::ALL.to_vec(),
            initial: State::OCM,
            transitions: Vec::new(),
            entry_actions: BTreeMap::new(),
            constants: LreConstants::default().table(),
        }
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    /// Checks that transitions connect declared states and guards use only
    /// declared variables, constants and functions with consistent types.
    pub fn validate(&self) -> Result<(), MachineError> {
        for t in &self.transitions {
            for s in [t.source, t.target] {
                if !self.states.contains(&s) {
                    return Err(MachineError::UndeclaredState {
                        transition: t.id.clone(),
                        state: s,
                    });
                }
            }
            if let Some(g) = &t.guard {
                match self.type_of(g) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(MachineError::Guard {
                            transition: t.id.clone(),
                            message: "guard is not Boolean".into(),
                        })
                    }
                    Err(message) => {
                        return Err(MachineError::Guard {
                            transition: t.id.clone(),
                            message,
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// `true` for Boolean, `false` for Real.
    fn type_of(&self, e: &Expr) -> Result<bool, String> {
        let want = |e: &Expr, boolean: bool| -> Result<(), String> {
            if self.type_of(e)? == boolean {
                Ok(())
            } else {
                Err(format!("operand {e:?} has the wrong type"))
            }
        };
        match e {
            Expr::And(a, b) | Expr::Or(a, b) => {
                want(a, true)?;
                want(b, true)?;
                Ok(true)
            }
            Expr::Not(a) => {
                want(a, true)?;
                Ok(true)
            }
            Expr::Cmp(_, a, b) => {
                want(a, false)?;
                want(b, false)?;
                Ok(true)
            }
            Expr::Var(v) if REAL_VARIABLES.contains(&v.as_str()) => Ok(false),
            Expr::Var(v) if BOOL_VARIABLES.contains(&v.as_str()) => Ok(true),
            Expr::Var(v) => Err(format!("undeclared variable {v}")),
            Expr::Constant(c) if self.constants.contains_key(c) => Ok(false),
            Expr::Constant(c) => Err(format!("undeclared constant {c}")),
            Expr::Num(_) | Expr::Call(..) => Ok(false),
            Expr::Bool(_) => Ok(true),
        }
    }

    fn eval(&self, e: &Expr, env: &LreEnv) -> Result<Val, String> {
        let boolean = |e: &Expr| match self.eval(e, env)? {
            Val::Bool(b) => Ok(b),
            Val::Real(_) => Err(format!("{e:?} is not Boolean")),
        };
        let real = |e: &Expr| match self.eval(e, env)? {
            Val::Real(r) => Ok(r),
            Val::Bool(_) => Err(format!("{e:?} is not Real")),
        };
        Ok(match e {
            Expr::And(a, b) => Val::Bool(boolean(a)? && boolean(b)?),
            Expr::Or(a, b) => Val::Bool(boolean(a)? || boolean(b)?),
            Expr::Not(a) => Val::Bool(!boolean(a)?),
            Expr::Cmp(op, a, b) => Val::Bool(op.apply(real(a)?, real(b)?)),
            Expr::Var(v) => match v.as_str() {
                "vel" => Val::Real(env.vel),
                "hvel" => Val::Real(env.hvel),
                "inOPEZ" => Val::Bool(env.in_opez),
                other => return Err(format!("undeclared variable {other}")),
            },
            Expr::Constant(c) => Val::Real(
                *self
                    .constants
                    .get(c)
                    .ok_or_else(|| format!("undeclared constant {c}"))?,
            ),
            Expr::Num(n) => Val::Real(*n),
            Expr::Bool(b) => Val::Bool(*b),
            Expr::Call(f, o) => Val::Real(env.distance(*f, *o)),
        })
    }

    pub fn guard_holds(&self, t: &Transition, env: &LreEnv) -> Result<bool, MachineError> {
        match &t.guard {
            None => Ok(true),
            Some(g) => match self.eval(g, env) {
                Ok(Val::Bool(b)) => Ok(b),
                Ok(Val::Real(_)) => Err(MachineError::Guard {
                    transition: t.id.clone(),
                    message: "guard is not Boolean".into(),
                }),
                Err(message) => Err(MachineError::Guard {
                    transition: t.id.clone(),
                    message,
                }),
            },
        }
    }

    /// Transitions out of `state` that may fire under `env` with `event`
    /// offered (an untriggered transition is enabled regardless of event).
    pub fn enabled(&self, state: State, env: &LreEnv, event: Option<Event>) -> Result<Vec<&Transition>, MachineError> {
        let mut out = Vec::new();
        for t in self.transitions.iter().filter(|t| t.source == state) {
            let triggered = match t.trigger {
                None => true,
                Some(e) => Some(e) == event,
            };
            if triggered && self.guard_holds(t, env)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// One untimed step. Enabled untriggered transitions take priority over
    /// triggered ones; with none enabled the machine stays put.
    pub fn step(&self, state: State, env: &LreEnv, event: Option<Event>) -> Result<StepResult, MachineError> {
        let enabled = self.enabled(state, env, event)?;
        let untriggered: Vec<_> = enabled.iter().filter(|t| t.trigger.is_none()).collect();
        let class: Vec<&Transition> = if untriggered.is_empty() {
            enabled.clone()
        } else {
            untriggered.into_iter().copied().collect()
        };
        match class.as_slice() {
            [] => Ok(StepResult {
                state,
                fired: None,
                outputs: Vec::new(),
            }),
            [t] => {
                let mut outputs = t.actions.clone();
                outputs.extend(self.entry_actions.get(&t.target).cloned().unwrap_or_default());
                Ok(StepResult {
                    state: t.target,
                    fired: Some(t.id.clone()),
                    outputs,
                })
            }
            many => Err(MachineError::Nondeterministic {
                state,
                transitions: many.iter().map(|t| t.id.clone()).collect(),
            }),
        }
    }

    /// The tree document form, as stored in the LRE model artifact.
    pub fn to_document(&self) -> Json {
        let actions = |list: &[Action]| -> Vec<Json> {
            list.iter()
                .map(|a| json!({"$type": "Action", "output": a.output.name(), "value": a.value}))
                .collect()
        };
        let states: Vec<Json> = self
            .states
            .iter()
            .map(|s| {
                json!({
                    "$type": "State",
                    "name": s.name(),
                    "entry": actions(self.entry_actions.get(s).map(Vec::as_slice).unwrap_or_default()),
                })
            })
            .collect();
        let transitions: Vec<Json> = self
            .transitions
            .iter()
            .map(|t| {
                let mut m = serde_json::Map::new();
                m.insert("$type".into(), json!("Transition"));
                m.insert("name".into(), json!(t.id));
                m.insert("source".into(), json!(t.source.name()));
                m.insert("target".into(), json!(t.target.name()));
                if let Some(e) = t.trigger {
                    m.insert("trigger".into(), json!(e.name()));
                }
                if let Some(g) = &t.guard {
                    m.insert("condition".into(), expr_to_json(g));
                }
                m.insert("actions".into(), Json::Array(actions(&t.actions)));
                Json::Object(m)
            })
            .collect();
        let constants: Vec<Json> = self
            .constants
            .iter()
            .map(|(k, v)| json!({"$type": "Constant", "name": k, "value": v}))
            .collect();
        json!({
            "$type": "StateMachine",
            "name": "LRE",
            "initial": self.initial.name(),
            "constants": constants,
            "states": states,
            "transitions": transitions,
        })
    }

    pub fn to_document_bytes(&self) -> Vec<u8> {
        let mut text = serde_json::to_string_pretty(&self.to_document()).expect("document serializes");
        text.push('\n');
        text.into_bytes()
    }
}

fn reference(kind: &str, name: &str) -> Json {
    json!({"$type": "Ref", "ref": {"$type": kind, "name": name}})
}

fn expr_to_json(e: &Expr) -> Json {
    match e {
        Expr::And(a, b) => json!({"$type": "And", "left": expr_to_json(a), "right": expr_to_json(b)}),
        Expr::Or(a, b) => json!({"$type": "Or", "left": expr_to_json(a), "right": expr_to_json(b)}),
        Expr::Not(a) => json!({"$type": "Not", "operand": expr_to_json(a)}),
        Expr::Cmp(op, a, b) => json!({"$type": op.type_name(), "left": expr_to_json(a), "right": expr_to_json(b)}),
        Expr::Var(v) => reference("Variable", v),
        Expr::Constant(c) => reference("Constant", c),
        Expr::Num(n) => json!({"$type": "Const", "value": n}),
        Expr::Bool(b) => json!({"$type": "Const", "value": b}),
        Expr::Call(f, o) => json!({
            "$type": "CallExp",
            "function": reference("Function", f.name()),
            "args": [reference("Variable", o.name())],
        }),
    }
}

fn text_attr<'e>(e: &'e Element, key: &str) -> Result<&'e str, MachineError> {
    match e.attr(key) {
        Some(Scalar::Text(s)) => Ok(s),
        _ => Err(MachineError::Document(format!("{} needs text attribute {key}", e.type_name))),
    }
}

fn real_attr(e: &Element, key: &str) -> Result<f64, MachineError> {
    match e.attr(key) {
        Some(Scalar::Real(r)) => Ok(*r),
        _ => Err(MachineError::Document(format!("{} needs number attribute {key}", e.type_name))),
    }
}

fn one<'e>(e: &'e Element, key: &str) -> Result<&'e Arc<Element>, MachineError> {
    match e.children.get(key) {
        Some(Child::One(c)) => Ok(c),
        _ => Err(MachineError::Document(format!("{} needs child {key}", e.type_name))),
    }
}

fn many<'e>(e: &'e Element, key: &str) -> &'e [Arc<Element>] {
    match e.children.get(key) {
        Some(Child::Many(v)) => v,
        _ => &[],
    }
}

fn ref_target(e: &Element) -> Result<(&str, &str), MachineError> {
    if e.type_name != "Ref" {
        return Err(MachineError::Document(format!("expected Ref, found {}", e.type_name)));
    }
    let target = one(e, "ref")?;
    Ok((target.type_name.as_str(), text_attr(target, "name")?))
}

fn expr_from_element(e: &Element) -> Result<Expr, MachineError> {
    let binary = |e: &Element| -> Result<(Expr, Expr), MachineError> {
        Ok((expr_from_element(one(e, "left")?)?, expr_from_element(one(e, "right")?)?))
    };
    let bad = |m: String| MachineError::Document(m);
    Ok(match e.type_name.as_str() {
        "And" => {
            let (a, b) = binary(e)?;
            Expr::and(a, b)
        }
        "Or" => {
            let (a, b) = binary(e)?;
            Expr::or(a, b)
        }
        "Not" => Expr::not(expr_from_element(one(e, "operand")?)?),
        "Const" => match e.attr("value") {
            Some(Scalar::Real(r)) => Expr::Num(*r),
            Some(Scalar::Boolean(b)) => Expr::Bool(*b),
            _ => return Err(bad("Const needs a number or Boolean value".into())),
        },
        "Ref" => match ref_target(e)? {
            ("Variable", name) => Expr::var(name),
            ("Constant", name) => Expr::constant(name),
            (kind, name) => return Err(bad(format!("cannot use {kind} {name} as a value"))),
        },
        "CallExp" => {
            let (kind, name) = ref_target(one(e, "function")?)?;
            if kind != "Function" {
                return Err(bad(format!("{kind} {name} is not a function")));
            }
            let f = DistFn::from_name(name).ok_or_else(|| bad(format!("unknown function {name}")))?;
            let args = many(e, "args");
            let [arg] = args else {
                return Err(bad(format!("{name} takes one argument")));
            };
            let (_, obstacle) = ref_target(arg)?;
            let o = Obstacle::from_name(obstacle).ok_or_else(|| bad(format!("unknown obstacle {obstacle}")))?;
            Expr::call(f, o)
        }
        other => match CmpOp::ALL.into_iter().find(|op| op.type_name() == other) {
            Some(op) => {
                let (a, b) = binary(e)?;
                Expr::cmp(op, a, b)
            }
            None => return Err(bad(format!("unknown expression type {other}"))),
        },
    })
}

fn actions_from(list: &[Arc<Element>]) -> Result<Vec<Action>, MachineError> {
    list.iter()
        .map(|a| {
            let name = text_attr(a, "output")?;
            Ok(Action {
                output: Output::from_name(name)
                    .ok_or_else(|| MachineError::Document(format!("unknown output {name}")))?,
                value: real_attr(a, "value")?,
            })
        })
        .collect()
}

/// Rebuilds the machine from a loaded tree view of its document.
pub fn machine_from_view(view: &ArtifactView) -> Result<LreMachine, MachineError> {
    let root = view
        .all("StateMachine")
        .into_iter()
        .next()
        .ok_or_else(|| MachineError::Document("no StateMachine element".into()))?;
    let state = |name: &str| State::from_name(name).ok_or_else(|| MachineError::Document(format!("unknown state {name}")));

    let mut machine = LreMachine {
        states: Vec::new(),
        initial: state(text_attr(&root, "initial")?)?,
        transitions: Vec::new(),
        entry_actions: BTreeMap::new(),
        constants: BTreeMap::new(),
    };
    for c in many(&root, "constants") {
        machine.constants.insert(text_attr(c, "name")?.to_string(), real_attr(c, "value")?);
    }
    for s in many(&root, "states") {
        let st = state(text_attr(s, "name")?)?;
        machine.states.push(st);
        let entry = actions_from(many(s, "entry"))?;
        if !entry.is_empty() {
            machine.entry_actions.insert(st, entry);
        }
    }
    for t in many(&root, "transitions") {
        let trigger = match t.attr("trigger") {
            None => None,
            Some(Scalar::Text(name)) => Some(
                Event::from_name(name).ok_or_else(|| MachineError::Document(format!("unknown event {name}")))?,
            ),
            Some(_) => return Err(MachineError::Document("trigger must be text".into())),
        };
        let guard = match t.children.get("condition") {
            Some(Child::One(c)) => Some(expr_from_element(c)?),
            Some(Child::Many(_)) => return Err(MachineError::Document("condition must be one expression".into())),
            None => None,
        };
        machine.transitions.push(Transition {
            id: text_attr(t, "name")?.to_string(),
            source: state(text_attr(t, "source")?)?,
            target: state(text_attr(t, "target")?)?,
            trigger,
            guard,
            actions: actions_from(many(t, "actions"))?,
        });
    }
    machine.validate()?;
    Ok(machine)
}

fn nominal_machine(k: LreConstants) -> LreMachine {
    use CmpOp::*;
    use DistFn::*;
    use Obstacle::*;
    let num = Expr::Num;
    let c = Expr::constant;
    let v = Expr::var;
    let call = Expr::call;
    let and_all = |parts: Vec<Expr>| {
        let mut it = parts.into_iter();
        let first = it.next().expect("non-empty");
        it.fold(first, Expr::and)
    };
    let t = |id: &str, source, target, trigger, guard| Transition {
        id: id.to_string(),
        source,
        target,
        trigger,
        guard,
        actions: Vec::new(),
    };

    let transitions = vec![
        t(
            "t1",
            State::OCM,
            State::MOM,
            Some(Event::ReqMOM),
            Some(and_all(vec![
                Expr::cmp(LessOrEqual, v("vel"), num(0.1)),
                Expr::cmp(Greater, call(Odist, Cdyn), num(7.5)),
                Expr::cmp(Greater, call(Odist, Cstc), num(0.3)),
                Expr::not(v("inOPEZ")),
            ])),
        ),
        t("t2", State::MOM, State::OCM, Some(Event::ReqOCM), None),
        t("t3", State::MOM, State::OCM, Some(Event::EndTask), None),
        t(
            "t4",
            State::MOM,
            State::HCM,
            None,
            Some(Expr::and(
                Expr::cmp(GreaterOrEqual, v("hvel"), num(0.1)),
                Expr::cmp(LessOrEqual, call(Hdist, Cstc), c("StaticObsHorizDist")),
            )),
        ),
        t(
            "t5",
            State::MOM,
            State::HCM,
            None,
            Some(Expr::and(
                Expr::cmp(Less, v("hvel"), num(0.1)),
                Expr::cmp(LessOrEqual, call(Odist, Cstc), c("MinSafeDist")),
            )),
        ),
        t(
            "t6",
            State::MOM,
            State::HCM,
            None,
            Some(and_all(vec![
                Expr::cmp(Less, v("hvel"), num(0.1)),
                Expr::cmp(Greater, call(Odist, Cstc), c("MinSafeDist")),
                Expr::cmp(LessOrEqual, call(Odist, Cdyn), c("CDA")),
            ])),
        ),
        t(
            "t7",
            State::HCM,
            State::CAM,
            None,
            Some(Expr::cmp(LessOrEqual, call(Odist, Cdyn), c("MinSafeDist"))),
        ),
        t(
            "t8",
            State::HCM,
            State::MOM,
            None,
            Some(Expr::and(
                Expr::cmp(Greater, call(Hdist, Cstc), c("StaticObsHorizDist")),
                Expr::cmp(Greater, call(Odist, Cdyn), c("CDA")),
            )),
        ),
        t("t9", State::HCM, State::OCM, Some(Event::ReqOCM), None),
        t(
            "t10",
            State::CAM,
            State::HCM,
            None,
            Some(Expr::cmp(Greater, call(Odist, Cdyn), c("MinSafeDist"))),
        ),
        t("t11", State::CAM, State::OCM, Some(Event::ReqOCM), None),
    ];
    let vel = |value| vec![Action { output: Output::AdvVel, value }];
    LreMachine {
        states: State::ALL.to_vec(),
        initial: State::OCM,
        transitions,
        entry_actions: [(State::MOM, vel(1.0)), (State::HCM, vel(0.1)), (State::CAM, vel(0.0))]
            .into_iter()
            .collect(),
        constants: k.table(),
    }
}
