use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{check_deadlock, EnvModel, LreMachine, DEFAULT_STATE_CAP};
use crate::case_model::{
    serialize_case, ArgumentModule, ArgumentNode, ArtifactKind, ArtifactPackage, ArtifactRecord, AssuranceCase,
    Connector, ConstraintRecord, Declaration, ModuleSupport, NodeKind,
};
use crate::dsms::{runtime_document_bytes, ObstacleReading, RUNTIME_METADATA_KEY};
use crate::formal::{FormalDocument, MachineVerdict, Reference, Statement};

pub const CASE_FILE: &str = "case.json";
pub const FMEDA_PATH: &str = "artifacts/fmeda.csv";
pub const MACHINE_PATH: &str = "artifacts/lre_machine.json";
pub const THEORY_PATH: &str = "artifacts/deadlock_free.thy";
pub const READING_PATH: &str = "artifacts/obstacle_reading.json";

pub const SPFM_RULE: &str = r#"var entries = FMEDA.all();
var safety_related = 0;
var spf_rf = 0;
for(e in entries) {
	if(e.SafetyRelated = "Yes") {
		safety_related += e.FailureRate.asReal();
	}
	if(e.SafetyGoalViolation = "Yes") {
		spf_rf += e.SPF_RF.asReal();
	}
}
var spfm = 1 - (spf_rf)/safety_related;
return spfm > 0.9;
"#;

pub const HCM_TRANSITIONS_RULE: &str = r#"var result = true;
var t4 = Transition.all.selectOne(t|t.name = "t4");
var t5 = Transition.all.selectOne(t|t.name = "t5");
var t6 = Transition.all.selectOne(t|t.name = "t6");
var t4c = t4.condition;
var t4check = t4c.isTypeOf(And) and
t4c.left.isTypeOf(GreaterOrEqual) and
t4c.left.left.ref.name = "hvel" and
t4c.left.right.value = 0.1 and
t4c.right.isTypeOf(LessOrEqual) and
t4c.right.left.isTypeOf(CallExp) and
t4c.right.left.function.ref.name = "hdist" and
t4c.right.left.args.first.ref.name = "cstc" and
t4c.right.right.ref.name = "StaticObsHorizDist";
result = result and t4check;
return result;
"#;

pub const HCM_ENTRY_RULE: &str = r#"var hcm = State.all.selectOne(s | s.name = "HCM");
var adv = hcm.entry.selectOne(a | a.output = "advVel");
return adv.value = 0.1;
"#;

pub const READING_RANGE_RULE: &str = r#"var r = M!ObstacleReading.all().first();
return (r.ns_rel_dist>=-50.0 and r.ns_rel_dist<=50.0)
and (r.ew_rel_dist>=-50.0 and r.ew_rel_dist<=50.0)
and (r.obs_depth>=-10.0 and r.obs_depth<=0.0)
and (r.obs_ns_vel>=-5.0 and r.obs_ns_vel<=5.0)
and (r.obs_ew_vel>=-5.0 and r.obs_ew_vel<=5.0)
and (r.obs_roc>=-5.0 and r.obs_roc<=5.0);
"#;

/// The proximity-sensor power supply FMEDA fragment. Continuation rows leave
/// the component id blank.
pub const FMEDA_CSV: &str = "\
ComponentID,FailureRate,SafetyRelated,FailureMode,FailureModeDistribution,SafetyGoalViolation,SafetyMechanism,FailureModeCoverage,SPF_RF
D1,10,Yes,Open,30%,Yes,None,0%,3
,,,Short,70%,,,,
C1,2,Yes,Open,30%,,,,
,,,Short,70%,,,,
C2,2,Yes,Open,30%,,,,
,,,Short,70%,,,,
L1,15,Yes,Open,30%,Yes,None,0%,4.5
,,,Short,70%,,,,
R1,1,No,Open,30%,,,,
,,,Short,70%,,,,
Lamp1,150,No,Open,100%,,,,
U1,100,Yes,RAM,100%,Yes,ECC,99%,1
";

const TEXT_ARTIFACTS: [(&str, &str, &str); 3] = [
    (
        "AUV_Architecture",
        "artifacts/auv_architecture.txt",
        "The LRE mediates between the operator and the autopilot. The platform provides sensors and actuators.\n",
    ),
    (
        "Operator_Procedures",
        "artifacts/operator_procedures.txt",
        "Operators take control through reqOCM and hand over through reqMOM.\n",
    ),
    (
        "Autopilot_Specification",
        "artifacts/autopilot_specification.txt",
        "The autopilot follows velocity and heading advice from the LRE only.\n",
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleManifest {
    pub root: PathBuf,
    /// Paths relative to `root`, in write order.
    pub files: Vec<String>,
}

impl BundleManifest {
    pub fn case_path(&self) -> PathBuf {
        self.root.join(CASE_FILE)
    }
}

/// The theory artifact: the deadlock-freedom claim with the exhaustive
/// checker's verdict attached.
pub fn deadlock_theory(machine: &LreMachine) -> String {
    let envs = EnvModel::default().envs(machine);
    let verdict = match check_deadlock(machine, &envs, DEFAULT_STATE_CAP) {
        Ok(r) if r.deadlock_free => MachineVerdict {
            property: "deadlock_free".into(),
            holds: true,
            detail: format!("{} configurations explored", r.states_explored),
        },
        Ok(r) => MachineVerdict {
            property: "deadlock_free".into(),
            holds: false,
            detail: match r.witness.as_ref().and_then(|w| w.last()) {
                Some(c) => format!("stuck in {} after {} configurations", c.state, r.states_explored),
                None => "stuck".into(),
            },
        },
        Err(e) => MachineVerdict {
            property: "deadlock_free".into(),
            holds: false,
            detail: e.to_string(),
        },
    };
    let doc = FormalDocument {
        statements: vec![
            Statement::Claim {
                name: "LRE_Deadlock_Free".into(),
                declaration: Declaration::None,
                description: "The LRE state machine is deadlock free".into(),
            },
            Statement::ArtifactReference {
                name: "LRE_Exhaustive_Search".into(),
                description: "Breadth-first exploration of the discretized LRE configuration space".into(),
            },
            Statement::Inference {
                name: "LRE_DF".into(),
                sources: vec![Reference::artifact("LRE_Exhaustive_Search")],
                target: Reference::claim("LRE_Deadlock_Free"),
                description: "@{Claim LRE_Deadlock_Free} is supported by @{ArtifactReference LRE_Exhaustive_Search}."
                    .into(),
            },
        ],
        verdicts: vec![verdict],
        ..FormalDocument::default()
    };
    doc.render()
}

fn supported(id: &str, from: &str, to: &str) -> Connector {
    Connector::supported_by(id, from, to)
}

fn node(id: &str, kind: NodeKind, description: &str) -> ArgumentNode {
    ArgumentNode::new(id, kind, description)
}

/// The AUV assurance case with every artifact it cites.
pub fn auv_case() -> AssuranceCase {
    use NodeKind::*;
    let mut case = AssuranceCase::new("AUV");

    let mut system = ArgumentModule::new("AUV_System");
    system.nodes = vec![
        node("AUV_G1", Goal, "The AUV operates acceptably safely in the maintenance pond").public(),
        node("AUV_C1", Context, "AUV architecture: platform, operator, LRE and autopilot").citing("AUV_Architecture"),
        node("AUV_S1", Strategy, "Argument over the safety of each architectural component"),
        node("AUV_Platform", AwayGoal, "The platform is acceptably safe").away_to("Platform_Argument", "Platform.Sensors"),
        node("AUV_Operator", AwayGoal, "Operator control is acceptably safe").away_to("Operator_Argument", "Operator.G1"),
        node("AUV_LRE", AwayGoal, "The LRE avoids static obstacles").away_to("LRE_Argument", "C6_a"),
        node("AUV_Autopilot", AwayGoal, "The autopilot is acceptably safe").away_to("Autopilot_Argument", "Autopilot.G1"),
    ];
    system.connectors = vec![
        Connector::in_context_of("AUV_k1", "AUV_G1", "AUV_C1"),
        supported("AUV_k2", "AUV_G1", "AUV_S1"),
        supported("AUV_k3", "AUV_S1", "AUV_Platform"),
        supported("AUV_k4", "AUV_S1", "AUV_Operator"),
        supported("AUV_k5", "AUV_S1", "AUV_LRE"),
        supported("AUV_k6", "AUV_S1", "AUV_Autopilot"),
    ];

    let mut platform = ArgumentModule::new("Platform_Argument");
    platform.nodes = vec![
        node("Platform.Sensors", Goal, "The platform sensors are acceptably reliable").public(),
        node("Sensor.G2.a", Goal, "Sensors provide reliable obstacle data"),
        node("Sensor.G3.a", Goal, "Sensors are sufficiently reliable to provide accurate readings"),
        node("Sensor.Sn1", Solution, "Hardware design metrics quantitatively analysed by FMEDA").citing("FMEDA"),
        node("Sensor.G3.b", Goal, "Obstacle data is in the specified range"),
        node("Sensor.Sn2", Solution, "Runtime evaluation of obstacle readings").citing("Obstacle_reading"),
    ];
    platform.connectors = vec![
        supported("PLT_k1", "Platform.Sensors", "Sensor.G2.a"),
        supported("PLT_k2", "Sensor.G2.a", "Sensor.G3.a"),
        supported("PLT_k3", "Sensor.G3.a", "Sensor.Sn1"),
        supported("PLT_k4", "Sensor.G2.a", "Sensor.G3.b"),
        supported("PLT_k5", "Sensor.G3.b", "Sensor.Sn2"),
    ];

    let mut operator = ArgumentModule::new("Operator_Argument");
    operator.nodes = vec![
        node("Operator.G1", Goal, "The AUV is acceptably safe while under operator control").public(),
        node("Operator.Sn1", Solution, "Operator procedures").citing("Operator_Procedures"),
    ];
    operator.connectors = vec![supported("OPR_k1", "Operator.G1", "Operator.Sn1")];

    let mut autopilot = ArgumentModule::new("Autopilot_Argument");
    autopilot.nodes = vec![
        node("Autopilot.G1", Goal, "The autopilot acts only on advice from the LRE").public(),
        node("Autopilot.Sn1", Solution, "Autopilot specification").citing("Autopilot_Specification"),
    ];
    autopilot.connectors = vec![supported("AP_k1", "Autopilot.G1", "Autopilot.Sn1")];

    let mut lre = ArgumentModule::new("LRE_Argument");
    lre.nodes = vec![
        node(
            "C6_a",
            Goal,
            "Upon detecting a close static obstacle, the LRE advises the autopilot to switch to HCM and reduce the velocity to 0.1 m/s",
        )
        .public(),
        node("LRE_A1", Assumption, "The operator is not in control of the AUV").declared(Declaration::Assumed),
        node("Autopilot", AwayGoal, "The autopilot follows LRE advice").away_to("Autopilot_Argument", "Autopilot.G1"),
        node("Sensors", AwayGoal, "The platform sensors are acceptably reliable").away_to("Platform_Argument", "Platform.Sensors"),
        node("LRE_S1", Strategy, "Argument by formalisation and decomposition of the requirement"),
        node("LRE_C1", Context, "RoboChart model of the LRE state machine").citing("LRE_Model"),
        node("C7_a", Goal, "The LRE activates HCM if there are potential collision risks"),
        node("Sn1", Solution, "Transitions from MOM to HCM are modelled by the LRE state machine").citing("LRE_HCM_R1"),
        node("C7_b", Goal, "The LRE commands the autopilot to reduce the speed to 0.1 m/s"),
        node("Sn2", Solution, "The entry action of HCM reduces the speed to 0.1 m/s").citing("LRE_HCM_Entry"),
        node("C7_c", Goal, "The LRE is deadlock free"),
        node("Sn3", Solution, "Formal verification of deadlock freedom").citing("Deadlock_Free"),
        node("LRE.Validation", Goal, "The LRE model is validated against the implementation").undeveloped(),
    ];
    lre.connectors = vec![
        Connector::in_context_of("LRE_k1", "C6_a", "LRE_A1"),
        supported("LRE_k2", "C6_a", "Autopilot"),
        supported("LRE_k3", "C6_a", "Sensors"),
        supported("LRE_k4", "C6_a", "LRE_S1"),
        Connector::in_context_of("LRE_k5", "LRE_S1", "LRE_C1"),
        supported("LRE_k6", "LRE_S1", "C7_a"),
        supported("LRE_k7", "LRE_S1", "C7_b"),
        supported("LRE_k8", "LRE_S1", "C7_c"),
        supported("LRE_k9", "LRE_S1", "LRE.Validation"),
        supported("LRE_k10", "C7_a", "Sn1"),
        supported("LRE_k11", "C7_b", "Sn2"),
        supported("I1", "C7_c", "Sn3"),
    ];

    case.modules = vec![system, platform, operator, lre, autopilot];
    case.inter_module_supports = [
        ("AUV_System", "Platform_Argument"),
        ("AUV_System", "Operator_Argument"),
        ("AUV_System", "LRE_Argument"),
        ("AUV_System", "Autopilot_Argument"),
        ("LRE_Argument", "Platform_Argument"),
        ("LRE_Argument", "Autopilot_Argument"),
    ]
    .into_iter()
    .map(|(s, t)| ModuleSupport {
        source: s.into(),
        target: t.into(),
    })
    .collect();

    let mut auv_artifacts = vec![
        ArtifactRecord::new("FMEDA", ArtifactKind::Tabular, FMEDA_PATH)
            .with_metadata("rowType", "FMEDA")
            .with_metadata("fillDown", "ComponentID")
            .with_constraint(ConstraintRecord::cql("SPFM", SPFM_RULE)),
        ArtifactRecord::new("Obstacle_reading", ArtifactKind::Tree, READING_PATH)
            .with_metadata(RUNTIME_METADATA_KEY, "true")
            .with_constraint(ConstraintRecord::cql("Reading_Range", READING_RANGE_RULE)),
    ];
    for (id, path, _) in TEXT_ARTIFACTS {
        auv_artifacts.push(ArtifactRecord::new(id, ArtifactKind::Text, path));
    }
    case.artifact_packages = vec![
        ArtifactPackage {
            id: "AUV_Artifact".into(),
            artifacts: auv_artifacts,
        },
        ArtifactPackage {
            id: "LRE_Artifact".into(),
            artifacts: vec![
                ArtifactRecord::new("LRE_Model", ArtifactKind::Tree, MACHINE_PATH),
                ArtifactRecord::new("LRE_HCM_R1", ArtifactKind::Tree, MACHINE_PATH)
                    .with_constraint(ConstraintRecord::cql("HCM_Transitions", HCM_TRANSITIONS_RULE)),
                ArtifactRecord::new("LRE_HCM_Entry", ArtifactKind::Tree, MACHINE_PATH)
                    .with_constraint(ConstraintRecord::cql("HCM_Entry", HCM_ENTRY_RULE)),
                ArtifactRecord::new("Deadlock_Free", ArtifactKind::Theory, THEORY_PATH),
            ],
        },
    ];
    case
}

/// Writes the AUV example: case file plus every artifact document. Output is
/// byte-identical across runs.
pub fn generate_bundle(out_dir: &Path) -> io::Result<BundleManifest> {
    let machine = LreMachine::nominal();
    let mut files: Vec<(String, Vec<u8>)> = vec![
        (CASE_FILE.into(), serialize_case(&auv_case())),
        (FMEDA_PATH.into(), FMEDA_CSV.as_bytes().to_vec()),
        (MACHINE_PATH.into(), machine.to_document_bytes()),
        (THEORY_PATH.into(), deadlock_theory(&machine).into_bytes()),
        (READING_PATH.into(), runtime_document_bytes(&ObstacleReading::default())),
    ];
    for (_, path, text) in TEXT_ARTIFACTS {
        files.push((path.into(), text.as_bytes().to_vec()));
    }

    let mut manifest = BundleManifest {
        root: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    for (rel, bytes) in files {
        let path = out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        manifest.files.push(rel);
    }
    Ok(manifest)
}
