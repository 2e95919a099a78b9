use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pipeline::NodeId;

/// 1-based line/column into scenario source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Source positions of blocks and keys, addressed by a dotted path such as
/// `road.lanes` or `agent[1].speed`.
///
/// Positions are not part of a spec's structural identity: two specs that
/// differ only in where things were written compare equal.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    entries: HashMap<String, Pos>,
}

impl SourceMap {
    pub fn insert(&mut self, path: impl Into<String>, pos: Pos) {
        self.entries.entry(path.into()).or_insert(pos);
    }

    /// Position of `path`, falling back to its enclosing block, then to 1:1.
    pub fn lookup(&self, path: &str) -> Pos {
        let mut p = path;
        loop {
            if let Some(pos) = self.entries.get(p) {
                return *pos;
            }
            match p.rfind('.') {
                Some(i) => p = &p[..i],
                None => return Pos::new(1, 1),
            }
        }
    }
}

impl PartialEq for SourceMap {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

/// A scalar that is either written literally or bound later by a sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Param<T> {
    Lit(T),
    Var(String),
}

impl<T> Param<T> {
    pub fn lit(&self) -> Option<&T> {
        match self {
            Param::Lit(v) => Some(v),
            Param::Var(_) => None,
        }
    }

    pub fn var(&self) -> Option<&str> {
        match self {
            Param::Lit(_) => None,
            Param::Var(name) => Some(name),
        }
    }
}

impl<T: Copy> Param<T> {
    /// Literal value; panics on an unresolved variable.
    pub fn value(&self) -> T {
        match self {
            Param::Lit(v) => *v,
            Param::Var(name) => panic!("unresolved scenario variable ${name}"),
        }
    }
}

impl<T> From<T> for Param<T> {
    fn from(v: T) -> Self {
        Param::Lit(v)
    }
}

/// A value as written in the source: sweep values and raw key values.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Ident(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{}", quote(s)),
            Value::Ident(s) => f.write_str(s),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDecl {
    pub length: Param<f64>,
    pub curvature: Param<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadDecl {
    pub lane_count: Param<u32>,
    pub lane_width: Param<f64>,
    pub segments: Vec<SegmentDecl>,
}

pub const DEFAULT_LENGTH: f64 = 4.5;
pub const DEFAULT_WIDTH: f64 = 1.8;
pub const DEFAULT_WHEELBASE: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDims {
    pub length: Param<f64>,
    pub width: Param<f64>,
    pub wheelbase: Param<f64>,
}

impl Default for VehicleDims {
    fn default() -> Self {
        Self {
            length: Param::Lit(DEFAULT_LENGTH),
            width: Param::Lit(DEFAULT_WIDTH),
            wheelbase: Param::Lit(DEFAULT_WHEELBASE),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoDecl {
    pub lane: Param<u32>,
    pub s: Param<f64>,
    pub speed: Param<f64>,
    pub dims: VehicleDims,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorDecl {
    Cruise,
    EmergencyBrake { at: Param<f64>, decel: Param<f64> },
    CutIn { at: Param<f64>, target_lane: Param<u32>, duration: Param<f64> },
    Stop,
}

impl BehaviorDecl {
    pub fn keyword(&self) -> &'static str {
        match self {
            BehaviorDecl::Cruise => "cruise",
            BehaviorDecl::EmergencyBrake { .. } => "emergency_brake",
            BehaviorDecl::CutIn { .. } => "cut_in",
            BehaviorDecl::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentDecl {
    pub name: String,
    pub lane: Param<u32>,
    pub s: Param<f64>,
    pub speed: Param<f64>,
    pub behavior: BehaviorDecl,
    pub dims: VehicleDims,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissionKind {
    Follow,
    Turn,
    Overtake,
}

impl MissionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MissionKind::Follow => "follow",
            MissionKind::Turn => "turn",
            MissionKind::Overtake => "overtake",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "follow" => Some(MissionKind::Follow),
            "turn" => Some(MissionKind::Turn),
            "overtake" => Some(MissionKind::Overtake),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionDecl {
    pub kind: MissionKind,
    pub target_s: Param<f64>,
    pub timeout: Param<f64>,
}

/// Which bits a compute fault hits.
#[derive(Debug, Clone, PartialEq)]
pub enum FlipTarget {
    /// `count` flips with uniformly sampled index, bit and tick in `[tick_lo, tick_hi]`.
    Random { count: Param<u32>, tick_lo: Param<u64>, tick_hi: Param<u64> },
    /// One flip at a fixed address.
    Fixed { index: Param<u32>, bit: Param<u32>, tick: Param<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FaultDecl {
    SensorDrop {
        rate: Param<f64>,
        delay_sigma: Param<f64>,
    },
    SensorShift {
        x: Param<f64>,
        y: Param<f64>,
        z: Param<f64>,
        yaw: Param<f64>,
        pitch: Param<f64>,
        roll: Param<f64>,
        translation_sigma: Param<f64>,
        rotation_sigma: Param<f64>,
    },
    SensorNoise {
        position_sigma: Param<f64>,
        yaw_sigma: Param<f64>,
    },
    ComputeBitflip {
        node: Param<NodeId>,
        target: FlipTarget,
    },
    ComputeStuck {
        node: Param<NodeId>,
        index: Param<u32>,
        value: Param<f64>,
        tick: Param<u64>,
    },
}

impl FaultDecl {
    pub fn keyword(&self) -> &'static str {
        match self {
            FaultDecl::SensorDrop { .. } => "sensor.drop",
            FaultDecl::SensorShift { .. } => "sensor.shift",
            FaultDecl::SensorNoise { .. } => "sensor.noise",
            FaultDecl::ComputeBitflip { .. } => "compute.bitflip",
            FaultDecl::ComputeStuck { .. } => "compute.stuck",
        }
    }

    pub fn is_compute(&self) -> bool {
        matches!(self, FaultDecl::ComputeBitflip { .. } | FaultDecl::ComputeStuck { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub variable: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub road: RoadDecl,
    pub ego: EgoDecl,
    pub agents: Vec<AgentDecl>,
    pub mission: MissionDecl,
    pub faults: Vec<FaultDecl>,
    pub sweeps: Vec<SweepAxis>,
    pub source: SourceMap,
}

impl ScenarioSpec {
    /// Smallest valid scenario: one straight lane, an ego, and a follow mission.
    pub fn minimal(name: &str) -> Self {
        Self {
            name: name.to_string(),
            road: RoadDecl {
                lane_count: Param::Lit(1),
                lane_width: Param::Lit(3.5),
                segments: vec![SegmentDecl { length: Param::Lit(1000.0), curvature: Param::Lit(0.0) }],
            },
            ego: EgoDecl {
                lane: Param::Lit(0),
                s: Param::Lit(0.0),
                speed: Param::Lit(10.0),
                dims: VehicleDims::default(),
            },
            agents: Vec::new(),
            mission: MissionDecl { kind: MissionKind::Follow, target_s: Param::Lit(100.0), timeout: Param::Lit(60.0) },
            faults: Vec::new(),
            sweeps: Vec::new(),
            source: SourceMap::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn error(pos: Pos, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, line: pos.line, column: pos.column, message: message.into() }
    }

    pub fn warning(pos: Pos, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, line: pos.line, column: pos.column, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// A scenario with every `$var` replaced by the values of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenario: ScenarioSpec,
    /// Variable bindings in sweep-axis declaration order.
    pub binding: Vec<(String, Value)>,
}

impl ResolvedConfig {
    /// `var=value` pairs joined by `;`, or `-` when nothing was swept.
    pub fn binding_label(&self) -> String {
        if self.binding.is_empty() {
            return "-".to_string();
        }
        self.binding.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}
