use std::collections::HashSet;
use std::f64::consts::TAU;

use super::expand::expand_sweeps;
use super::types::*;
use crate::pipeline::{manifest, NodeId};

/// Speeds above this are legal but almost certainly a typo.
pub const SPEED_WARNING: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarType {
    Number,
    Integer(u64),
    Node,
}

impl VarType {
    pub fn integer(max: u64) -> Self {
        VarType::Integer(max)
    }

    fn describe(self) -> &'static str {
        match self {
            VarType::Number => "number",
            VarType::Integer(_) => "non-negative integer",
            VarType::Node => "node name",
        }
    }

    pub fn accepts(self, v: &Value) -> bool {
        match (self, v) {
            (VarType::Number, Value::Number(_)) => true,
            (VarType::Integer(max), Value::Number(n)) => *n >= 0.0 && n.fract() == 0.0 && *n <= max as f64,
            (VarType::Node, Value::Ident(s)) => NodeId::from_name(s).is_some(),
            _ => false,
        }
    }
}

pub(crate) const TICK_MAX: u64 = u64::MAX >> 11;

/// Walks every parameter of a spec together with its source path.
pub(crate) trait ParamVisitor {
    fn f64(&mut self, p: &mut Param<f64>, path: &str);
    fn u32(&mut self, p: &mut Param<u32>, path: &str);
    fn u64(&mut self, p: &mut Param<u64>, path: &str);
    fn node(&mut self, p: &mut Param<NodeId>, path: &str);
}

fn visit_dims(d: &mut VehicleDims, base: &str, v: &mut impl ParamVisitor) {
    v.f64(&mut d.length, &format!("{base}.length"));
    v.f64(&mut d.width, &format!("{base}.width"));
    v.f64(&mut d.wheelbase, &format!("{base}.wheelbase"));
}

pub(crate) fn visit_params(spec: &mut ScenarioSpec, v: &mut impl ParamVisitor) {
    v.u32(&mut spec.road.lane_count, "road.lanes");
    v.f64(&mut spec.road.lane_width, "road.lane_width");
    for (i, seg) in spec.road.segments.iter_mut().enumerate() {
        v.f64(&mut seg.length, &format!("road.segments[{i}].length"));
        v.f64(&mut seg.curvature, &format!("road.segments[{i}].curvature"));
    }
    v.u32(&mut spec.ego.lane, "ego.lane");
    v.f64(&mut spec.ego.s, "ego.s");
    v.f64(&mut spec.ego.speed, "ego.speed");
    visit_dims(&mut spec.ego.dims, "ego", v);
    for (i, a) in spec.agents.iter_mut().enumerate() {
        let base = format!("agent[{i}]");
        v.u32(&mut a.lane, &format!("{base}.lane"));
        v.f64(&mut a.s, &format!("{base}.s"));
        v.f64(&mut a.speed, &format!("{base}.speed"));
        match &mut a.behavior {
            BehaviorDecl::Cruise | BehaviorDecl::Stop => {}
            BehaviorDecl::EmergencyBrake { at, decel } => {
                v.f64(at, &format!("{base}.at"));
                v.f64(decel, &format!("{base}.decel"));
            }
            BehaviorDecl::CutIn { at, target_lane, duration } => {
                v.f64(at, &format!("{base}.at"));
                v.u32(target_lane, &format!("{base}.target_lane"));
                v.f64(duration, &format!("{base}.duration"));
            }
        }
        visit_dims(&mut a.dims, &base, v);
    }
    v.f64(&mut spec.mission.target_s, "mission.target_s");
    v.f64(&mut spec.mission.timeout, "mission.timeout");
    for (i, f) in spec.faults.iter_mut().enumerate() {
        let base = format!("fault[{i}]");
        let p = |k: &str| format!("{base}.{k}");
        match f {
            FaultDecl::SensorDrop { rate, delay_sigma } => {
                v.f64(rate, &p("rate"));
                v.f64(delay_sigma, &p("delay_sigma"));
            }
            FaultDecl::SensorShift { x, y, z, yaw, pitch, roll, translation_sigma, rotation_sigma } => {
                v.f64(x, &p("x"));
                v.f64(y, &p("y"));
                v.f64(z, &p("z"));
                v.f64(yaw, &p("yaw"));
                v.f64(pitch, &p("pitch"));
                v.f64(roll, &p("roll"));
                v.f64(translation_sigma, &p("translation_sigma"));
                v.f64(rotation_sigma, &p("rotation_sigma"));
            }
            FaultDecl::SensorNoise { position_sigma, yaw_sigma } => {
                v.f64(position_sigma, &p("position_sigma"));
                v.f64(yaw_sigma, &p("yaw_sigma"));
            }
            FaultDecl::ComputeBitflip { node, target } => {
                v.node(node, &p("node"));
                match target {
                    FlipTarget::Random { count, tick_lo, tick_hi } => {
                        v.u32(count, &p("count"));
                        v.u64(tick_lo, &p("tick"));
                        v.u64(tick_hi, &p("tick"));
                    }
                    FlipTarget::Fixed { index, bit, tick } => {
                        v.u32(index, &p("index"));
                        v.u32(bit, &p("bit"));
                        v.u64(tick, &p("tick"));
                    }
                }
            }
            FaultDecl::ComputeStuck { node, index, value, tick } => {
                v.node(node, &p("node"));
                v.u32(index, &p("index"));
                v.f64(value, &p("value"));
                v.u64(tick, &p("tick"));
            }
        }
    }
}

struct VarUses(Vec<(String, VarType, String)>);

impl ParamVisitor for VarUses {
    fn f64(&mut self, p: &mut Param<f64>, path: &str) {
        if let Param::Var(n) = p {
            self.0.push((n.clone(), VarType::Number, path.to_string()));
        }
    }
    fn u32(&mut self, p: &mut Param<u32>, path: &str) {
        if let Param::Var(n) = p {
            self.0.push((n.clone(), VarType::Integer(u32::MAX as u64), path.to_string()));
        }
    }
    fn u64(&mut self, p: &mut Param<u64>, path: &str) {
        if let Param::Var(n) = p {
            self.0.push((n.clone(), VarType::Integer(TICK_MAX), path.to_string()));
        }
    }
    fn node(&mut self, p: &mut Param<NodeId>, path: &str) {
        if let Param::Var(n) = p {
            self.0.push((n.clone(), VarType::Node, path.to_string()));
        }
    }
}

/// Every `$var` use in the spec: (name, expected type, source path).
pub(crate) fn var_uses(spec: &ScenarioSpec) -> Vec<(String, VarType, String)> {
    let mut copy = spec.clone();
    let mut uses = VarUses(Vec::new());
    visit_params(&mut copy, &mut uses);
    uses.0
}

/// Checks every invariant of a parsed spec. Returns an empty list iff the
/// spec is valid and unsuspicious; warnings do not make a spec invalid.
pub fn validate(spec: &ScenarioSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let vars_ok = check_variables(spec, &mut out);
    check_literals(spec, &mut out);
    if vars_ok && !spec.sweeps.is_empty() {
        for cfg in expand_sweeps(spec) {
            check_literals(&cfg.scenario, &mut out);
        }
    }
    let mut seen = HashSet::new();
    out.retain(|d| seen.insert((d.severity, d.line, d.column, d.message.clone())));
    out
}

fn check_variables(spec: &ScenarioSpec, out: &mut Vec<Diagnostic>) -> bool {
    let src = &spec.source;
    let before = out.iter().filter(|d| d.is_error()).count();
    let mut declared = HashSet::new();
    for (i, axis) in spec.sweeps.iter().enumerate() {
        let pos = src.lookup(&format!("sweep[{i}]"));
        if !declared.insert(axis.variable.as_str()) {
            out.push(Diagnostic::error(pos, format!("sweep variable `{}` is declared more than once", axis.variable)));
        }
        if axis.values.is_empty() {
            out.push(Diagnostic::error(pos, format!("sweep `{}` has no values", axis.variable)));
        }
    }
    let uses = var_uses(spec);
    for (name, ty, path) in &uses {
        match spec.sweeps.iter().position(|a| &a.variable == name) {
            None => out.push(Diagnostic::error(src.lookup(path), format!("undeclared sweep variable `${name}`"))),
            Some(i) => {
                let pos = src.lookup(&format!("sweep[{i}].values"));
                for v in &spec.sweeps[i].values {
                    if !ty.accepts(v) {
                        out.push(Diagnostic::error(
                            pos,
                            format!("sweep value `{v}` for `${name}` is not a valid {}", ty.describe()),
                        ));
                    }
                }
            }
        }
    }
    for (i, axis) in spec.sweeps.iter().enumerate() {
        if !uses.iter().any(|(n, _, _)| n == &axis.variable) {
            out.push(Diagnostic::warning(
                src.lookup(&format!("sweep[{i}]")),
                format!("sweep variable `{}` is never used", axis.variable),
            ));
        }
    }
    out.iter().filter(|d| d.is_error()).count() == before
}

/// Total road length, or `None` if any segment length is still a variable.
pub fn road_length(road: &RoadDecl) -> Option<f64> {
    road.segments.iter().map(|s| s.length.lit().copied()).sum()
}

fn check_literals(spec: &ScenarioSpec, out: &mut Vec<Diagnostic>) {
    let src = &spec.source;
    let mut err = |path: &str, msg: String| out.push(Diagnostic::error(src.lookup(path), msg));
    let mut warnings: Vec<Diagnostic> = Vec::new();
    let mut warn = |path: &str, msg: String| warnings.push(Diagnostic::warning(src.lookup(path), msg));

    let lanes = spec.road.lane_count.lit().copied();
    if let Some(n) = lanes {
        if n < 1 {
            err("road.lanes", format!("lane_count ≥ 1 required, found {n}"));
        }
    }
    let width = spec.road.lane_width.lit().copied();
    if let Some(w) = width {
        if w <= 0.0 {
            err("road.lane_width", format!("lane_width > 0 required, found {w}"));
        }
    }
    if spec.road.segments.is_empty() {
        err("road.segments", "road needs at least one segment".into());
    }
    for (i, seg) in spec.road.segments.iter().enumerate() {
        let path = format!("road.segments[{i}]");
        if let Some(&len) = seg.length.lit() {
            if len <= 0.0 {
                err(&path, format!("segment length must be > 0, found {len}"));
            }
            if let Some(&k) = seg.curvature.lit() {
                if k.abs() * len >= TAU {
                    err(&path, format!("segment turns through a full circle (|κ|·length = {})", k.abs() * len));
                }
            }
        }
        if let (Some(&k), Some(w)) = (seg.curvature.lit(), width) {
            if k.abs() * w >= 1.0 {
                err(&path, format!("|curvature|·lane_width < 1 required, found {}", k.abs() * w));
            } else if let Some(n) = lanes {
                if k.abs() * w * n as f64 >= 1.0 {
                    warn(&path, format!("curvature {k} folds the outer lanes of a {n}-lane road"));
                }
            }
        }
    }
    let total = road_length(&spec.road);

    let lane_check = |lane: &Param<u32>, path: &str, err: &mut dyn FnMut(&str, String)| {
        if let (Some(&l), Some(n)) = (lane.lit(), lanes) {
            if l >= n {
                err(path, format!("lane index {l} out of range (road has {n} lane(s))"));
            }
        }
    };
    let s_check = |s: &Param<f64>, path: &str, err: &mut dyn FnMut(&str, String)| {
        if let Some(&s) = s.lit() {
            if s < 0.0 {
                err(path, format!("s must be ≥ 0, found {s}"));
            } else if let Some(t) = total {
                if s > t {
                    err(path, format!("s = {s} lies beyond the end of the road ({t} m)"));
                }
            }
        }
    };
    let speed_check =
        |v: &Param<f64>, path: &str, err: &mut dyn FnMut(&str, String), warn: &mut dyn FnMut(&str, String)| {
            if let Some(&v) = v.lit() {
                if v < 0.0 {
                    err(path, format!("speed must be ≥ 0, found {v}"));
                } else if v > SPEED_WARNING {
                    warn(path, format!("speed {v} m/s exceeds {SPEED_WARNING} m/s"));
                }
            }
        };
    let dims_check = |d: &VehicleDims, base: &str, err: &mut dyn FnMut(&str, String)| {
        for (p, key) in [(&d.length, "length"), (&d.width, "width"), (&d.wheelbase, "wheelbase")] {
            if let Some(&v) = p.lit() {
                if v <= 0.0 {
                    err(&format!("{base}.{key}"), format!("{key} must be > 0, found {v}"));
                }
            }
        }
    };

    lane_check(&spec.ego.lane, "ego.lane", &mut err);
    s_check(&spec.ego.s, "ego.s", &mut err);
    speed_check(&spec.ego.speed, "ego.speed", &mut err, &mut warn);
    dims_check(&spec.ego.dims, "ego", &mut err);

    let mut names = HashSet::new();
    for (i, a) in spec.agents.iter().enumerate() {
        let base = format!("agent[{i}]");
        if !names.insert(a.name.as_str()) {
            err(&base, format!("duplicate agent name `{}`", a.name));
        }
        lane_check(&a.lane, &format!("{base}.lane"), &mut err);
        s_check(&a.s, &format!("{base}.s"), &mut err);
        speed_check(&a.speed, &format!("{base}.speed"), &mut err, &mut warn);
        dims_check(&a.dims, &base, &mut err);
        match &a.behavior {
            BehaviorDecl::Cruise | BehaviorDecl::Stop => {}
            BehaviorDecl::EmergencyBrake { at, decel } => {
                if let Some(&t) = at.lit() {
                    if t < 0.0 {
                        err(&format!("{base}.at"), format!("`at` must be ≥ 0, found {t}"));
                    }
                }
                if let Some(&d) = decel.lit() {
                    if d <= 0.0 {
                        err(&format!("{base}.decel"), format!("decel must be > 0, found {d}"));
                    }
                }
            }
            BehaviorDecl::CutIn { at, target_lane, duration } => {
                if let Some(&t) = at.lit() {
                    if t < 0.0 {
                        err(&format!("{base}.at"), format!("`at` must be ≥ 0, found {t}"));
                    }
                }
                lane_check(target_lane, &format!("{base}.target_lane"), &mut err);
                if let Some(&d) = duration.lit() {
                    if d <= 0.0 {
                        err(&format!("{base}.duration"), format!("duration must be > 0, found {d}"));
                    }
                }
            }
        }
    }

    if let Some(&t) = spec.mission.timeout.lit() {
        if t <= 0.0 {
            err("mission.timeout", format!("timeout > 0 required, found {t}"));
        }
    }
    if let Some(&s) = spec.mission.target_s.lit() {
        if s <= 0.0 {
            err("mission.target_s", format!("target_s must be > 0, found {s}"));
        } else if let Some(t) = total {
            if s > t {
                err("mission.target_s", format!("target_s = {s} lies beyond the end of the road ({t} m)"));
            }
        }
    }

    for (i, f) in spec.faults.iter().enumerate() {
        let base = format!("fault[{i}]");
        let p = |k: &str| format!("{base}.{k}");
        let nonneg = |v: &Param<f64>, key: &str, err: &mut dyn FnMut(&str, String)| {
            if let Some(&x) = v.lit() {
                if x < 0.0 {
                    err(&p(key), format!("{key} must be ≥ 0, found {x}"));
                }
            }
        };
        match f {
            FaultDecl::SensorDrop { rate, delay_sigma } => {
                if let Some(&r) = rate.lit() {
                    if !(0.0..=1.0).contains(&r) {
                        err(&p("rate"), format!("drop rate must lie in [0, 1], found {r}"));
                    }
                }
                nonneg(delay_sigma, "delay_sigma", &mut err);
            }
            FaultDecl::SensorShift { translation_sigma, rotation_sigma, .. } => {
                nonneg(translation_sigma, "translation_sigma", &mut err);
                nonneg(rotation_sigma, "rotation_sigma", &mut err);
            }
            FaultDecl::SensorNoise { position_sigma, yaw_sigma } => {
                nonneg(position_sigma, "position_sigma", &mut err);
                nonneg(yaw_sigma, "yaw_sigma", &mut err);
            }
            FaultDecl::ComputeBitflip { node, target } => match target {
                FlipTarget::Random { tick_lo, tick_hi, .. } => {
                    if let (Some(lo), Some(hi)) = (tick_lo.lit(), tick_hi.lit()) {
                        if lo > hi {
                            err(&p("tick"), format!("tick range [{lo}, {hi}] is empty"));
                        }
                    }
                }
                FlipTarget::Fixed { index, bit, .. } => {
                    if let Some(&b) = bit.lit() {
                        if b > 63 {
                            err(&p("bit"), format!("bit must lie in [0, 63], found {b}"));
                        }
                    }
                    index_check(node, index, &p("index"), &mut warn);
                }
            },
            FaultDecl::ComputeStuck { node, index, .. } => index_check(node, index, &p("index"), &mut warn),
        }
    }
    out.extend(warnings);
}

fn index_check(node: &Param<NodeId>, index: &Param<u32>, path: &str, warn: &mut dyn FnMut(&str, String)) {
    if let (Some(&n), Some(&i)) = (node.lit(), index.lit()) {
        let len = manifest().iter().filter(|e| e.node == n).count();
        if i as usize >= len {
            warn(path, format!("index {i} is outside the {} manifest ({len} registers); trials will abort", n.name()));
        }
    }
}
