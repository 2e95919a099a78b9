use std::fmt::{Display, Write};

use super::types::*;
use crate::pipeline::NodeId;

struct Block {
    header: String,
    pairs: Vec<(&'static str, String)>,
}

impl Block {
    fn new(header: impl Into<String>) -> Self {
        Self { header: header.into(), pairs: Vec::new() }
    }

    fn put(&mut self, key: &'static str, value: String) {
        self.pairs.push((key, value));
    }

    fn param<T: Display>(&mut self, key: &'static str, p: &Param<T>) {
        self.put(key, param(p));
    }

    /// Emits `key` only when it differs from the default.
    fn optional<T: Display + PartialEq>(&mut self, key: &'static str, p: &Param<T>, default: T) {
        if p.lit() != Some(&default) {
            self.param(key, p);
        }
    }

    fn write(&self, out: &mut String) {
        if self.pairs.is_empty() {
            let _ = writeln!(out, "{} {{}}", self.header);
            return;
        }
        let _ = writeln!(out, "{} {{", self.header);
        for (i, (k, v)) in self.pairs.iter().enumerate() {
            let sep = if i + 1 < self.pairs.len() { "," } else { "" };
            let _ = writeln!(out, "  {k}: {v}{sep}");
        }
        out.push_str("}\n");
    }
}

fn param<T: Display>(p: &Param<T>) -> String {
    match p {
        Param::Lit(v) => v.to_string(),
        Param::Var(name) => format!("${name}"),
    }
}

impl Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn dims(b: &mut Block, d: &VehicleDims) {
    b.optional("length", &d.length, DEFAULT_LENGTH);
    b.optional("width", &d.width, DEFAULT_WIDTH);
    b.optional("wheelbase", &d.wheelbase, DEFAULT_WHEELBASE);
}

/// Canonical text for a spec: fixed block and key order, LF line endings,
/// two-space indent, defaulted keys omitted.
pub fn serialize(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}", quote(&spec.name));

    let mut road = Block::new("road");
    road.param("lanes", &spec.road.lane_count);
    road.param("lane_width", &spec.road.lane_width);
    let segs: Vec<String> =
        spec.road.segments.iter().map(|s| format!("[{}, {}]", param(&s.length), param(&s.curvature))).collect();
    road.put("segments", format!("[{}]", segs.join(", ")));

    let mut ego = Block::new("ego");
    ego.param("lane", &spec.ego.lane);
    ego.param("s", &spec.ego.s);
    ego.param("speed", &spec.ego.speed);
    dims(&mut ego, &spec.ego.dims);

    let mut blocks = vec![road, ego];
    for a in &spec.agents {
        let mut b = Block::new(format!("agent {}", a.name));
        b.param("lane", &a.lane);
        b.param("s", &a.s);
        b.param("speed", &a.speed);
        match &a.behavior {
            BehaviorDecl::Cruise => {}
            BehaviorDecl::Stop => b.put("behavior", "stop".into()),
            BehaviorDecl::EmergencyBrake { at, decel } => {
                b.put("behavior", "emergency_brake".into());
                b.param("at", at);
                b.param("decel", decel);
            }
            BehaviorDecl::CutIn { at, target_lane, duration } => {
                b.put("behavior", "cut_in".into());
                b.param("at", at);
                b.param("target_lane", target_lane);
                b.param("duration", duration);
            }
        }
        dims(&mut b, &a.dims);
        blocks.push(b);
    }

    let mut m = Block::new(format!("mission {}", spec.mission.kind.keyword()));
    m.param("target_s", &spec.mission.target_s);
    m.param("timeout", &spec.mission.timeout);
    blocks.push(m);

    for f in &spec.faults {
        let mut b = Block::new(format!("fault {}", f.keyword()));
        match f {
            FaultDecl::SensorDrop { rate, delay_sigma } => {
                b.param("rate", rate);
                b.optional("delay_sigma", delay_sigma, 0.0);
            }
            FaultDecl::SensorShift { x, y, z, yaw, pitch, roll, translation_sigma, rotation_sigma } => {
                b.optional("x", x, 0.0);
                b.optional("y", y, 0.0);
                b.optional("z", z, 0.0);
                b.optional("yaw", yaw, 0.0);
                b.optional("pitch", pitch, 0.0);
                b.optional("roll", roll, 0.0);
                b.optional("translation_sigma", translation_sigma, 0.0);
                b.optional("rotation_sigma", rotation_sigma, 0.0);
            }
            FaultDecl::SensorNoise { position_sigma, yaw_sigma } => {
                b.optional("position_sigma", position_sigma, 0.0);
                b.optional("yaw_sigma", yaw_sigma, 0.0);
            }
            FaultDecl::ComputeBitflip { node, target } => {
                b.param("node", node);
                match target {
                    FlipTarget::Random { count, tick_lo, tick_hi } => {
                        b.param("count", count);
                        if tick_lo == tick_hi {
                            b.param("tick", tick_lo);
                        } else {
                            b.put("tick", format!("[{}, {}]", param(tick_lo), param(tick_hi)));
                        }
                    }
                    FlipTarget::Fixed { index, bit, tick } => {
                        b.param("index", index);
                        b.param("bit", bit);
                        b.param("tick", tick);
                    }
                }
            }
            FaultDecl::ComputeStuck { node, index, value, tick } => {
                b.param("node", node);
                b.param("index", index);
                b.param("value", value);
                b.param("tick", tick);
            }
        }
        blocks.push(b);
    }

    for b in &blocks {
        out.push('\n');
        b.write(&mut out);
    }
    if !spec.sweeps.is_empty() {
        out.push('\n');
        for axis in &spec.sweeps {
            let vals: Vec<String> = axis.values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "sweep {} in [{}]", axis.variable, vals.join(", "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_scenario;
    use super::*;

    #[test]
    fn minimal_round_trip() {
        let spec = ScenarioSpec::minimal("m");
        let text = serialize(&spec);
        assert_eq!(parse_scenario(&text).unwrap(), spec);
        assert_eq!(serialize(&parse_scenario(&text).unwrap()), text);
    }

    #[test]
    fn key_order_is_canonical() {
        let a = r#"scenario "s" road{lanes:1,lane_width:3.5} ego{lane:0,s:0,speed:10} mission follow{target_s:100,timeout:60}"#;
        let b = r#"mission follow{timeout:60,target_s:100} ego{speed:10,s:0,lane:0} road{lane_width:3.5,lanes:1} scenario "s""#;
        assert_eq!(serialize(&parse_scenario(a).unwrap()), serialize(&parse_scenario(b).unwrap()));
    }

    #[test]
    fn layout() {
        let text = serialize(&ScenarioSpec::minimal("m"));
        assert!(text.starts_with("scenario \"m\"\n\nroad {\n  lanes: 1,\n"));
        assert!(!text.contains('\r'));
    }
}
