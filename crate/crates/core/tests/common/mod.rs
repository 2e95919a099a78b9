#![allow(dead_code)]

use std::path::{Path, PathBuf};

use addt::pipeline::NodeId;
use addt::scenario::*;
use proptest::prelude::*;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Every `.adt` file under `scenarios/` and `campaigns/`, sorted.
pub fn corpus() -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    for dir in ["scenarios", "campaigns"] {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(repo_root().join(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "adt"))
            .collect();
        paths.sort();
        for p in paths {
            let text = std::fs::read_to_string(&p).unwrap();
            out.push((p, text));
        }
    }
    out
}

pub fn load(rel: &str) -> ScenarioSpec {
    let text = std::fs::read_to_string(repo_root().join(rel)).unwrap();
    parse_scenario(&text).unwrap_or_else(|d| panic!("{rel}: {d:?}"))
}

fn name() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!['a', 'Z', ' ', '"', '\\', '\n', '\t', 'é', '7', '_', '-']), 0..12)
        .prop_map(|c| c.into_iter().collect())
}

fn node() -> impl Strategy<Value = NodeId> {
    prop::sample::select(NodeId::ALL.to_vec())
}

fn dims() -> impl Strategy<Value = VehicleDims> {
    (
        prop_oneof![Just(DEFAULT_LENGTH), 1.0..20.0f64],
        prop_oneof![Just(DEFAULT_WIDTH), 0.5..3.0f64],
        prop_oneof![Just(DEFAULT_WHEELBASE), 1.0..6.0f64],
    )
        .prop_map(|(l, w, b)| VehicleDims {
            length: Param::Lit(l),
            width: Param::Lit(w),
            wheelbase: Param::Lit(b),
        })
}

fn behavior(lanes: u32) -> impl Strategy<Value = BehaviorDecl> {
    prop_oneof![
        Just(BehaviorDecl::Cruise),
        Just(BehaviorDecl::Stop),
        (0.0..30.0f64, 0.1..10.0f64)
            .prop_map(|(at, d)| BehaviorDecl::EmergencyBrake { at: Param::Lit(at), decel: Param::Lit(d) }),
        (0.0..30.0f64, 0..lanes, 0.1..5.0f64).prop_map(|(at, l, d)| BehaviorDecl::CutIn {
            at: Param::Lit(at),
            target_lane: Param::Lit(l),
            duration: Param::Lit(d),
        }),
    ]
}

fn fault() -> impl Strategy<Value = FaultDecl> {
    let f = || -1.0..1.0f64;
    let nn = || prop_oneof![Just(0.0), 0.0..1.0f64];
    prop_oneof![
        (0.0..=1.0f64, nn())
            .prop_map(|(r, s)| FaultDecl::SensorDrop { rate: Param::Lit(r), delay_sigma: Param::Lit(s) }),
        (f(), f(), f(), f(), f(), f(), nn(), nn()).prop_map(|(x, y, z, yaw, pitch, roll, ts, rs)| {
            FaultDecl::SensorShift {
                x: Param::Lit(x),
                y: Param::Lit(y),
                z: Param::Lit(z),
                yaw: Param::Lit(yaw),
                pitch: Param::Lit(pitch),
                roll: Param::Lit(roll),
                translation_sigma: Param::Lit(ts),
                rotation_sigma: Param::Lit(rs),
            }
        }),
        (nn(), nn())
            .prop_map(|(p, y)| FaultDecl::SensorNoise { position_sigma: Param::Lit(p), yaw_sigma: Param::Lit(y) }),
        (node(), 0..20u32, 0..5000u64, 0..5000u64).prop_map(|(n, c, a, b)| FaultDecl::ComputeBitflip {
            node: Param::Lit(n),
            target: FlipTarget::Random {
                count: Param::Lit(c),
                tick_lo: Param::Lit(a.min(b)),
                tick_hi: Param::Lit(a.max(b))
            },
        }),
        (node(), 0..8u32, 0..64u32, 0..5000u64).prop_map(|(n, i, b, t)| FaultDecl::ComputeBitflip {
            node: Param::Lit(n),
            target: FlipTarget::Fixed { index: Param::Lit(i), bit: Param::Lit(b), tick: Param::Lit(t) },
        }),
        (node(), 0..8u32, -100.0..100.0f64, 0..5000u64).prop_map(|(n, i, v, t)| FaultDecl::ComputeStuck {
            node: Param::Lit(n),
            index: Param::Lit(i),
            value: Param::Lit(v),
            tick: Param::Lit(t),
        }),
    ]
}

/// Random structurally valid specs: every literal satisfies the validator,
/// and optional sweep axes bind the ego speed, the first segment length and
/// a compute-fault node.
pub fn arb_spec() -> impl Strategy<Value = ScenarioSpec> {
    (1..5u32, 2.5..4.5f64, prop::collection::vec((100.0..500.0f64, -0.01..0.01f64), 1..4))
        .prop_flat_map(|(lanes, width, segs)| {
            let agents = prop::collection::vec((0..lanes, 0.0..100.0f64, 0.0..40.0f64, behavior(lanes), dims()), 0..4);
            (
                Just((lanes, width, segs)),
                name(),
                (0..lanes, 0.0..100.0f64, 0.0..40.0f64, dims()),
                agents,
                (
                    prop::sample::select(vec![MissionKind::Follow, MissionKind::Turn, MissionKind::Overtake]),
                    1.0..100.0f64,
                    1.0..120.0f64,
                ),
                prop::collection::vec(fault(), 0..4),
                (any::<bool>(), any::<bool>(), any::<bool>()),
                prop::collection::vec(0.0..40.0f64, 1..4),
            )
        })
        .prop_map(|((lanes, width, segs), name, ego, agents, mission, faults, sweep, speeds)| {
            let mut spec = ScenarioSpec::minimal(&name);
            spec.road = RoadDecl {
                lane_count: Param::Lit(lanes),
                lane_width: Param::Lit(width),
                segments: segs
                    .iter()
                    .map(|&(l, k)| SegmentDecl { length: Param::Lit(l), curvature: Param::Lit(k) })
                    .collect(),
            };
            spec.ego = EgoDecl { lane: Param::Lit(ego.0), s: Param::Lit(ego.1), speed: Param::Lit(ego.2), dims: ego.3 };
            spec.agents = agents
                .into_iter()
                .enumerate()
                .map(|(i, (lane, s, speed, behavior, dims))| AgentDecl {
                    name: format!("agent_{i}"),
                    lane: Param::Lit(lane),
                    s: Param::Lit(s),
                    speed: Param::Lit(speed),
                    behavior,
                    dims,
                })
                .collect();
            spec.mission =
                MissionDecl { kind: mission.0, target_s: Param::Lit(mission.1), timeout: Param::Lit(mission.2) };
            spec.faults = faults;
            if sweep.0 {
                spec.ego.speed = Param::Var("v".into());
                spec.sweeps
                    .push(SweepAxis { variable: "v".into(), values: speeds.into_iter().map(Value::Number).collect() });
            }
            if sweep.1 {
                spec.road.segments[0].length = Param::Var("len".into());
                spec.sweeps.push(SweepAxis {
                    variable: "len".into(),
                    values: vec![Value::Number(400.0), Value::Number(600.0)],
                });
            }
            if sweep.2 {
                spec.faults.push(FaultDecl::ComputeStuck {
                    node: Param::Var("node".into()),
                    index: Param::Lit(0),
                    value: Param::Lit(0.0),
                    tick: Param::Lit(10),
                });
                let nodes = NodeId::ALL.iter().map(|n| Value::Ident(n.name().into())).collect();
                spec.sweeps.push(SweepAxis { variable: "node".into(), values: nodes });
            }
            spec
        })
}
