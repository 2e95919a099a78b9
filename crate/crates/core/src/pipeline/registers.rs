use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeId {
    Perception,
    Planning,
    Control,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::Perception, NodeId::Planning, NodeId::Control];

    pub fn name(self) -> &'static str {
        match self {
            NodeId::Perception => "perception",
            NodeId::Planning => "planning",
            NodeId::Control => "control",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "perception" => Some(NodeId::Perception),
            "planning" => Some(NodeId::Planning),
            "control" => Some(NodeId::Control),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Which processor this node's state is modelled as living on.
    pub fn hardware(self) -> Hardware {
        match self {
            NodeId::Perception => Hardware::Gpu,
            NodeId::Planning | NodeId::Control => Hardware::Cpu,
        }
    }

    pub fn bank_len(self) -> usize {
        match self {
            NodeId::Perception => perc::LEN,
            NodeId::Planning => plan::LEN,
            NodeId::Control => ctrl::LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardware {
    Cpu,
    Gpu,
}

pub mod perc {
    pub const ASSOC_GATE: usize = 0;
    pub const STALE_LIMIT: usize = 1;
    pub const ROI_RANGE: usize = 2;
    pub const FRAME_PERIOD: usize = 3;
    pub const NEXT_ID: usize = 4;
    /// x, y, z, yaw, pitch, roll of the assumed sensor calibration.
    pub const CALIB: usize = 5;
    pub const TRACKS: usize = 11;
    pub const MAX_TRACKS: usize = 8;
    pub const SLOT: usize = 8;
    pub const ALIVE: usize = 0;
    pub const ID: usize = 1;
    pub const X: usize = 2;
    pub const Y: usize = 3;
    pub const YAW: usize = 4;
    pub const VX: usize = 5;
    pub const VY: usize = 6;
    pub const AGE: usize = 7;
    pub const LEN: usize = TRACKS + MAX_TRACKS * SLOT;

    pub const SLOT_FIELDS: [&str; SLOT] = ["alive", "id", "x", "y", "yaw", "vx", "vy", "age"];
    pub const CALIB_FIELDS: [&str; 6] = ["x", "y", "z", "yaw", "pitch", "roll"];

    pub fn slot(i: usize, field: usize) -> usize {
        TRACKS + i * SLOT + field
    }
}

pub mod plan {
    pub const W_COL: usize = 0;
    pub const W_LANE: usize = 1;
    pub const W_PROG: usize = 2;
    pub const HORIZON: usize = 3;
    pub const SAMPLE_DT: usize = 4;
    pub const V_DESIRED: usize = 5;
    pub const LAT_RATE: usize = 6;
    pub const ACCEL_LIMIT: usize = 7;
    pub const DECEL_FOLLOW: usize = 8;
    pub const DECEL_STOP: usize = 9;
    pub const HEADWAY: usize = 10;
    pub const STANDSTILL_GAP: usize = 11;
    pub const MARGIN_LONG: usize = 12;
    pub const MARGIN_LAT: usize = 13;
    pub const FOLLOW_GAIN: usize = 14;
    pub const NUDGE: usize = 15;
    pub const OBJ_HALF_LENGTH: usize = 16;
    pub const OBJ_HALF_WIDTH: usize = 17;
    pub const MISSION_LANE: usize = 18;
    pub const LANE_CHANGE: usize = 19;
    pub const LATERAL_TARGET: usize = 20;
    pub const COST: usize = 21;
    pub const VALID: usize = 22;
    /// (s, v) pairs at t = 1, 2, 3 s.
    pub const KNOTS: usize = 23;
    pub const N_KNOTS: usize = 3;
    pub const LEN: usize = KNOTS + 2 * N_KNOTS;

    pub const NAMES: [&str; KNOTS] = [
        "w_col",
        "w_lane",
        "w_prog",
        "horizon",
        "sample_dt",
        "v_desired",
        "lat_rate",
        "accel_limit",
        "decel_follow",
        "decel_stop",
        "headway",
        "standstill_gap",
        "margin_long",
        "margin_lat",
        "follow_gain",
        "nudge",
        "obj_half_length",
        "obj_half_width",
        "mission_lane_center",
        "lane_change",
        "lateral_target",
        "cost",
        "valid",
    ];
}

pub mod ctrl {
    pub const KP_LAT: usize = 0;
    pub const KI_LAT: usize = 1;
    pub const KD_LAT: usize = 2;
    pub const K_YAW: usize = 3;
    pub const K_FF: usize = 4;
    pub const CTE_LIMIT: usize = 5;
    pub const KP_LON: usize = 6;
    pub const KI_LON: usize = 7;
    pub const KD_LON: usize = 8;
    pub const STEER_MAX: usize = 9;
    pub const ACCEL_MAX: usize = 10;
    pub const I_LIMIT_LAT: usize = 11;
    pub const I_LIMIT_LON: usize = 12;
    pub const I_LAT: usize = 13;
    pub const I_LON: usize = 14;
    pub const D_PREV: usize = 15;
    pub const V_PREV: usize = 16;
    pub const STEER: usize = 17;
    pub const ACCEL: usize = 18;
    pub const LEN: usize = 19;

    pub const NAMES: [&str; LEN] = [
        "kp_lat",
        "ki_lat",
        "kd_lat",
        "k_yaw",
        "k_ff",
        "cte_limit",
        "kp_lon",
        "ki_lon",
        "kd_lon",
        "steer_max",
        "accel_max",
        "i_limit_lat",
        "i_limit_lon",
        "i_lat",
        "i_lon",
        "d_prev",
        "v_prev",
        "steer",
        "accel",
    ];
}

/// Tunable defaults. Values that depend on the scenario (desired speed,
/// mission lane, initial targets) are filled in when a pipeline is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub perception: Vec<f64>,
    pub planning: Vec<f64>,
    pub control: Vec<f64>,
}

impl Default for Gains {
    fn default() -> Self {
        let mut p = vec![0.0; perc::LEN];
        p[perc::ASSOC_GATE] = 3.0;
        p[perc::STALE_LIMIT] = 3.0;
        p[perc::ROI_RANGE] = 120.0;
        p[perc::FRAME_PERIOD] = 0.1;

        let mut q = vec![0.0; plan::LEN];
        q[plan::W_COL] = 10.0;
        q[plan::W_LANE] = 1.0;
        q[plan::W_PROG] = 0.5;
        q[plan::HORIZON] = 3.0;
        q[plan::SAMPLE_DT] = 0.25;
        q[plan::LAT_RATE] = 1.75;
        q[plan::ACCEL_LIMIT] = 2.0;
        q[plan::DECEL_FOLLOW] = 4.0;
        q[plan::DECEL_STOP] = 6.0;
        q[plan::HEADWAY] = 1.5;
        q[plan::STANDSTILL_GAP] = 5.0;
        q[plan::MARGIN_LONG] = 1.0;
        q[plan::MARGIN_LAT] = 0.3;
        q[plan::FOLLOW_GAIN] = 0.5;
        q[plan::NUDGE] = 0.5;
        q[plan::OBJ_HALF_LENGTH] = 2.25;
        q[plan::OBJ_HALF_WIDTH] = 0.9;
        q[plan::VALID] = 1.0;

        let mut c = vec![0.0; ctrl::LEN];
        c[ctrl::KP_LAT] = 0.05;
        c[ctrl::KI_LAT] = 0.001;
        c[ctrl::KD_LAT] = 0.02;
        c[ctrl::K_YAW] = 0.6;
        c[ctrl::K_FF] = 1.0;
        c[ctrl::CTE_LIMIT] = 1.0;
        c[ctrl::KP_LON] = 1.0;
        c[ctrl::KI_LON] = 0.05;
        c[ctrl::KD_LON] = 0.0;
        c[ctrl::STEER_MAX] = 0.6;
        c[ctrl::ACCEL_MAX] = 8.0;
        c[ctrl::I_LIMIT_LAT] = 2.0;
        c[ctrl::I_LIMIT_LON] = 2.0;
        Self { perception: p, planning: q, control: c }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub node: NodeId,
    pub index: u32,
    pub name: String,
    pub hardware: Hardware,
}

fn names(node: NodeId) -> Vec<String> {
    match node {
        NodeId::Perception => {
            let mut v: Vec<String> =
                ["assoc_gate", "stale_limit", "roi_range", "frame_period", "next_id"].map(String::from).to_vec();
            v.extend(perc::CALIB_FIELDS.iter().map(|f| format!("calib_{f}")));
            for i in 0..perc::MAX_TRACKS {
                v.extend(perc::SLOT_FIELDS.iter().map(|f| format!("track{i}_{f}")));
            }
            v
        }
        NodeId::Planning => {
            let mut v: Vec<String> = plan::NAMES.iter().map(|s| s.to_string()).collect();
            for k in 1..=plan::N_KNOTS {
                v.push(format!("knot{k}_s"));
                v.push(format!("knot{k}_v"));
            }
            v
        }
        NodeId::Control => ctrl::NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

/// Every registered scalar, in (node, index) order.
pub fn manifest() -> &'static [ManifestEntry] {
    static M: OnceLock<Vec<ManifestEntry>> = OnceLock::new();
    M.get_or_init(|| {
        NodeId::ALL
            .iter()
            .flat_map(|&node| {
                names(node).into_iter().enumerate().map(move |(i, name)| ManifestEntry {
                    node,
                    index: i as u32,
                    name,
                    hardware: node.hardware(),
                })
            })
            .collect()
    })
}

/// Number of registers a node exposes.
pub fn manifest_len(node: NodeId) -> usize {
    node.bank_len()
}

/// The registered state of all three nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Banks {
    banks: [Vec<f64>; 3],
}

impl Banks {
    pub fn new(gains: &Gains) -> Self {
        Self { banks: [gains.perception.clone(), gains.planning.clone(), gains.control.clone()] }
    }

    pub fn node(&self, node: NodeId) -> &[f64] {
        &self.banks[node.index()]
    }

    pub fn node_mut(&mut self, node: NodeId) -> &mut [f64] {
        &mut self.banks[node.index()]
    }

    pub fn get(&self, node: NodeId, index: usize) -> Option<f64> {
        self.banks[node.index()].get(index).copied()
    }

    pub fn get_mut(&mut self, node: NodeId, index: usize) -> Option<&mut f64> {
        self.banks[node.index()].get_mut(index)
    }

    /// Bit patterns of every register, for checksums and equality that
    /// treats NaNs by identity.
    pub fn bits(&self) -> Vec<u64> {
        self.banks.iter().flatten().map(|v| v.to_bits()).collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn manifest_matches_banks() {
        let m = manifest();
        let g = Gains::default();
        let lens = [g.perception.len(), g.planning.len(), g.control.len()];
        for node in NodeId::ALL {
            let entries: Vec<_> = m.iter().filter(|e| e.node == node).collect();
            assert_eq!(entries.len(), lens[node.index()]);
            assert_eq!(entries.len(), node.bank_len());
            for (i, e) in entries.iter().enumerate() {
                assert_eq!(e.index as usize, i);
                assert_eq!(e.hardware, node.hardware());
            }
            let names: HashSet<_> = entries.iter().map(|e| e.name.as_str()).collect();
            assert_eq!(names.len(), entries.len(), "duplicate register names in {node:?}");
        }
        let addrs: HashSet<_> = m.iter().map(|e| (e.node, e.index)).collect();
        assert_eq!(addrs.len(), m.len());
    }

    #[test]
    fn named_constants_agree_with_manifest() {
        let find =
            |node, name: &str| manifest().iter().find(|e| e.node == node && e.name == name).unwrap().index as usize;
        assert_eq!(find(NodeId::Perception, "roi_range"), perc::ROI_RANGE);
        assert_eq!(find(NodeId::Perception, "calib_yaw"), perc::CALIB + 3);
        assert_eq!(find(NodeId::Perception, "track3_age"), perc::slot(3, perc::AGE));
        assert_eq!(find(NodeId::Planning, "valid"), plan::VALID);
        assert_eq!(find(NodeId::Planning, "knot3_v"), plan::KNOTS + 5);
        assert_eq!(find(NodeId::Control, "i_lat"), ctrl::I_LAT);
        assert_eq!(find(NodeId::Control, "accel"), ctrl::ACCEL);
    }
}
