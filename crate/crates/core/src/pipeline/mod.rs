//! The driving stack as three nodes (perception, planning, control) whose
//! numeric state lives in registered banks that faults can reach.

mod control;
mod perception;
mod planning;
mod registers;

pub use control::{control_step, target_speed, ControlCommand};
pub use perception::{
    assumed_extrinsics, perception_step, set_assumed_extrinsics, to_bev, tracks, BevDetection, TrackedObject,
};
pub use planning::{candidates, plan_step, select, Candidate, SpeedProfile, Trajectory};
pub use registers::{ctrl, manifest, manifest_len, perc, plan, Banks, Gains, Hardware, ManifestEntry, NodeId};

use crate::scenario::MissionKind;
use crate::sensor::{Extrinsics, SensorFrame};
use crate::world::{RoadModel, VehicleState};

/// Symmetric saturation that tolerates corrupted limits: a NaN limit passes
/// `x` through and a negative one pins it to `-limit`.
pub(crate) fn saturate(x: f64, limit: f64) -> f64 {
    x.max(-limit).min(limit)
}

/// Perception and planning run once every this many control ticks.
pub const PERCEPTION_EVERY: u64 = 10;

/// Observer that may rewrite registered state between node executions.
pub trait StateHook {
    fn before_tick(&mut self, _tick: u64, _banks: &mut Banks) {}
    fn after_node(&mut self, _tick: u64, _node: NodeId, _banks: &mut Banks) {}
}

pub struct NoHook;

impl StateHook for NoHook {}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub command: ControlCommand,
    pub perception_ran: bool,
    /// Whether the frame handed to perception this tick was dropped.
    pub frame_dropped: bool,
    pub n_detections: usize,
    pub n_tracks: usize,
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub banks: Banks,
    pub road: RoadModel,
    pub dt: f64,
    pub executions: [u64; 3],
}

impl Pipeline {
    /// Builds a pipeline for one trial. The desired speed and mission lane
    /// come from the ego's initial state.
    pub fn new(
        gains: &Gains,
        road: RoadModel,
        mission: MissionKind,
        ego: &VehicleState,
        nominal: &Extrinsics,
        dt: f64,
    ) -> Self {
        let mut banks = Banks::new(gains);
        let f = road.project(ego.x, ego.y);
        let lane_d = road.lane_center(road.nearest_lane(f.d));
        set_assumed_extrinsics(banks.node_mut(NodeId::Perception), nominal);
        let p = banks.node_mut(NodeId::Planning);
        p[plan::V_DESIRED] = ego.speed;
        p[plan::MISSION_LANE] = lane_d;
        p[plan::LANE_CHANGE] = if mission == MissionKind::Overtake { 1.0 } else { 0.0 };
        p[plan::LATERAL_TARGET] = lane_d;
        p[plan::VALID] = 1.0;
        for k in 0..plan::N_KNOTS {
            p[plan::KNOTS + 2 * k] = f.s + ego.speed * (k + 1) as f64;
            p[plan::KNOTS + 2 * k + 1] = ego.speed;
        }
        let c = banks.node_mut(NodeId::Control);
        c[ctrl::D_PREV] = f.d;
        c[ctrl::V_PREV] = ego.speed;
        Self { banks, road, dt, executions: [0; 3] }
    }

    /// Advances the stack by one control period. On perception ticks `frame`
    /// must hold the sensor frame for this cycle.
    pub fn tick(
        &mut self,
        tick: u64,
        frame: Option<&SensorFrame>,
        ego: &VehicleState,
        hook: &mut dyn StateHook,
    ) -> TickOutput {
        hook.before_tick(tick, &mut self.banks);
        let mut out = TickOutput {
            command: ControlCommand { steer: 0.0, accel: 0.0, tick },
            perception_ran: false,
            frame_dropped: false,
            n_detections: 0,
            n_tracks: 0,
            trajectory: None,
        };
        if tick.is_multiple_of(PERCEPTION_EVERY) {
            let frame = frame.expect("perception tick needs a sensor frame");
            let pb = self.banks.node_mut(NodeId::Perception);
            let dets = to_bev(pb, frame, ego);
            out.frame_dropped = dets.is_none();
            out.n_detections = dets.as_ref().map_or(0, |d| d.len());
            perception_step(pb, dets.as_deref());
            self.executions[0] += 1;
            out.perception_ran = true;
            hook.after_node(tick, NodeId::Perception, &mut self.banks);

            let tr = tracks(self.banks.node(NodeId::Perception));
            out.n_tracks = tr.len();
            out.trajectory = Some(plan_step(self.banks.node_mut(NodeId::Planning), &tr, ego, &self.road));
            self.executions[1] += 1;
            hook.after_node(tick, NodeId::Planning, &mut self.banks);
        } else {
            out.n_tracks = tracks(self.banks.node(NodeId::Perception)).len();
        }
        let plan_bank = self.banks.node(NodeId::Planning).to_vec();
        control_step(self.banks.node_mut(NodeId::Control), &plan_bank, ego, &self.road, self.dt, tick);
        self.executions[2] += 1;
        hook.after_node(tick, NodeId::Control, &mut self.banks);
        let c = self.banks.node(NodeId::Control);
        out.command = ControlCommand { steer: c[ctrl::STEER], accel: c[ctrl::ACCEL], tick };
        out
    }
}
