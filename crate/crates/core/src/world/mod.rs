//! Ground-truth world: parametric road, kinematic vehicles, scripted traffic
//! and safety events.

mod behavior;
mod collision;
mod road;
mod vehicle;

use serde::{Deserialize, Serialize};

pub use behavior::{agent_command, lateral_reference, step_behaviors, BehaviorScript, STOP_DECEL};
pub use collision::{check_collision, check_off_lane, rectangles_overlap};
pub use road::{wrap_pi, Frenet, RoadError, RoadModel};
pub use vehicle::{step_vehicle, VehicleState, ACCEL_LIMIT, DT, STEER_LIMIT};

use crate::scenario::{AgentDecl, BehaviorDecl, ScenarioSpec, VehicleDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Collision { agent: u32 },
    OffLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldEvent {
    pub tick: u64,
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub name: String,
    pub state: VehicleState,
    pub script: BehaviorScript,
    /// Lateral offset of the lane the agent started in.
    pub home_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub time: f64,
    pub ego: VehicleState,
    pub agents: Vec<Agent>,
    pub events: Vec<WorldEvent>,
}

fn place(road: &RoadModel, lane: u32, s: f64, speed: f64, dims: &VehicleDims) -> VehicleState {
    let (x, y, yaw) = road.pose(s, road.lane_center(lane));
    VehicleState::new(x, y, yaw, speed).with_dims(dims.length.value(), dims.width.value(), dims.wheelbase.value())
}

fn script(decl: &AgentDecl) -> BehaviorScript {
    match &decl.behavior {
        BehaviorDecl::Cruise => BehaviorScript::Cruise,
        BehaviorDecl::Stop => BehaviorScript::Stop,
        BehaviorDecl::EmergencyBrake { at, decel } => {
            BehaviorScript::EmergencyBrake { at: at.value(), decel: decel.value() }
        }
        BehaviorDecl::CutIn { at, target_lane, duration } => {
            BehaviorScript::CutIn { at: at.value(), target_lane: target_lane.value(), duration: duration.value() }
        }
    }
}

impl WorldState {
    pub fn new(ego: VehicleState, agents: Vec<Agent>) -> Self {
        Self { tick: 0, time: 0.0, ego, agents, events: Vec::new() }
    }

    /// Initial world for a resolved scenario.
    pub fn from_scenario(spec: &ScenarioSpec, road: &RoadModel) -> Self {
        let e = &spec.ego;
        let ego = place(road, e.lane.value(), e.s.value(), e.speed.value(), &e.dims);
        let agents = spec
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| Agent {
                id: i as u32,
                name: a.name.clone(),
                state: place(road, a.lane.value(), a.s.value(), a.speed.value(), &a.dims),
                script: script(a),
                home_d: road.lane_center(a.lane.value()),
            })
            .collect();
        Self::new(ego, agents)
    }

    /// Checks for collision and off-lane at the current state and appends
    /// any events found. Returns the events of this tick.
    pub fn record_events(&mut self, road: &RoadModel) -> Vec<WorldEvent> {
        let mut found = Vec::new();
        if let Some(ev) = check_collision(self) {
            found.push(ev);
        }
        if check_off_lane(self, road) {
            found.push(WorldEvent { tick: self.tick, time: self.time, kind: EventKind::OffLane });
        }
        self.events.extend(found.iter().copied());
        found
    }
}
