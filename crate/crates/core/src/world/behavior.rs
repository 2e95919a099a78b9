use serde::{Deserialize, Serialize};

use super::road::{wrap_pi, RoadModel};
use super::vehicle::step_vehicle;
use super::{Agent, WorldState};

/// Deceleration used by the `stop` behavior.
pub const STOP_DECEL: f64 = 3.0;
/// Lateral error gain of the agent lane tracker, 1/s.
pub const AGENT_K_D: f64 = 1.5;
/// Heading error gain of the agent lane tracker, 1/s.
pub const AGENT_K_PSI: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviorScript {
    Cruise,
    EmergencyBrake { at: f64, decel: f64 },
    CutIn { at: f64, target_lane: u32, duration: f64 },
    Stop,
}

/// Quintic smoothstep with its first and second derivatives on [0, 1].
fn smoothstep(t: f64) -> (f64, f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let h = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    let dh = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let ddh = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (h, dh, ddh)
}

/// Lateral reference (d, ḋ, d̈) for an agent at time `t`.
pub fn lateral_reference(agent: &Agent, road: &RoadModel, t: f64) -> (f64, f64, f64) {
    match agent.script {
        BehaviorScript::CutIn { at, target_lane, duration } => {
            let d0 = agent.home_d;
            let d1 = road.lane_center(target_lane);
            let (h, dh, ddh) = smoothstep((t - at) / duration);
            let span = d1 - d0;
            (d0 + span * h, span * dh / duration, span * ddh / (duration * duration))
        }
        _ => (agent.home_d, 0.0, 0.0),
    }
}

/// (steer, accel) an agent's script asks for at time `t`.
pub fn agent_command(agent: &Agent, road: &RoadModel, t: f64) -> (f64, f64) {
    let st = &agent.state;
    let accel = match agent.script {
        BehaviorScript::Cruise | BehaviorScript::CutIn { .. } => 0.0,
        BehaviorScript::EmergencyBrake { at, decel } => {
            if t >= at {
                -decel
            } else {
                0.0
            }
        }
        BehaviorScript::Stop => {
            if st.speed > 0.0 {
                -STOP_DECEL
            } else {
                0.0
            }
        }
    };
    if st.speed == 0.0 {
        return (0.0, accel);
    }
    let f = road.project(st.x, st.y);
    let (d_ref, dd_ref, ddd_ref) = lateral_reference(agent, road, t);
    let v = st.speed.max(1.0);
    let e = f.d - d_ref;
    let psi_err = wrap_pi(st.yaw - f.heading);
    let e_rate = v * psi_err.sin() - dd_ref;
    let psi_cmd = dd_ref.atan2(v) - (AGENT_K_D * e / v).atan();
    let psi_cmd_rate = (ddd_ref - AGENT_K_D * e_rate) / v;
    let kappa = f.curvature / (1.0 - f.curvature * f.d);
    let steer = (st.wheelbase * (kappa + (psi_cmd_rate + AGENT_K_PSI * wrap_pi(psi_cmd - psi_err)) / v)).atan();
    (steer, accel)
}

/// Advances every agent by one step according to its script and moves the
/// world clock forward. The ego is left untouched.
pub fn step_behaviors(world: &WorldState, road: &RoadModel, dt: f64) -> WorldState {
    let mut next = world.clone();
    for agent in &mut next.agents {
        let (steer, accel) = agent_command(agent, road, world.time);
        agent.state = step_vehicle(&agent.state, steer, accel, dt);
    }
    next.tick += 1;
    next.time = next.tick as f64 * dt;
    next
}
