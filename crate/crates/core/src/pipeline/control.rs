use serde::{Deserialize, Serialize};

use super::registers::{ctrl, plan};
use super::saturate;
use crate::world::{wrap_pi, RoadModel, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub steer: f64,
    pub accel: f64,
    pub tick: u64,
}

/// Speed the controller tracks: the plan's first knot.
pub fn target_speed(plan_bank: &[f64]) -> f64 {
    plan_bank[plan::KNOTS + 1].max(0.0)
}

/// PID lateral and longitudinal control toward the current plan.
///
/// Lateral: `kp·sat(e) + ki·∫e + kd·(−ḋ) − k_yaw·ψ_rel + k_ff·atan(L·κ/(1−κd))`,
/// where `e` is the offset from the lateral target. Longitudinal:
/// `kp·(v* − v) + ki·∫(v* − v) + kd·(−v̇)`. Derivatives act on the
/// measurement so target jumps do not kick. An invalid plan gives a full
/// brake with zero steer.
pub fn control_step(
    bank: &mut [f64],
    plan_bank: &[f64],
    ego: &VehicleState,
    road: &RoadModel,
    dt: f64,
    tick: u64,
) -> ControlCommand {
    let f = road.project(ego.x, ego.y);
    let (d_prev, v_prev) = (bank[ctrl::D_PREV], bank[ctrl::V_PREV]);
    bank[ctrl::D_PREV] = f.d;
    bank[ctrl::V_PREV] = ego.speed;

    if !(plan_bank[plan::VALID] > 0.5) {
        bank[ctrl::STEER] = 0.0;
        bank[ctrl::ACCEL] = -bank[ctrl::ACCEL_MAX];
        return ControlCommand { steer: bank[ctrl::STEER], accel: bank[ctrl::ACCEL], tick };
    }

    let lim = bank[ctrl::CTE_LIMIT];
    let e = saturate(plan_bank[plan::LATERAL_TARGET] - f.d, lim);
    let il = bank[ctrl::I_LIMIT_LAT];
    bank[ctrl::I_LAT] = saturate(bank[ctrl::I_LAT] + e * dt, il);
    let d_rate = (f.d - d_prev) / dt;
    let psi = wrap_pi(ego.yaw - f.heading);
    let k = f.curvature;
    let ff = (ego.wheelbase * k / (1.0 - k * f.d)).atan();
    let smax = bank[ctrl::STEER_MAX];
    let steer = bank[ctrl::KP_LAT] * e + bank[ctrl::KI_LAT] * bank[ctrl::I_LAT]
        - bank[ctrl::KD_LAT] * d_rate
        - bank[ctrl::K_YAW] * psi
        + bank[ctrl::K_FF] * ff;
    bank[ctrl::STEER] = saturate(steer, smax);

    let ev = target_speed(plan_bank) - ego.speed;
    let ilon = bank[ctrl::I_LIMIT_LON];
    bank[ctrl::I_LON] = saturate(bank[ctrl::I_LON] + ev * dt, ilon);
    let accel_rate = (ego.speed - v_prev) / dt;
    let amax = bank[ctrl::ACCEL_MAX];
    let accel = bank[ctrl::KP_LON] * ev + bank[ctrl::KI_LON] * bank[ctrl::I_LON] - bank[ctrl::KD_LON] * accel_rate;
    bank[ctrl::ACCEL] = saturate(accel, amax);

    ControlCommand { steer: bank[ctrl::STEER], accel: bank[ctrl::ACCEL], tick }
}
