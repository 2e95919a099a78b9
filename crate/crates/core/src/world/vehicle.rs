use serde::{Deserialize, Serialize};

/// Fixed simulation step.
pub const DT: f64 = 0.01;
/// Steering angle bound, radians.
pub const STEER_LIMIT: f64 = 0.6;
/// Longitudinal acceleration bound for commands, m/s².
pub const ACCEL_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    pub wheelbase: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, yaw: f64, speed: f64) -> Self {
        Self { x, y, yaw, speed, wheelbase: 2.5, half_length: 2.25, half_width: 0.9 }
    }

    pub fn with_dims(mut self, length: f64, width: f64, wheelbase: f64) -> Self {
        self.half_length = length / 2.0;
        self.half_width = width / 2.0;
        self.wheelbase = wheelbase;
        self
    }
}

/// Kinematic bicycle update (explicit Euler). Steering is clamped to
/// ±[`STEER_LIMIT`] and speed to ≥ 0; acceleration is applied as given.
pub fn step_vehicle(state: &VehicleState, steer: f64, accel: f64, dt: f64) -> VehicleState {
    let steer = steer.clamp(-STEER_LIMIT, STEER_LIMIT);
    let v = state.speed;
    VehicleState {
        x: state.x + v * state.yaw.cos() * dt,
        y: state.y + v * state.yaw.sin() * dt,
        yaw: state.yaw + (v / state.wheelbase) * steer.tan() * dt,
        speed: (v + accel * dt).max(0.0),
        ..*state
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line() {
        let s = step_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 10.0), 0.0, 0.0, 0.1);
        assert_eq!((s.x, s.y, s.yaw, s.speed), (1.0, 0.0, 0.0, 10.0));
    }

    #[test]
    fn yaw_rate() {
        let s = step_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 10.0), 0.1, 0.0, 0.01);
        // (10 / 2.5) * tan(0.1) * 0.01
        assert!((s.yaw - 0.004013386883418022).abs() < 1e-15);
    }

    #[test]
    fn speed_clamped_at_zero() {
        let s = step_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 1.0), 0.0, -20.0, 0.1);
        assert_eq!(s.speed, 0.0);
    }

    #[test]
    fn steer_clamped() {
        let a = step_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 10.0), 2.0, 0.0, 0.01);
        let b = step_vehicle(&VehicleState::new(0.0, 0.0, 0.0, 10.0), STEER_LIMIT, 0.0, 0.01);
        assert_eq!(a, b);
    }
}
