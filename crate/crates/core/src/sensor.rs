//! Object-list sensor: ground truth seen through (possibly wrong) extrinsics,
//! with temporal and spatial faults.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::world::{wrap_pi, WorldState};

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Sensor pose in the ego frame. Rotation is applied Z-Y-X (yaw, pitch, roll)
/// and maps sensor coordinates to ego coordinates: `p_ego = R·p_sensor + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Extrinsics {
    pub translation: Vec3,
    /// (yaw, pitch, roll)
    pub rotation: Vec3,
}

impl Extrinsics {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn matrix(&self) -> Mat3 {
        let [yaw, pitch, roll] = self.rotation;
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    }

    /// Sensor → ego.
    pub fn to_ego(&self, p: Vec3) -> Vec3 {
        let r = self.matrix();
        let t = self.translation;
        [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i])
    }

    /// Ego → sensor.
    pub fn to_sensor(&self, p: Vec3) -> Vec3 {
        let r = self.matrix();
        let q = [p[0] - self.translation[0], p[1] - self.translation[1], p[2] - self.translation[2]];
        [0, 1, 2].map(|i| r[0][i] * q[0] + r[1][i] * q[1] + r[2][i] * q[2])
    }

    fn rotate_to_ego(&self, v: Vec3) -> Vec3 {
        let r = self.matrix();
        [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
    }

    fn rotate_to_sensor(&self, v: Vec3) -> Vec3 {
        let r = self.matrix();
        [0, 1, 2].map(|i| r[0][i] * v[0] + r[1][i] * v[1] + r[2][i] * v[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Frames per second.
    pub rate: f64,
    pub fov_half_angle: f64,
    pub max_range: f64,
    pub position_noise_sigma: f64,
    pub yaw_noise_sigma: f64,
    /// Frames arriving later than this after their nominal time are discarded.
    pub out_of_order_threshold: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            rate: 10.0,
            fov_half_angle: std::f64::consts::PI,
            max_range: 100.0,
            position_noise_sigma: 0.0,
            yaw_noise_sigma: 0.0,
            out_of_order_threshold: 0.05,
        }
    }
}

impl SensorConfig {
    pub fn period(&self) -> f64 {
        1.0 / self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub seq: u64,
    pub timestamp: f64,
    pub dropped: bool,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TemporalFaultSpec {
    pub drop_rate: f64,
    pub delay_sigma: f64,
}

/// Extrinsic perturbation: fixed offsets plus optional Gaussian components.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialFaultSpec {
    pub translation: Vec3,
    pub rotation: Vec3,
    pub translation_sigma: f64,
    pub rotation_sigma: f64,
}

/// Ground truth → sensor frame through the `actual` extrinsics.
pub fn sample_frame<R: Rng>(
    world: &WorldState,
    actual: &Extrinsics,
    cfg: &SensorConfig,
    seq: u64,
    rng: &mut R,
) -> SensorFrame {
    let ego = &world.ego;
    let (s, c) = ego.yaw.sin_cos();
    let mut detections = Vec::new();
    for agent in &world.agents {
        let (dx, dy) = (agent.state.x - ego.x, agent.state.y - ego.y);
        let p_ego = [c * dx + s * dy, -s * dx + c * dy, 0.0];
        let p = actual.to_sensor(p_ego);
        let range = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if range > cfg.max_range || p[1].atan2(p[0]).abs() > cfg.fov_half_angle {
            continue;
        }
        let rel_yaw = agent.state.yaw - ego.yaw;
        let h = actual.rotate_to_sensor([rel_yaw.cos(), rel_yaw.sin(), 0.0]);
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nyaw: f64 = rng.sample(StandardNormal);
        detections.push(Detection {
            object_id: agent.id,
            x: p[0] + cfg.position_noise_sigma * nx,
            y: p[1] + cfg.position_noise_sigma * ny,
            z: p[2],
            yaw: wrap_pi(h[1].atan2(h[0]) + cfg.yaw_noise_sigma * nyaw),
            range,
        });
    }
    SensorFrame { seq, timestamp: seq as f64 / cfg.rate, dropped: false, detections }
}

/// Applies fixed offsets and Gaussian perturbations to the nominal extrinsics.
pub fn perturb_extrinsics<R: Rng>(nominal: &Extrinsics, spec: &SpatialFaultSpec, rng: &mut R) -> Extrinsics {
    let mut out = *nominal;
    for i in 0..3 {
        let n: f64 = rng.sample(StandardNormal);
        out.translation[i] += spec.translation[i] + spec.translation_sigma * n;
    }
    for i in 0..3 {
        let n: f64 = rng.sample(StandardNormal);
        out.rotation[i] = wrap_pi(out.rotation[i] + spec.rotation[i] + spec.rotation_sigma * n);
    }
    out
}

/// Drops the frame with probability `drop_rate` by delaying it past the
/// out-of-order threshold; otherwise adds |N(0, delay_sigma)| of jitter.
pub fn apply_temporal_fault<R: Rng>(
    frame: &SensorFrame,
    spec: &TemporalFaultSpec,
    cfg: &SensorConfig,
    rng: &mut R,
) -> SensorFrame {
    let u: f64 = rng.random();
    let z: f64 = rng.sample(StandardNormal);
    let mut out = frame.clone();
    if u < spec.drop_rate {
        out.timestamp += cfg.out_of_order_threshold + cfg.period();
        out.dropped = true;
    } else {
        let jitter = (spec.delay_sigma * z).abs();
        out.timestamp += jitter;
        out.dropped = jitter > cfg.out_of_order_threshold;
    }
    if out.dropped {
        out.detections.clear();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("frame {0} was dropped")]
pub struct DroppedFrame(pub u64);

/// Maps detections back to the ego frame assuming the `nominal` calibration.
pub fn to_ego_frame(frame: &SensorFrame, nominal: &Extrinsics) -> Result<Vec<Detection>, DroppedFrame> {
    if frame.dropped {
        return Err(DroppedFrame(frame.seq));
    }
    Ok(frame
        .detections
        .iter()
        .map(|d| {
            let p = nominal.to_ego([d.x, d.y, d.z]);
            let h = nominal.rotate_to_ego([d.yaw.cos(), d.yaw.sin(), 0.0]);
            Detection { x: p[0], y: p[1], z: p[2], yaw: h[1].atan2(h[0]), ..*d }
        })
        .collect())
}
