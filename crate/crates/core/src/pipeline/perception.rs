use serde::{Deserialize, Serialize};

use super::registers::perc;
use crate::sensor::{to_ego_frame, Extrinsics, SensorFrame};
use crate::world::{wrap_pi, VehicleState};

/// A detection in the world-aligned bird's-eye-view frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevDetection {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub slot: usize,
    pub id: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    /// Perception cycles since the last matching detection.
    pub age: f64,
}

/// The calibration the perception node believes in.
pub fn assumed_extrinsics(bank: &[f64]) -> Extrinsics {
    let c = &bank[perc::CALIB..perc::CALIB + 6];
    Extrinsics { translation: [c[0], c[1], c[2]], rotation: [c[3], c[4], c[5]] }
}

pub fn set_assumed_extrinsics(bank: &mut [f64], ex: &Extrinsics) {
    bank[perc::CALIB..perc::CALIB + 3].copy_from_slice(&ex.translation);
    bank[perc::CALIB + 3..perc::CALIB + 6].copy_from_slice(&ex.rotation);
}

/// Sensor frame → BEV detections through the assumed calibration and the
/// ego pose, keeping only objects inside the region of interest. `None` for a
/// dropped frame.
pub fn to_bev(bank: &[f64], frame: &SensorFrame, ego: &VehicleState) -> Option<Vec<BevDetection>> {
    let dets = to_ego_frame(frame, &assumed_extrinsics(bank)).ok()?;
    let roi = bank[perc::ROI_RANGE];
    let (s, c) = ego.yaw.sin_cos();
    Some(
        dets.iter()
            .filter(|d| d.x.hypot(d.y) <= roi)
            .map(|d| BevDetection {
                x: ego.x + c * d.x - s * d.y,
                y: ego.y + s * d.x + c * d.y,
                yaw: wrap_pi(ego.yaw + d.yaw),
            })
            .collect(),
    )
}

fn alive(bank: &[f64], i: usize) -> bool {
    bank[perc::slot(i, perc::ALIVE)] > 0.5
}

/// Live tracks, in slot order.
pub fn tracks(bank: &[f64]) -> Vec<TrackedObject> {
    (0..perc::MAX_TRACKS)
        .filter(|&i| alive(bank, i))
        .map(|i| {
            let f = |k| bank[perc::slot(i, k)];
            TrackedObject {
                slot: i,
                id: f(perc::ID),
                x: f(perc::X),
                y: f(perc::Y),
                yaw: f(perc::YAW),
                vx: f(perc::VX),
                vy: f(perc::VY),
                age: f(perc::AGE),
            }
        })
        .collect()
}

/// One tracking cycle. Tracks coast at constant velocity, detections are
/// matched greedily to the nearest predicted track within the gate, and
/// tracks unseen for more than `stale_limit` cycles are deleted. `None`
/// means the frame was dropped and nothing is matched.
pub fn perception_step(bank: &mut [f64], detections: Option<&[BevDetection]>) {
    let dt = bank[perc::FRAME_PERIOD];
    let gate = bank[perc::ASSOC_GATE];
    let live: Vec<usize> = (0..perc::MAX_TRACKS).filter(|&i| alive(bank, i)).collect();
    for &i in &live {
        bank[perc::slot(i, perc::X)] += bank[perc::slot(i, perc::VX)] * dt;
        bank[perc::slot(i, perc::Y)] += bank[perc::slot(i, perc::VY)] * dt;
        bank[perc::slot(i, perc::AGE)] += 1.0;
    }
    let dets = detections.unwrap_or(&[]);

    let mut pairs = Vec::new();
    for &i in &live {
        let (tx, ty) = (bank[perc::slot(i, perc::X)], bank[perc::slot(i, perc::Y)]);
        for (j, d) in dets.iter().enumerate() {
            let dist = (d.x - tx).hypot(d.y - ty);
            if dist <= gate {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut track_used = [false; perc::MAX_TRACKS];
    let mut det_used = vec![false; dets.len()];
    for (_, i, j) in pairs {
        if track_used[i] || det_used[j] {
            continue;
        }
        track_used[i] = true;
        det_used[j] = true;
        let d = dets[j];
        let age = bank[perc::slot(i, perc::AGE)];
        let span = age * dt;
        let last_x = bank[perc::slot(i, perc::X)] - bank[perc::slot(i, perc::VX)] * span;
        let last_y = bank[perc::slot(i, perc::Y)] - bank[perc::slot(i, perc::VY)] * span;
        bank[perc::slot(i, perc::VX)] = (d.x - last_x) / span;
        bank[perc::slot(i, perc::VY)] = (d.y - last_y) / span;
        bank[perc::slot(i, perc::X)] = d.x;
        bank[perc::slot(i, perc::Y)] = d.y;
        bank[perc::slot(i, perc::YAW)] = d.yaw;
        bank[perc::slot(i, perc::AGE)] = 0.0;
    }

    let stale = bank[perc::STALE_LIMIT];
    for &i in &live {
        if !track_used[i] && bank[perc::slot(i, perc::AGE)] > stale {
            bank[perc::slot(i, perc::ALIVE)] = 0.0;
        }
    }

    for (j, d) in dets.iter().enumerate() {
        if det_used[j] {
            continue;
        }
        let Some(i) = (0..perc::MAX_TRACKS).find(|&i| !alive(bank, i)) else {
            break;
        };
        let id = bank[perc::NEXT_ID];
        bank[perc::NEXT_ID] = id + 1.0;
        let vals = [1.0, id, d.x, d.y, d.yaw, 0.0, 0.0, 0.0];
        bank[perc::slot(i, 0)..perc::slot(i, 0) + perc::SLOT].copy_from_slice(&vals);
    }
}
