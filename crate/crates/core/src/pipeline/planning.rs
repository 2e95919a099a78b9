use serde::{Deserialize, Serialize};

use super::perception::TrackedObject;
use super::registers::plan;
use super::saturate;
use crate::world::{RoadModel, VehicleState};

/// Longest horizon, in samples, the planner will evaluate.
const MAX_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedProfile {
    Hold,
    Follow,
    Stop,
}

impl SpeedProfile {
    pub const ALL: [SpeedProfile; 3] = [SpeedProfile::Hold, SpeedProfile::Follow, SpeedProfile::Stop];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub lateral_offset_target: f64,
    /// (s, v) knots at 1 s spacing.
    pub speed_profile: Vec<(f64, f64)>,
    pub cost: f64,
    pub valid: bool,
}

/// One lattice cell with its cost breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub offset: f64,
    pub profile: SpeedProfile,
    pub feasible: bool,
    pub risk: f64,
    pub lane_cost: f64,
    pub progress_cost: f64,
    pub v_end: f64,
    /// Speed the profile converges to.
    pub v_goal: f64,
}

impl Candidate {
    pub fn cost(&self, bank: &[f64]) -> f64 {
        if !self.feasible {
            return f64::INFINITY;
        }
        bank[plan::W_COL] * self.risk + bank[plan::W_LANE] * self.lane_cost + bank[plan::W_PROG] * self.progress_cost
    }
}

/// (Δs, v) after time `t` when moving from `v0` toward `goal` at the given
/// acceleration or deceleration magnitude, then holding.
fn ramp(v0: f64, goal: f64, up: f64, down: f64, t: f64) -> (f64, f64) {
    let a = if goal >= v0 { up } else { -down };
    let t_reach = if a == 0.0 { f64::INFINITY } else { (goal - v0) / a };
    if t <= t_reach {
        (v0 * t + 0.5 * a * t * t, v0 + a * t)
    } else {
        let s_reach = v0 * t_reach + 0.5 * a * t_reach * t_reach;
        (s_reach + goal * (t - t_reach), goal)
    }
}

struct ObjPath {
    /// (s, d) per sample.
    at: Vec<(f64, f64)>,
    v_along: f64,
}

fn lateral_at(d0: f64, target: f64, rate: f64, t: f64) -> f64 {
    let step = rate * t;
    d0 + saturate(target - d0, step)
}

/// Enumerates the lattice in tie-break order: offsets [current lane,
/// current − nudge, current + nudge, lane right, lane left], each with
/// [hold, follow, stop].
pub fn candidates(bank: &[f64], tracks: &[TrackedObject], ego: &VehicleState, road: &RoadModel) -> Vec<Candidate> {
    let f = road.project(ego.x, ego.y);
    let (s_e, d_e, v_e) = (f.s, f.d, ego.speed);
    let w = road.lane_width;
    let center = road.lane_center(road.nearest_lane(d_e));
    let nudge = bank[plan::NUDGE];
    let offsets = [center, center - nudge, center + nudge, center - w, center + w];

    let horizon = bank[plan::HORIZON];
    let step = bank[plan::SAMPLE_DT];
    let n = ((horizon / step).round().max(0.0) as usize).min(MAX_SAMPLES);
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * step).collect();

    let objs: Vec<ObjPath> = tracks
        .iter()
        .map(|t| {
            let at: Vec<(f64, f64)> = times
                .iter()
                .map(|&tt| {
                    let p = road.project(t.x + t.vx * tt, t.y + t.vy * tt);
                    (p.s, p.d)
                })
                .collect();
            let h = road.project(t.x, t.y).heading;
            ObjPath { at, v_along: t.vx * h.cos() + t.vy * h.sin() }
        })
        .collect();

    let hl = ego.half_length + bank[plan::OBJ_HALF_LENGTH];
    let hw = ego.half_width + bank[plan::OBJ_HALF_WIDTH];
    let (m_long, m_lat) = (bank[plan::MARGIN_LONG], bank[plan::MARGIN_LAT]);
    let v_des = bank[plan::V_DESIRED];
    let (up, d_follow, d_stop) = (bank[plan::ACCEL_LIMIT], bank[plan::DECEL_FOLLOW], bank[plan::DECEL_STOP]);
    let (headway, standstill) = (bank[plan::HEADWAY], bank[plan::STANDSTILL_GAP]);
    let lat_rate = bank[plan::LAT_RATE];
    let lane_change = bank[plan::LANE_CHANGE] > 0.5;
    let mission = bank[plan::MISSION_LANE];

    let mut out = Vec::with_capacity(offsets.len() * 3);
    for (k, &offset) in offsets.iter().enumerate() {
        let inside = offset >= ego.half_width && offset <= road.width() - ego.half_width;
        let feasible_offset = inside && (k < 3 || lane_change);
        // nearest object ahead sharing the candidate corridor at any sample
        let lead = objs
            .iter()
            .filter(|o| o.at[0].0 > s_e && o.at.iter().any(|&(_, d)| (d - offset).abs() < hw + m_lat))
            .min_by(|a, b| a.at[0].0.total_cmp(&b.at[0].0));
        for profile in SpeedProfile::ALL {
            let (goal, down) = match profile {
                SpeedProfile::Hold => (v_des, d_follow),
                SpeedProfile::Follow => match lead {
                    Some(o) => {
                        let gap = o.at[0].0 - s_e - hl;
                        let want =
                            o.v_along + bank[plan::FOLLOW_GAIN] * (gap - (standstill + headway * o.v_along.max(0.0)));
                        (want.clamp(0.0, v_des.max(0.0)), d_follow)
                    }
                    None => (v_des, d_follow),
                },
                SpeedProfile::Stop => (0.0, d_stop),
            };
            let mut risk: f64 = 0.0;
            for (j, &t) in times.iter().enumerate() {
                let (ds, v) = ramp(v_e, goal, up, down, t);
                let s = s_e + ds;
                let d = lateral_at(d_e, offset, lat_rate, t);
                for o in &objs {
                    let (so, d_o) = o.at[j];
                    let lat = (d_o - d).abs();
                    if (so - s).abs() < hl + m_long && lat < hw + m_lat {
                        risk = f64::INFINITY;
                    } else if so > s && lat < hw + m_lat {
                        let gap = so - s - hl;
                        let g = standstill + headway * v;
                        risk = risk.max(((g - gap) / g).clamp(0.0, 1.0));
                    }
                }
            }
            let (_, v_end) = ramp(v_e, goal, up, down, horizon.min(MAX_SAMPLES as f64 * step));
            out.push(Candidate {
                offset,
                profile,
                feasible: feasible_offset,
                risk,
                lane_cost: (offset - mission).abs(),
                progress_cost: (v_des - v_end).powi(2),
                v_end,
                v_goal: goal,
            });
        }
    }
    out
}

/// Index of the cheapest candidate; ties go to the earlier one. `None` when
/// every candidate is infeasible or has infinite cost.
pub fn select(bank: &[f64], cands: &[Candidate]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cands.iter().enumerate() {
        let cost = c.cost(bank);
        if cost.is_finite() && best.is_none_or(|(_, b)| cost < b) {
            best = Some((i, cost));
        }
    }
    best.map(|(i, _)| i)
}

/// One planning cycle. Writes the chosen trajectory to the output registers
/// and returns it; when nothing is feasible the plan is marked invalid and
/// the previous lateral target is kept.
pub fn plan_step(bank: &mut [f64], tracks: &[TrackedObject], ego: &VehicleState, road: &RoadModel) -> Trajectory {
    let cands = candidates(bank, tracks, ego, road);
    let Some(i) = select(bank, &cands) else {
        bank[plan::VALID] = 0.0;
        bank[plan::COST] = f64::INFINITY;
        return Trajectory {
            lateral_offset_target: bank[plan::LATERAL_TARGET],
            speed_profile: Vec::new(),
            cost: f64::INFINITY,
            valid: false,
        };
    };
    let c = cands[i];
    let cost = c.cost(bank);
    let s0 = road.project(ego.x, ego.y).s;
    let down = if c.profile == SpeedProfile::Stop { bank[plan::DECEL_STOP] } else { bank[plan::DECEL_FOLLOW] };
    let mut knots = Vec::with_capacity(plan::N_KNOTS);
    for k in 0..plan::N_KNOTS {
        let (ds, v) = ramp(ego.speed, c.v_goal, bank[plan::ACCEL_LIMIT], down, (k + 1) as f64);
        let v = v.max(0.0);
        bank[plan::KNOTS + 2 * k] = s0 + ds;
        bank[plan::KNOTS + 2 * k + 1] = v;
        knots.push((s0 + ds, v));
    }
    bank[plan::LATERAL_TARGET] = c.offset;
    bank[plan::COST] = cost;
    bank[plan::VALID] = 1.0;
    Trajectory { lateral_offset_target: c.offset, speed_profile: knots, cost, valid: true }
}
