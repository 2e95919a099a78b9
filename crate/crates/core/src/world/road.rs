use std::f64::consts::PI;

use thiserror::Error;

use crate::scenario::RoadDecl;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoadError {
    #[error("road needs at least one lane")]
    NoLanes,
    #[error("lane width must be positive, found {0}")]
    BadWidth(f64),
    #[error("segment {0} has non-positive length")]
    BadLength(usize),
    #[error("segment {0} curvature folds the inner lane")]
    TooCurved(usize),
    #[error("s = {s} lies outside the road [0, {total}]")]
    OutOfRange { s: f64, total: f64 },
}

/// Wraps an angle into (−π, π].
pub fn wrap_pi(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    } else if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    length: f64,
    curvature: f64,
    s0: f64,
    x0: f64,
    y0: f64,
    theta0: f64,
}

impl Segment {
    fn pose(&self, u: f64, d: f64) -> (f64, f64, f64) {
        let k = self.curvature;
        if k == 0.0 {
            let (sn, cs) = self.theta0.sin_cos();
            (self.x0 + u * cs - d * sn, self.y0 + u * sn + d * cs, self.theta0)
        } else {
            let r = 1.0 / k;
            let (cx, cy) = self.center();
            let th = self.theta0 + k * u;
            let (sn, cs) = th.sin_cos();
            (cx + (r - d) * sn, cy - (r - d) * cs, th)
        }
    }

    fn center(&self) -> (f64, f64) {
        let r = 1.0 / self.curvature;
        let (sn, cs) = self.theta0.sin_cos();
        (self.x0 - r * sn, self.y0 + r * cs)
    }

    /// Local (u, d) of a point, with `u` unbounded along the segment's
    /// own geometry (a line, or the arc's angle within ±π of its midpoint).
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.curvature;
        if k == 0.0 {
            let (sn, cs) = self.theta0.sin_cos();
            let (dx, dy) = (x - self.x0, y - self.y0);
            (dx * cs + dy * sn, -dx * sn + dy * cs)
        } else {
            let (cx, cy) = self.center();
            let (vx, vy) = (x - cx, y - cy);
            let sign = k.signum();
            let th = (sign * vx).atan2(-sign * vy);
            let d = 1.0 / k - sign * vx.hypot(vy);
            let half = k * self.length / 2.0;
            let u = (wrap_pi(th - self.theta0 - half) + half) / k;
            (u, d)
        }
    }
}

fn start_extension() -> Segment {
    Segment { length: f64::INFINITY, curvature: 0.0, s0: 0.0, x0: 0.0, y0: 0.0, theta0: 0.0 }
}

/// Frenet coordinates of a point relative to the road reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frenet {
    pub s: f64,
    pub d: f64,
    /// Road tangent heading at `s`.
    pub heading: f64,
    /// Road curvature at `s` (zero beyond either end).
    pub curvature: f64,
}

/// A chain of straight and constant-curvature segments. The reference line
/// is the right edge of lane 0 and lanes are stacked to the left (+d).
#[derive(Debug, Clone, PartialEq)]
pub struct RoadModel {
    pub lane_count: u32,
    pub lane_width: f64,
    segments: Vec<Segment>,
    total: f64,
}

impl RoadModel {
    pub fn new(lane_count: u32, lane_width: f64, segments: &[(f64, f64)]) -> Result<Self, RoadError> {
        if lane_count == 0 {
            return Err(RoadError::NoLanes);
        }
        if !(lane_width > 0.0) {
            return Err(RoadError::BadWidth(lane_width));
        }
        let mut segs = Vec::with_capacity(segments.len());
        let (mut s0, mut x0, mut y0, mut theta0) = (0.0, 0.0, 0.0, 0.0);
        for (i, &(length, curvature)) in segments.iter().enumerate() {
            if !(length > 0.0) {
                return Err(RoadError::BadLength(i));
            }
            if curvature.abs() * lane_width >= 1.0 {
                return Err(RoadError::TooCurved(i));
            }
            let seg = Segment { length, curvature, s0, x0, y0, theta0 };
            let (x1, y1, t1) = seg.pose(length, 0.0);
            segs.push(seg);
            s0 += length;
            x0 = x1;
            y0 = y1;
            theta0 = t1;
        }
        if segs.is_empty() {
            return Err(RoadError::BadLength(0));
        }
        Ok(Self { lane_count, lane_width, segments: segs, total: s0 })
    }

    /// Builds the road from a resolved declaration.
    pub fn from_decl(decl: &RoadDecl) -> Result<Self, RoadError> {
        let segs: Vec<(f64, f64)> = decl.segments.iter().map(|s| (s.length.value(), s.curvature.value())).collect();
        Self::new(decl.lane_count.value(), decl.lane_width.value(), &segs)
    }

    pub fn straight(lane_count: u32, lane_width: f64, length: f64) -> Self {
        Self::new(lane_count, lane_width, &[(length, 0.0)]).expect("valid straight road")
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    pub fn width(&self) -> f64 {
        self.lane_count as f64 * self.lane_width
    }

    pub fn lane_center(&self, lane: u32) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }

    /// Lane whose centerline is nearest to `d`, clamped to the road.
    pub fn nearest_lane(&self, d: f64) -> u32 {
        let i = (d / self.lane_width).floor();
        i.clamp(0.0, (self.lane_count - 1) as f64) as u32
    }

    fn segment_at(&self, s: f64) -> &Segment {
        let i = self.segments.partition_point(|g| g.s0 <= s);
        &self.segments[i.saturating_sub(1)]
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        if s < 0.0 || s > self.total {
            return 0.0;
        }
        self.segment_at(s).curvature
    }

    /// Exact pose at arc length `s` and lateral offset `d`.
    pub fn frenet_to_cartesian(&self, s: f64, d: f64) -> Result<(f64, f64, f64), RoadError> {
        if !(0.0..=self.total).contains(&s) {
            return Err(RoadError::OutOfRange { s, total: self.total });
        }
        Ok(self.pose(s, d))
    }

    /// Like [`frenet_to_cartesian`](Self::frenet_to_cartesian) but continues
    /// the road straight beyond both ends.
    pub fn pose(&self, s: f64, d: f64) -> (f64, f64, f64) {
        if s < 0.0 {
            return start_extension().pose(s, d);
        }
        if s > self.total {
            let last = self.segments.last().unwrap();
            let (x, y, th) = last.pose(last.length, 0.0);
            let end = Segment { length: f64::INFINITY, curvature: 0.0, s0: self.total, x0: x, y0: y, theta0: th };
            return end.pose(s - self.total, d);
        }
        let seg = self.segment_at(s);
        seg.pose(s - seg.s0, d)
    }

    /// Projects a Cartesian point onto the road. Among segments whose span
    /// contains the foot point, the one with the smallest |d| wins; if none
    /// does, the nearest clamped foot point is used.
    pub fn project(&self, x: f64, y: f64) -> Frenet {
        let n = self.segments.len();
        let mut inside: Option<Frenet> = None;
        let mut nearest: Option<(f64, Frenet)> = None;
        for (i, seg) in self.segments.iter().enumerate() {
            let (u, d) = seg.local(x, y);
            let lo = if i == 0 && seg.curvature == 0.0 { f64::NEG_INFINITY } else { 0.0 };
            let hi = if i + 1 == n && seg.curvature == 0.0 { f64::INFINITY } else { seg.length };
            let uc = u.clamp(lo, hi);
            let f = Frenet { s: seg.s0 + uc, d, heading: seg.theta0 + seg.curvature * uc, curvature: seg.curvature };
            if (u - uc).abs() <= 1e-9 {
                if inside.is_none_or(|b| d.abs() < b.d.abs()) {
                    inside = Some(f);
                }
            } else {
                let (qx, qy, _) = seg.pose(uc, d);
                let miss = (qx - x).hypot(qy - y);
                if nearest.is_none_or(|(m, _)| miss < m) {
                    nearest = Some((miss, f));
                }
            }
        }
        if self.segments[0].curvature != 0.0 {
            let (u, d) = start_extension().local(x, y);
            if u < 0.0 && inside.is_none_or(|b| d.abs() < b.d.abs()) {
                inside = Some(Frenet { s: u, d, heading: 0.0, curvature: 0.0 });
            }
        }
        let last = &self.segments[n - 1];
        if last.curvature != 0.0 {
            // beyond a curved final segment the road continues straight
            let (ex, ey, th) = last.pose(last.length, 0.0);
            let end = Segment { length: f64::INFINITY, curvature: 0.0, s0: self.total, x0: ex, y0: ey, theta0: th };
            let (u, d) = end.local(x, y);
            if u > 0.0 && inside.is_none_or(|b| d.abs() < b.d.abs()) {
                inside = Some(Frenet { s: self.total + u, d, heading: th, curvature: 0.0 });
            }
        }
        let mut f = inside.or(nearest.map(|(_, f)| f)).expect("road has segments");
        if f.s < 0.0 || f.s > self.total {
            f.curvature = 0.0;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_pose() {
        let r = RoadModel::straight(2, 3.5, 100.0);
        assert_eq!(r.frenet_to_cartesian(10.0, 0.0).unwrap(), (10.0, 0.0, 0.0));
        assert_eq!(r.frenet_to_cartesian(10.0, 1.75).unwrap(), (10.0, 1.75, 0.0));
        assert!(r.frenet_to_cartesian(100.5, 0.0).is_err());
    }

    #[test]
    fn quarter_circle() {
        let k = 0.02;
        let r = RoadModel::new(1, 3.5, &[(PI / (2.0 * k), k)]).unwrap();
        let (x, y, th) = r.frenet_to_cartesian(PI / (2.0 * k), 0.0).unwrap();
        assert!((x - 50.0).abs() < 1e-9 && (y - 50.0).abs() < 1e-9 && (th - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn right_turn_offsets_outward() {
        let r = RoadModel::new(1, 3.5, &[(50.0, -0.02)]).unwrap();
        let (x, y, _) = r.frenet_to_cartesian(0.0, 2.0).unwrap();
        assert!((x - 0.0).abs() < 1e-12 && (y - 2.0).abs() < 1e-12);
        let f = r.project(30.0, -5.0);
        let (px, py, _) = r.pose(f.s, f.d);
        assert!((px - 30.0).abs() < 1e-9 && (py + 5.0).abs() < 1e-9);
    }

    #[test]
    fn project_round_trip_mixed() {
        let r = RoadModel::new(2, 3.5, &[(100.0, 0.0), (120.0, 0.02), (60.0, 0.0), (80.0, -0.015)]).unwrap();
        for i in 0..200 {
            let s = i as f64 * r.total_length() / 199.0;
            for d in [0.3, 1.75, 5.25, 6.9] {
                let (x, y, th) = r.frenet_to_cartesian(s, d).unwrap();
                let f = r.project(x, y);
                assert!((f.s - s).abs() < 1e-6 && (f.d - d).abs() < 1e-6, "s={s} d={d} got {f:?}");
                assert!(wrap_pi(f.heading - th).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn beyond_ends_is_straight() {
        let r = RoadModel::new(1, 3.5, &[(50.0, 0.01)]).unwrap();
        let (x, y, _) = r.pose(60.0, 1.0);
        let f = r.project(x, y);
        assert!((f.s - 60.0).abs() < 1e-9 && (f.d - 1.0).abs() < 1e-9);
        let f = r.project(-5.0, 1.0);
        assert!((f.s + 5.0).abs() < 1e-12 && (f.d - 1.0).abs() < 1e-12, "{f:?}");
        assert_eq!(r.pose(-5.0, 1.0), (-5.0, 1.0, 0.0));
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }
}
