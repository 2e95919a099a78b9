use super::road::RoadModel;
use super::vehicle::VehicleState;
use super::{EventKind, WorldEvent, WorldState};

/// Separating-axis overlap test for two oriented rectangles. Touching edges
/// count as overlap.
pub fn rectangles_overlap(a: &VehicleState, b: &VehicleState) -> bool {
    let (sa, ca) = a.yaw.sin_cos();
    let (sb, cb) = b.yaw.sin_cos();
    let axes = [(ca, sa), (-sa, ca), (cb, sb), (-sb, cb)];
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let radius = |v: &VehicleState, c: f64, s: f64, ax: (f64, f64)| {
        v.half_length * (c * ax.0 + s * ax.1).abs() + v.half_width * (-s * ax.0 + c * ax.1).abs()
    };
    for ax in axes {
        let dist = (dx * ax.0 + dy * ax.1).abs();
        if dist > radius(a, ca, sa, ax) + radius(b, cb, sb, ax) {
            return false;
        }
    }
    true
}

/// First agent (by list order) whose footprint overlaps the ego.
pub fn check_collision(world: &WorldState) -> Option<WorldEvent> {
    world.agents.iter().find(|a| rectangles_overlap(&world.ego, &a.state)).map(|a| WorldEvent {
        tick: world.tick,
        time: world.time,
        kind: EventKind::Collision { agent: a.id },
    })
}

/// Whether the ego center is more than half a lane width from the centerline
/// of the nearest lane on the road.
pub fn check_off_lane(world: &WorldState, road: &RoadModel) -> bool {
    let f = road.project(world.ego.x, world.ego.y);
    let lane = road.nearest_lane(f.d);
    (f.d - road.lane_center(lane)).abs() > road.lane_width / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64, yaw: f64) -> VehicleState {
        VehicleState::new(x, y, yaw, 0.0)
    }

    #[test]
    fn identical_pose_collides() {
        assert!(rectangles_overlap(&car(3.0, 1.0, 0.4), &car(3.0, 1.0, 0.4)));
    }

    #[test]
    fn far_apart() {
        assert!(!rectangles_overlap(&car(0.0, 0.0, 0.0), &car(100.0, 0.0, 0.0)));
    }

    #[test]
    fn touching_edges_collide() {
        assert!(rectangles_overlap(&car(0.0, 0.0, 0.0), &car(4.5, 0.0, 0.0)));
        assert!(!rectangles_overlap(&car(0.0, 0.0, 0.0), &car(4.5 + 1e-9, 0.0, 0.0)));
    }

    #[test]
    fn rotated_gap_separates() {
        // diagonal neighbour: corners do not reach each other
        assert!(!rectangles_overlap(&car(0.0, 0.0, 0.0), &car(4.0, 2.5, std::f64::consts::FRAC_PI_4)));
        assert!(rectangles_overlap(&car(0.0, 0.0, 0.0), &car(3.0, 1.5, std::f64::consts::FRAC_PI_4)));
    }

    fn world_at(y: f64) -> WorldState {
        WorldState::new(car(10.0, y, 0.0), Vec::new())
    }

    #[test]
    fn off_lane_boundary() {
        let road = RoadModel::straight(1, 3.5, 100.0);
        assert!(!check_off_lane(&world_at(1.75), &road));
        assert!(!check_off_lane(&world_at(0.0), &road));
        assert!(check_off_lane(&world_at(-0.01), &road));
        assert!(check_off_lane(&world_at(3.51), &road));
    }

    #[test]
    fn lane_change_is_not_off_lane() {
        let road = RoadModel::straight(2, 3.5, 100.0);
        assert!(!check_off_lane(&world_at(3.5), &road));
        assert!(!check_off_lane(&world_at(6.9), &road));
    }
}
