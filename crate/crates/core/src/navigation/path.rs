use serde::{Deserialize, Serialize};

use super::{ArrivalField, CostMap, NavError};
use crate::mapping::{wrap_angle, Cell};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub cell: Cell,
    pub x: f64,
    pub y: f64,
}

/// Positional offset `(dx, dy, dyaw)` between consecutive waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub dx: f64,
    pub dy: f64,
    pub dyaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Waypoint>,
    /// One flag per segment: the gait bit of the cell being entered.
    pub gait_flags: Vec<u8>,
    pub actions: Vec<Action>,
    /// Arrival time at the start cell.
    pub arrival_time: f64,
}

impl PathPlan {
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.waypoints.iter().map(|w| w.cell)
    }

    pub fn length(&self) -> f64 {
        self.actions.iter().map(|a| a.dx.hypot(a.dy)).sum()
    }

    pub fn end(&self) -> Cell {
        self.waypoints.last().expect("plans hold at least the start").cell
    }
}

const DESCENT: [(i32, i32); 8] = [
    (0, 1),
    (1, 0),
    (0, -1),
    (-1, 0),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Steepest descent over the 8 neighbours (largest drop per unit step
/// length) until a zero-time cell. Diagonal
/// steps may not cut the corner of an obstacle. `start_yaw` is the heading
/// before the first step.
pub fn extract_path(
    field: &ArrivalField,
    start: Cell,
    cost: &CostMap,
    start_yaw: f64,
) -> Result<PathPlan, NavError> {
    if !cost.in_bounds(start) {
        return Err(NavError::StartOutside(start));
    }
    let arrival_time = field.get(start);
    if !arrival_time.is_finite() {
        return Err(NavError::Unreachable(start));
    }
    let waypoint = |cell: Cell| {
        let (x, y) = cost.cell_to_world(cell);
        Waypoint { cell, x, y }
    };
    let mut waypoints = vec![waypoint(start)];
    let mut gait_flags = Vec::new();
    let mut actions = Vec::new();
    let mut cur = start;
    let mut yaw = start_yaw;
    let limit = cost.size() * cost.size();
    while field.get(cur) > 0.0 {
        let here = field.get(cur);
        let mut best: Option<(f64, Cell)> = None;
        for (dr, dc) in DESCENT {
            let nb = (cur.0 + dr, cur.1 + dc);
            if cost.is_obstacle(nb) {
                continue;
            }
            if dr != 0 && dc != 0
                && (cost.is_obstacle((cur.0 + dr, cur.1)) || cost.is_obstacle((cur.0, cur.1 + dc)))
            {
                continue;
            }
            let t = field.get(nb);
            if t >= here {
                continue;
            }
            let slope = (here - t) / if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            if best.map_or(true, |(b, _)| slope > b) {
                best = Some((slope, nb));
            }
        }
        let Some((_, next)) = best else {
            return Err(NavError::Unreachable(cur));
        };
        let (a, b) = (waypoint(cur), waypoint(next));
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let heading = dy.atan2(dx);
        actions.push(Action {
            dx,
            dy,
            dyaw: wrap_angle(heading - yaw),
        });
        yaw = heading;
        gait_flags.push(cost.gait(next));
        waypoints.push(b);
        cur = next;
        if waypoints.len() > limit {
            return Err(NavError::Unreachable(start));
        }
    }
    Ok(PathPlan {
        waypoints,
        gait_flags,
        actions,
        arrival_time,
    })
}
