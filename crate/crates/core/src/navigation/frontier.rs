use serde::{Deserialize, Serialize};

use super::{fmm_solve, CostMap, NavError};
use crate::mapping::{Cell, InstanceMemory, SemanticMap};

/// Arrival times closer than this count as equal when choosing a frontier.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalRef {
    Category(String),
    Instance(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalSource {
    Instance(u32),
    Frontier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalChoice {
    pub cell: Cell,
    pub source: GoalSource,
}

/// Explored, passable cells with at least one unexplored 8-neighbour inside
/// the map, in row-major order.
pub fn frontier_cells(map: &SemanticMap, cost: &CostMap) -> Vec<Cell> {
    let n = map.size() as i32;
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let cell = (r, c);
            if !map.is_explored(cell) || cost.is_obstacle(cell) {
                continue;
            }
            let open = (-1..=1).any(|dr| {
                (-1..=1).any(|dc| {
                    let nb = (r + dr, c + dc);
                    (dr, dc) != (0, 0) && map.in_bounds(nb) && !map.is_explored(nb)
                })
            });
            if open {
                out.push(cell);
            }
        }
    }
    out
}

/// Frontier cell with the smallest arrival time from `start`; ties within
/// [`TIE_EPS`] go to the smallest `(row, col)`.
pub fn frontier_goal(
    map: &SemanticMap,
    cost: &CostMap,
    start: Cell,
    speed_floor: f64,
) -> Result<Cell, NavError> {
    if map.explored_count() == 0 {
        return Err(NavError::NothingExplored);
    }
    let frontier = frontier_cells(map, cost);
    if frontier.is_empty() {
        return Err(NavError::ExplorationComplete);
    }
    let field = fmm_solve(cost, start, speed_floor)?;
    let best = frontier
        .iter()
        .map(|&c| field.get(c))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(NavError::ExplorationComplete);
    }
    Ok(*frontier
        .iter()
        .find(|&&c| field.get(c) <= best + TIE_EPS)
        .expect("minimum attained"))
}

/// Passable cell nearest to a fractional `(row, col)` point; ties go to the
/// smallest `(row, col)`.
pub fn nearest_free(cost: &CostMap, point: (f64, f64)) -> Option<Cell> {
    let n = cost.size() as i32;
    let mut best: Option<(f64, Cell)> = None;
    for r in 0..n {
        for c in 0..n {
            if cost.is_obstacle((r, c)) {
                continue;
            }
            let d = (r as f64 - point.0).powi(2) + (c as f64 - point.1).powi(2);
            if best.map_or(true, |(b, _)| d < b) {
                best = Some((d, (r, c)));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Global policy: the goal instance's centroid (snapped to a passable cell)
/// when memory has it, otherwise the nearest frontier. With several
/// instances of the goal category the one whose centroid is closest to
/// `start` wins, ties to the lowest id.
pub fn global_goal(
    goal: &GoalRef,
    memory: &InstanceMemory,
    map: &SemanticMap,
    cost: &CostMap,
    start: Cell,
    speed_floor: f64,
) -> Result<GoalChoice, NavError> {
    if map.explored_count() == 0 {
        return Err(NavError::NothingExplored);
    }
    let instance = match goal {
        GoalRef::Instance(id) => Some(memory.get(*id).ok_or(NavError::UnknownInstance(*id))?),
        GoalRef::Category(name) => map.category_index(name).and_then(|class| {
            let dist = |i: &crate::mapping::InstanceRecord| {
                let (r, c) = i.centroid();
                (r - start.0 as f64).powi(2) + (c - start.1 as f64).powi(2)
            };
            memory
                .of_class(class)
                .min_by(|a, b| dist(a).total_cmp(&dist(b)).then(a.id.cmp(&b.id)))
        }),
    };
    match instance {
        Some(inst) => {
            let centroid = inst.centroid();
            let cell = nearest_free(cost, centroid).ok_or(NavError::NoFreeCell((
                centroid.0.round() as i32,
                centroid.1.round() as i32,
            )))?;
            Ok(GoalChoice {
                cell,
                source: GoalSource::Instance(inst.id),
            })
        }
        None => Ok(GoalChoice {
            cell: frontier_goal(map, cost, start, speed_floor)?,
            source: GoalSource::Frontier,
        }),
    }
}
