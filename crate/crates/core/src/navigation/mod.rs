//! Cost-map navigation.
//!
//! The model assigns a traversal cost and gait bit to every observed
//! category, the costs are painted onto the semantic map, and the Fast
//! Marching Method produces an arrival-time field that is descended to get
//! waypoints and positional offsets. When the goal is not in memory the
//! nearest frontier is explored instead.

mod fmm;
mod frontier;
mod path;
mod scene_plan;

pub use fmm::{fmm_solve, fmm_solve_multi, fmm_solve_with, ArrivalField, Stencil};
pub use frontier::{frontier_cells, frontier_goal, global_goal, nearest_free, GoalChoice, GoalRef, GoalSource, TIE_EPS};
pub use path::{extract_path, Action, PathPlan, Waypoint};
pub use scene_plan::{plan_in_scene, ScenePlan};

pub use crate::llm::parse::{CostAssignment, CostMode, TerrainCost};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::parse::{self, ParseError};
use crate::llm::prompts::{self, ids};
use crate::llm::{ChatRequest, Gateway, LlmError, PARSING_TEMPERATURE};
use crate::mapping::{Cell, MappingError, SemanticMap};

#[derive(Debug, Error)]
pub enum NavError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("cost reply rejected after a retry: {0}")]
    CostReply(ParseError),
    #[error("no observed categories to assign costs to")]
    NoCategories,
    #[error("goal cell {0:?} is an obstacle or outside the map")]
    GoalBlocked(Cell),
    #[error("start cell {0:?} cannot reach the goal")]
    Unreachable(Cell),
    #[error("start cell {0:?} is outside the map")]
    StartOutside(Cell),
    #[error("nothing has been explored yet")]
    NothingExplored,
    #[error("exploration complete: no reachable frontier left")]
    ExplorationComplete,
    #[error("no instance with id {0}")]
    UnknownInstance(u32),
    #[error("no free cell to stand near {0:?}")]
    NoFreeCell(Cell),
    #[error("cost map is {got}x{got}, expected {want}x{want}")]
    SizeMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    /// Cost of cells never observed.
    pub unexplored_cost: f64,
    /// Cost of observed categories the model's reply does not mention.
    pub default_category_cost: f64,
    /// Lower bound on the marching speed.
    pub speed_floor: f64,
    pub cost_mode: CostMode,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            unexplored_cost: 0.5,
            default_category_cost: 0.5,
            speed_floor: 0.05,
            cost_mode: CostMode::Binary,
        }
    }
}

/// Asks the model for target, obstacles and terrain costs. Observed
/// categories the reply leaves out get the default cost and gait 0.
pub fn assign_costs(
    instruction: &str,
    categories: &[String],
    gateway: &Gateway,
    scope: &str,
    cfg: &NavConfig,
) -> Result<CostAssignment, NavError> {
    if categories.is_empty() {
        return Err(NavError::NoCategories);
    }
    let request = ChatRequest::new(
        prompts::scoped(ids::COST_MAP, scope),
        prompts::render(
            prompts::COST_MAP,
            &[
                ("categories", &categories.join(", ")),
                ("instruction", instruction),
            ],
        ),
    )
    .samples(1, PARSING_TEMPERATURE);
    let first = gateway.complete(&request)?.responses.remove(0);
    let mut assignment = match parse::parse_cost_json(&first, cfg.cost_mode) {
        Ok(a) => a,
        Err(problem) => {
            let retry = ChatRequest {
                user: prompts::reprompt(&request.user, &problem.to_string()),
                ..request.clone()
            };
            let again = gateway.complete(&retry)?.responses.remove(0);
            parse::parse_cost_json(&again, cfg.cost_mode).map_err(NavError::CostReply)?
        }
    };
    for c in categories {
        let mentioned = assignment.target_object == *c
            || assignment.obstacles.iter().any(|o| o == c)
            || assignment.terrain.iter().any(|t| t.category == *c);
        if !mentioned {
            assignment.terrain.push(TerrainCost {
                category: c.clone(),
                cost: cfg.default_category_cost,
                gait: 0,
            });
        }
    }
    Ok(assignment)
}

/// Resolved `(cost, gait)` per map category.
pub fn category_costs(
    map: &SemanticMap,
    assignment: &CostAssignment,
    cfg: &NavConfig,
) -> Vec<(f64, u8)> {
    map.categories()
        .iter()
        .map(|name| {
            let gait = assignment
                .terrain
                .iter()
                .find(|t| t.category == *name)
                .map_or(0, |t| t.gait);
            if assignment.obstacles.iter().any(|o| o == name) {
                (1.0, gait)
            } else if assignment.target_object == *name {
                (0.0, gait)
            } else if let Some(t) = assignment.terrain.iter().find(|t| t.category == *name) {
                (t.cost.clamp(0.0, 1.0), t.gait)
            } else {
                (cfg.default_category_cost, 0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMap {
    size: usize,
    cell_size: f64,
    cost: Vec<f64>,
    gait: Vec<u8>,
}

impl CostMap {
    /// Uniform map, every cell at `cost` with gait 0.
    pub fn uniform(size: usize, cell_size: f64, cost: f64) -> Self {
        Self {
            size,
            cell_size,
            cost: vec![cost; size * size],
            gait: vec![0; size * size],
        }
    }

    /// Builds a map from a row-major cost grid.
    pub fn from_costs(size: usize, cell_size: f64, cost: Vec<f64>) -> Self {
        assert_eq!(cost.len(), size * size, "cost grid must be size x size");
        Self {
            size,
            cell_size,
            gait: vec![0; cost.len()],
            cost,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.size && (c as usize) < self.size
    }

    pub fn index(&self, (r, c): Cell) -> usize {
        r as usize * self.size + c as usize
    }

    pub fn cost(&self, cell: Cell) -> f64 {
        self.cost[self.index(cell)]
    }

    pub fn set_cost(&mut self, cell: Cell, cost: f64) {
        let i = self.index(cell);
        self.cost[i] = cost;
    }

    pub fn gait(&self, cell: Cell) -> u8 {
        self.gait[self.index(cell)]
    }

    pub fn set_gait(&mut self, cell: Cell, gait: u8) {
        let i = self.index(cell);
        self.gait[i] = gait;
    }

    /// World coordinates of a cell centre, same convention as the semantic
    /// map.
    pub fn cell_to_world(&self, (r, c): Cell) -> (f64, f64) {
        let half = (self.size / 2) as f64;
        (
            (c as f64 - half + 0.5) * self.cell_size,
            (r as f64 - half + 0.5) * self.cell_size,
        )
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    /// Cost 1 (or more) cells cannot be entered.
    pub fn is_obstacle(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.cost(cell) >= 1.0
    }

    /// Marching speed `clamp(1 - cost, floor, 1)`.
    pub fn speed(&self, cell: Cell, floor: f64) -> f64 {
        (1.0 - self.cost(cell)).clamp(floor, 1.0)
    }

    /// Costs scaled to 0..255, row 0 at the bottom.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.size;
        let mut px = vec![0u8; n * n];
        for r in 0..n {
            for c in 0..n {
                px[(n - 1 - r) * n + c] = (self.cost[r * n + c].clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
        crate::pgm::encode(n, n, &px)
    }
}

/// Paints per-category costs onto the map: a cell takes the highest cost
/// among the categories present, explored empty cells are free and
/// unexplored cells get the configured default. The gait bit comes from the
/// category that set the cost (lowest id on ties).
pub fn build_cost_map(map: &SemanticMap, assignment: &CostAssignment, cfg: &NavConfig) -> CostMap {
    let table = category_costs(map, assignment, cfg);
    paint(map, &table, cfg)
}

/// Ablation: every category costs 0.
pub fn build_cost_map_no_cost(map: &SemanticMap, cfg: &NavConfig) -> CostMap {
    let table = vec![(0.0, 0); map.categories().len()];
    paint(map, &table, cfg)
}

fn paint(map: &SemanticMap, table: &[(f64, u8)], cfg: &NavConfig) -> CostMap {
    let n = map.size();
    let mut out = CostMap::uniform(n, map.cell_size(), cfg.unexplored_cost);
    for r in 0..n as i32 {
        for c in 0..n as i32 {
            let cell = (r, c);
            let mut best: Option<(f64, u8)> = None;
            for cat in map.categories_at(cell) {
                let (cost, gait) = table[cat];
                if best.map_or(true, |(b, _)| cost > b) {
                    best = Some((cost, gait));
                }
            }
            match best {
                Some((cost, gait)) => {
                    out.set_cost(cell, cost);
                    out.set_gait(cell, gait);
                }
                None if map.is_explored(cell) => out.set_cost(cell, 0.0),
                None => {}
            }
        }
    }
    out
}
