//! One-shot planning over a recorded scene: ingest every frame, assign
//! costs, march from the target and descend from the last pose.

use super::{
    assign_costs, build_cost_map, build_cost_map_no_cost, extract_path, fmm_solve, global_goal,
    ArrivalField, CostAssignment, CostMap, GoalChoice, GoalRef, GoalSource, NavConfig, NavError,
    PathPlan,
};
use crate::llm::Gateway;
use crate::mapping::{ingest, Cell, InstanceMemory, MappingConfig, Pose, Scene, SemanticMap};

#[derive(Debug, Clone)]
pub struct ScenePlan {
    pub map: SemanticMap,
    pub memory: InstanceMemory,
    pub assignment: CostAssignment,
    pub cost: CostMap,
    pub field: ArrivalField,
    pub start: Cell,
    pub goal: GoalChoice,
    /// `None` when the start cannot reach the goal.
    pub plan: Option<PathPlan>,
    /// World centroid of the target instance, if one was mapped.
    pub target_centroid: Option<(f64, f64)>,
    /// Distance from the path's last waypoint to the target centroid.
    pub end_distance: Option<f64>,
    pub success: bool,
}

/// Plans from the last frame's pose to the instruction's target. With
/// `no_cost` the model still names the target but every category costs 0.
pub fn plan_in_scene(
    scene: &Scene,
    instruction: &str,
    gateway: &Gateway,
    mapping: &MappingConfig,
    nav: &NavConfig,
    success_radius: f64,
    no_cost: bool,
) -> Result<ScenePlan, NavError> {
    let h = &scene.header;
    let mut map = SemanticMap::new(h.categories.clone(), h.map_size, h.cell_size)?;
    let mut memory = InstanceMemory::new();
    for (i, frame) in scene.frames.iter().enumerate() {
        ingest(&mut map, &mut memory, frame, i, mapping)?;
    }
    let pose = scene.frames.last().map_or(Pose::default(), |f| f.pose);
    if scene.frames.is_empty() {
        map.update_pose(&pose, mapping)?;
    }
    let start = map.world_to_cell(pose.x, pose.y)?;

    let assignment = assign_costs(instruction, &h.categories, gateway, "", nav)?;
    let mut cost = if no_cost {
        build_cost_map_no_cost(&map, nav)
    } else {
        build_cost_map(&map, &assignment, nav)
    };
    if cost.is_obstacle(start) {
        cost.set_cost(start, 0.9);
    }
    let target = GoalRef::Category(assignment.target_object.clone());
    let goal = global_goal(&target, &memory, &map, &cost, start, nav.speed_floor)?;
    let field = fmm_solve(&cost, goal.cell, nav.speed_floor)?;
    let plan = match extract_path(&field, start, &cost, pose.yaw) {
        Ok(p) => Some(p),
        Err(NavError::Unreachable(_)) => None,
        Err(e) => return Err(e),
    };

    let half = (map.size() / 2) as f64;
    let target_centroid = match goal.source {
        GoalSource::Instance(id) => memory.get(id).map(|inst| {
            let (r, c) = inst.centroid();
            ((c - half + 0.5) * map.cell_size(), (r - half + 0.5) * map.cell_size())
        }),
        GoalSource::Frontier => None,
    };
    let end_distance = match (&plan, target_centroid) {
        (Some(p), Some((x, y))) => {
            let w = p.waypoints.last().expect("plans hold the start");
            Some((w.x - x).hypot(w.y - y))
        }
        _ => None,
    };
    let success = end_distance.is_some_and(|d| d <= success_radius);
    Ok(ScenePlan {
        map,
        memory,
        assignment,
        cost,
        field,
        start,
        goal,
        plan,
        target_centroid,
        end_distance,
        success,
    })
}
