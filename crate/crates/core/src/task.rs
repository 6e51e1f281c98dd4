//! Long-horizon tasks over a fixed skill library.
//!
//! An instruction is decomposed by the model into subgoals, each naming one
//! skill. The executor runs them in order against a [`World`] built from a
//! synthetic scene and halts at the first failure, leaving the rest pending.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::config::Config;
use crate::llm::parse::extract_balanced;
use crate::llm::prompts::{self, ids};
use crate::llm::{ChatRequest, Gateway, LlmError, PARSING_TEMPERATURE};
use crate::locomotion::{BehaviorParams, CommandVector, Param};
use crate::lss::{candidate_grid, locate_ranges, select_best};
use crate::mapping::{
    components, in_footprint, ingest, parse_scene, Frame, InstanceMemory, LabeledPoint,
    MappingConfig, MappingError, Pose, Scene, SemanticMap,
};
use crate::navigation::{
    assign_costs, build_cost_map, extract_path, fmm_solve, global_goal, CostMode, GoalRef,
    GoalSource, NavError,
};
use crate::seed::derive_seed;
use crate::surrogate::SurrogateTerrain;
use crate::terrain::TerrainKind;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("plan reply rejected after a retry: {0}")]
    PlanReply(String),
    #[error("unknown skill `{name}`; valid skills: {valid}")]
    UnknownSkill { name: String, valid: String },
    #[error("skill `{skill}` expects ({expected}), got ({got})")]
    Schema {
        skill: String,
        expected: String,
        got: String,
    },
    #[error("duplicate skill name `{0}`")]
    DuplicateSkill(String),
    #[error("subgoal {index}: cannot move from {from} to {to}")]
    StatusOrder {
        index: usize,
        from: SubgoalStatus,
        to: SubgoalStatus,
    },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("scenario: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    /// Navigation success radius in metres.
    pub success_radius: f64,
    /// Distance walked along each plan before re-planning, in metres.
    pub step_length: f64,
    pub max_nav_iterations: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            success_radius: 0.5,
            step_length: 1.0,
            max_nav_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    SitDown,
    StandUp,
    SquatDown,
    Greet,
    SwitchGait,
    NavigateTo,
    Find,
    SitNextTo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skill {
    pub name: String,
    pub params: Vec<String>,
    pub doc: String,
    pub kind: SkillKind,
}

impl Skill {
    fn new(name: &str, params: &[&str], doc: &str, kind: SkillKind) -> Self {
        Self {
            name: name.into(),
            params: params.iter().map(|p| p.to_string()).collect(),
            doc: doc.into(),
            kind,
        }
    }

    pub fn signature(&self) -> String {
        format!("{}({})", self.name, self.params.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillLibrary {
    skills: Vec<Skill>,
}

impl Default for SkillLibrary {
    fn default() -> Self {
        use SkillKind::*;
        Self {
            skills: vec![
                Skill::new("sit_down", &[], "Lower the body into a sitting posture.", SitDown),
                Skill::new("stand_up", &[], "Return to a standing posture.", StandUp),
                Skill::new("squat_down", &[], "Bend all legs into a low squat.", SquatDown),
                Skill::new("greet", &[], "Wave a front leg at the person giving the instruction.", Greet),
                Skill::new(
                    "switch_gait",
                    &["terrain_description"],
                    "Tune the gait for the described terrain.",
                    SwitchGait,
                ),
                Skill::new(
                    "navigate_to",
                    &["target"],
                    "Walk to the named object, crossing terrain as the instruction allows.",
                    NavigateTo,
                ),
                Skill::new(
                    "find",
                    &["target"],
                    "Look around, explore until the named object is seen, then walk to it.",
                    Find,
                ),
                Skill::new("sit_next_to", &["target"], "Walk next to the named object and sit down.", SitNextTo),
            ],
        }
    }
}

impl SkillLibrary {
    pub fn new(skills: Vec<Skill>) -> Result<Self, TaskError> {
        let mut seen = BTreeSet::new();
        for s in &skills {
            if !seen.insert(s.name.clone()) {
                return Err(TaskError::DuplicateSkill(s.name.clone()));
            }
        }
        Ok(Self { skills })
    }

    pub fn get(&self, name: &str) -> Option<&Skill> {
        self.skills.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.skills.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn skills(&self) -> &[Skill] {
        &self.skills
    }

    /// One `- name(params): doc` line per skill, for prompts.
    pub fn docs(&self) -> String {
        self.skills
            .iter()
            .map(|s| format!("- {}: {}", s.signature(), s.doc))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgoalStatus {
    Pending,
    Running,
    Succeeded,
    Failed,
}

impl fmt::Display for SubgoalStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubgoalStatus::Pending => "pending",
            SubgoalStatus::Running => "running",
            SubgoalStatus::Succeeded => "succeeded",
            SubgoalStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgoal {
    pub description: String,
    pub skill: String,
    pub args: BTreeMap<String, String>,
    pub status: SubgoalStatus,
}

impl Subgoal {
    pub fn new(description: &str, skill: &str, args: &[(&str, &str)]) -> Self {
        Self {
            description: description.into(),
            skill: skill.into(),
            args: args.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            status: SubgoalStatus::Pending,
        }
    }

    /// Moves along pending -> running -> succeeded | failed.
    pub fn advance(&mut self, index: usize, to: SubgoalStatus) -> Result<(), TaskError> {
        use SubgoalStatus::*;
        let ok = matches!((self.status, to), (Pending, Running) | (Running, Succeeded) | (Running, Failed));
        if !ok {
            return Err(TaskError::StatusOrder {
                index,
                from: self.status,
                to,
            });
        }
        self.status = to;
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubgoal {
    #[serde(default)]
    description: String,
    skill: String,
    #[serde(default)]
    args: BTreeMap<String, Value>,
}

/// Parses the first JSON array in a decomposition reply. Argument values
/// may be strings, numbers or booleans.
pub fn parse_plan(text: &str) -> Result<Vec<Subgoal>, String> {
    let raw = extract_balanced(text, '[', ']').ok_or("no JSON array found")?;
    let items: Vec<RawSubgoal> = serde_json::from_str(raw).map_err(|e| e.to_string())?;
    if items.is_empty() {
        return Err("the plan is empty".into());
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let skill = item.skill.trim().to_string();
        if skill.is_empty() {
            return Err(format!("subgoal {i} names no skill"));
        }
        let mut args = BTreeMap::new();
        for (k, v) in item.args {
            let value = match v {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                other => return Err(format!("subgoal {i}: argument `{k}` must be a scalar, got {other}")),
            };
            args.insert(k, value);
        }
        out.push(Subgoal {
            description: item.description,
            skill,
            args,
            status: SubgoalStatus::Pending,
        });
    }
    Ok(out)
}

fn unknown_skills<'a>(plan: &'a [Subgoal], library: &SkillLibrary) -> Vec<&'a str> {
    plan.iter()
        .filter(|s| library.get(&s.skill).is_none())
        .map(|s| s.skill.as_str())
        .collect()
}

/// Asks the model to split `instruction` into subgoals. A reply that does
/// not parse or names an unknown skill gets one reprompt listing the valid
/// names.
pub fn decompose(
    instruction: &str,
    library: &SkillLibrary,
    gateway: &Gateway,
) -> Result<Vec<Subgoal>, TaskError> {
    if instruction.trim().is_empty() {
        return Err(TaskError::EmptyInstruction);
    }
    let request = ChatRequest::new(
        ids::DECOMPOSE,
        prompts::render(
            prompts::DECOMPOSE,
            &[("skills", &library.docs()), ("instruction", instruction.trim())],
        ),
    )
    .samples(1, PARSING_TEMPERATURE);
    let valid = library.names().join(", ");
    let check = |text: &str| -> Result<Vec<Subgoal>, (String, Option<String>)> {
        let plan = parse_plan(text).map_err(|e| (e, None))?;
        match unknown_skills(&plan, library).first() {
            Some(name) => Err((
                format!("unknown skill `{name}`; use only: {valid}"),
                Some(name.to_string()),
            )),
            None => Ok(plan),
        }
    };
    let first = gateway.complete(&request)?.responses.remove(0);
    let problem = match check(&first) {
        Ok(plan) => return Ok(plan),
        Err((problem, _)) => problem,
    };
    let retry = ChatRequest {
        user: prompts::reprompt(&request.user, &problem),
        ..request.clone()
    };
    let again = gateway.complete(&retry)?.responses.remove(0);
    check(&again).map_err(|(problem, unknown)| match unknown {
        Some(name) => TaskError::UnknownSkill { name, valid },
        None => TaskError::PlanReply(problem),
    })
}

/// Looks up the subgoal's skill and checks that its arguments are exactly
/// the skill's parameters.
pub fn retrieve_skill<'a>(
    subgoal: &Subgoal,
    library: &'a SkillLibrary,
) -> Result<(&'a Skill, BTreeMap<String, String>), TaskError> {
    let skill = library.get(&subgoal.skill).ok_or_else(|| TaskError::UnknownSkill {
        name: subgoal.skill.clone(),
        valid: library.names().join(", "),
    })?;
    let want: BTreeSet<&str> = skill.params.iter().map(String::as_str).collect();
    let got: BTreeSet<&str> = subgoal.args.keys().map(String::as_str).collect();
    if want != got || subgoal.args.values().any(|v| v.trim().is_empty()) {
        return Err(TaskError::Schema {
            skill: skill.name.clone(),
            expected: skill.params.join(", "),
            got: subgoal.args.keys().cloned().collect::<Vec<_>>().join(", "),
        });
    }
    Ok((skill, subgoal.args.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Posture {
    Standing,
    Sitting,
    Squatting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub pose: Pose,
    pub posture: Posture,
    pub greetings: u32,
    pub gait: Option<BehaviorParams>,
}

/// Ground-truth scene plus what the agent has mapped so far.
#[derive(Debug, Clone)]
pub struct World {
    truth: Vec<LabeledPoint>,
    pub map: SemanticMap,
    pub memory: InstanceMemory,
    pub agent: AgentState,
    pub mapping: MappingConfig,
    /// Logical clock: one tick per observation and per skill invocation.
    clock: u64,
    frames: usize,
}

impl World {
    /// The union of the scene's frames is the ground truth. The agent starts
    /// at `start`, or the first frame's pose, and takes one observation.
    pub fn from_scene(scene: &Scene, start: Option<Pose>, mapping: &MappingConfig) -> Result<Self, TaskError> {
        let map = SemanticMap::new(
            scene.header.categories.clone(),
            scene.header.map_size,
            scene.header.cell_size,
        )?;
        let pose = start
            .or_else(|| scene.frames.first().map(|f| f.pose))
            .unwrap_or_default();
        let mut world = Self {
            truth: scene.frames.iter().flat_map(|f| f.points.iter().copied()).collect(),
            map,
            memory: InstanceMemory::new(),
            agent: AgentState {
                pose,
                posture: Posture::Standing,
                greetings: 0,
                gait: None,
            },
            mapping: mapping.clone(),
            clock: 0,
            frames: 0,
        };
        world.observe()?;
        Ok(world)
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Ingests the ground-truth points inside the current footprint.
    pub fn observe(&mut self) -> Result<Vec<u32>, TaskError> {
        let pose = self.agent.pose;
        let frame = Frame {
            pose,
            points: self
                .truth
                .iter()
                .copied()
                .filter(|p| in_footprint(&pose, p.x, p.y, &self.mapping))
                .collect(),
        };
        let touched = ingest(&mut self.map, &mut self.memory, &frame, self.frames, &self.mapping)?;
        self.frames += 1;
        self.tick();
        Ok(touched)
    }

    /// Turns in place through a full circle, observing every eighth of a turn.
    pub fn scan(&mut self) -> Result<(), TaskError> {
        for _ in 0..8 {
            self.agent.pose.yaw =
                crate::mapping::wrap_angle(self.agent.pose.yaw + std::f64::consts::FRAC_PI_4);
            self.observe()?;
        }
        Ok(())
    }

    fn fractional_to_world(&self, (r, c): (f64, f64)) -> (f64, f64) {
        let half = (self.map.size() / 2) as f64;
        let cs = self.map.cell_size();
        ((c - half + 0.5) * cs, (r - half + 0.5) * cs)
    }

    /// Centroid of the remembered instance of `category` nearest the agent;
    /// ties go to the lowest id.
    pub fn memory_centroid(&self, category: &str) -> Option<(u32, (f64, f64))> {
        let class = self.map.category_index(category)?;
        let pose = self.agent.pose;
        self.memory
            .of_class(class)
            .map(|i| (i.id, self.fractional_to_world(i.centroid())))
            .min_by(|a, b| {
                let da = pose.distance_to(a.1 .0, a.1 .1);
                let db = pose.distance_to(b.1 .0, b.1 .1);
                da.total_cmp(&db).then(a.0.cmp(&b.0))
            })
    }

    /// Centroid of the ground-truth connected component of `category`
    /// nearest the agent.
    pub fn truth_centroid(&self, category: &str) -> Option<(f64, f64)> {
        let class = self.map.category_index(category)?;
        let cells: BTreeSet<_> = self
            .truth
            .iter()
            .filter(|p| p.category == class)
            .filter_map(|p| self.map.world_to_cell(p.x, p.y).ok())
            .collect();
        let pose = self.agent.pose;
        components(&cells)
            .into_iter()
            .map(|comp| {
                let n = comp.len() as f64;
                let (sr, sc) = comp
                    .iter()
                    .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
                self.fractional_to_world((sr / n, sc / n))
            })
            .min_by(|a, b| pose.distance_to(a.0, a.1).total_cmp(&pose.distance_to(b.0, b.1)))
    }
}

/// Summary of one navigation skill run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavReport {
    pub iterations: usize,
    pub travelled: f64,
    /// Changes of the gait bit along the walked cells.
    pub gait_switches: usize,
    /// Walked segments that entered a cell with the gait bit set.
    pub gait_segments: usize,
    pub goal_instance: Option<u32>,
}

fn nav_failure(reason: impl Into<String>, report: NavReport) -> (String, NavReport) {
    (reason.into(), report)
}

/// The map-plan-walk loop: assign costs once, then repeatedly rebuild the
/// cost map, pick the goal (remembered instance or frontier), march, walk
/// up to `step_length` along the path and observe, until the remembered
/// target is within the success radius.
pub fn navigate(
    world: &mut World,
    target: &str,
    description: &str,
    scope: &str,
    gateway: &Gateway,
    cfg: &Config,
    scan_first: bool,
) -> Result<NavReport, (String, NavReport)> {
    let mut report = NavReport {
        iterations: 0,
        travelled: 0.0,
        gait_switches: 0,
        gait_segments: 0,
        goal_instance: None,
    };
    if world.map.category_index(target).is_none() {
        return Err(nav_failure(format!("no category named `{target}` in the scene"), report));
    }
    world.agent.posture = Posture::Standing;
    if scan_first {
        if let Err(e) = world.scan() {
            return Err(nav_failure(e.to_string(), report));
        }
    }
    let categories = world.map.categories().to_vec();
    let assignment = match assign_costs(description, &categories, gateway, scope, &cfg.navigation) {
        Ok(a) => a,
        Err(e) => return Err(nav_failure(format!("cost assignment failed: {e}"), report)),
    };
    let radius = cfg.task.success_radius;
    let floor = cfg.navigation.speed_floor;
    let mut last_gait = 0u8;
    for _ in 0..cfg.task.max_nav_iterations {
        if let Some((id, (x, y))) = world.memory_centroid(target) {
            report.goal_instance = Some(id);
            if world.agent.pose.distance_to(x, y) <= radius {
                return Ok(report);
            }
        }
        report.iterations += 1;
        let pose = world.agent.pose;
        let here = match world.map.world_to_cell(pose.x, pose.y) {
            Ok(c) => c,
            Err(e) => return Err(nav_failure(e.to_string(), report)),
        };
        let mut cost = build_cost_map(&world.map, &assignment, &cfg.navigation);
        if cost.is_obstacle(here) {
            cost.set_cost(here, 0.9);
        }
        let goal = match global_goal(
            &GoalRef::Category(target.to_string()),
            &world.memory,
            &world.map,
            &cost,
            here,
            floor,
        ) {
            Ok(g) => g,
            Err(NavError::ExplorationComplete) => {
                return Err(nav_failure(format!("`{target}` not found after exploring every reachable frontier"), report))
            }
            Err(e) => return Err(nav_failure(e.to_string(), report)),
        };
        let field = match fmm_solve(&cost, goal.cell, floor) {
            Ok(f) => f,
            Err(e) => return Err(nav_failure(e.to_string(), report)),
        };
        let plan = match extract_path(&field, here, &cost, pose.yaw) {
            Ok(p) => p,
            Err(NavError::Unreachable(_)) => {
                return Err(nav_failure(format!("`{target}` is unreachable from the current position"), report))
            }
            Err(e) => return Err(nav_failure(e.to_string(), report)),
        };
        if plan.actions.is_empty() {
            if let GoalSource::Instance(_) = goal.source {
                let d = world
                    .memory_centroid(target)
                    .map_or(f64::INFINITY, |(_, (x, y))| pose.distance_to(x, y));
                return Err(nav_failure(format!("stopped {d:.2} m from `{target}`"), report));
            }
        }
        let mut walked = 0.0;
        let mut yaw = pose.yaw;
        let mut end = (pose.x, pose.y);
        for (k, action) in plan.actions.iter().enumerate() {
            walked += action.dx.hypot(action.dy);
            yaw = crate::mapping::wrap_angle(yaw + action.dyaw);
            let w = plan.waypoints[k + 1];
            end = (w.x, w.y);
            let g = plan.gait_flags[k];
            if g != last_gait {
                report.gait_switches += 1;
                last_gait = g;
            }
            if g == 1 {
                report.gait_segments += 1;
            }
            if walked >= cfg.task.step_length - 1e-9 {
                break;
            }
        }
        report.travelled += walked;
        world.agent.pose = Pose::new(end.0, end.1, yaw);
        if let Err(e) = world.observe() {
            return Err(nav_failure(e.to_string(), report));
        }
    }
    if let Some((id, (x, y))) = world.memory_centroid(target) {
        report.goal_instance = Some(id);
        if world.agent.pose.distance_to(x, y) <= radius {
            return Ok(report);
        }
    }
    Err(nav_failure("iteration budget exhausted", report))
}

/// Maps a free-form terrain description onto the closest benchmark terrain.
pub fn classify_terrain(description: &str) -> TerrainKind {
    let d = description.to_ascii_lowercase();
    let has = |words: &[&str]| words.iter().any(|w| d.contains(w));
    if has(&["stair", "step"]) {
        if has(&["down", "descend"]) {
            TerrainKind::DownsideStair
        } else {
            TerrainKind::UpsideStair
        }
    } else if has(&["downhill", "descend", "down slope", "downward"]) {
        TerrainKind::DownhillSlope
    } else if has(&["uphill", "slope", "incline", "ramp", "climb"]) {
        TerrainKind::UphillSlope
    } else {
        TerrainKind::UnevenGround
    }
}

/// What a skill body produced, before evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillOutcome {
    /// Reason the body itself failed, if it did.
    pub error: Option<String>,
    pub navigation: Option<NavReport>,
    /// Parameters chosen by a gait switch and whether they sit inside the
    /// voted intervals.
    pub gait: Option<(BehaviorParams, bool)>,
}

fn run_skill(
    skill: &Skill,
    args: &BTreeMap<String, String>,
    subgoal: &Subgoal,
    scope: &str,
    world: &mut World,
    gateway: &Gateway,
    cfg: &Config,
) -> SkillOutcome {
    let mut out = SkillOutcome {
        error: None,
        navigation: None,
        gait: None,
    };
    let target = args.get("target").map(String::as_str).unwrap_or_default();
    let description = if subgoal.description.trim().is_empty() {
        format!("{} {}", skill.name, target)
    } else {
        subgoal.description.clone()
    };
    match skill.kind {
        SkillKind::SitDown => world.agent.posture = Posture::Sitting,
        SkillKind::StandUp => world.agent.posture = Posture::Standing,
        SkillKind::SquatDown => world.agent.posture = Posture::Squatting,
        SkillKind::Greet => world.agent.greetings += 1,
        SkillKind::NavigateTo | SkillKind::Find | SkillKind::SitNextTo => {
            let scan = skill.kind == SkillKind::Find;
            match navigate(world, target, &description, scope, gateway, cfg, scan) {
                Ok(r) => out.navigation = Some(r),
                Err((reason, r)) => {
                    out.error = Some(reason);
                    out.navigation = Some(r);
                }
            }
            if skill.kind == SkillKind::SitNextTo && out.error.is_none() {
                world.agent.posture = Posture::Sitting;
            }
        }
        SkillKind::SwitchGait => {
            let desc = &args["terrain_description"];
            let kind = classify_terrain(desc);
            let settings = cfg.eval_settings();
            let result = locate_ranges(desc, scope, gateway).and_then(|located| {
                let grid = candidate_grid(&located.selection, &settings.table, &settings.lss);
                let terrain = SurrogateTerrain::new(kind.default_spec());
                let sim = settings.sim.with_seed(derive_seed(cfg.seed, &["task", scope]));
                let (best, _) = select_best(&grid, &terrain, &CommandVector::forward(), &sim, &settings)?;
                let inside = Param::ALL.iter().all(|&p| {
                    let iv = settings.table.range(p, located.selection.level(p));
                    best.get(p) >= iv.lo - 1e-9 && best.get(p) <= iv.hi + 1e-9
                });
                Ok((best, inside))
            });
            match result {
                Ok((best, inside)) => {
                    world.agent.gait = Some(best);
                    out.gait = Some((best, inside));
                }
                Err(e) => out.error = Some(format!("gait adaptation failed: {e}")),
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: SubgoalStatus,
    pub reason: Option<String>,
    /// True when this verdict completes the whole plan.
    pub task_complete: bool,
}

/// Geometric checks first: navigation skills must end within the success
/// radius of the ground-truth target. Posture and greeting have no
/// geometric ground truth and are judged by the model; a gateway failure or
/// an unclear answer counts as failure.
pub fn evaluate_success(
    subgoal: &Subgoal,
    skill: &Skill,
    outcome: &SkillOutcome,
    world: &World,
    gateway: &Gateway,
    scope: &str,
    cfg: &Config,
    is_last: bool,
) -> Verdict {
    let verdict = |ok: bool, reason: Option<String>| Verdict {
        status: if ok { SubgoalStatus::Succeeded } else { SubgoalStatus::Failed },
        reason,
        task_complete: ok && is_last,
    };
    if let Some(e) = &outcome.error {
        return verdict(false, Some(e.clone()));
    }
    match skill.kind {
        SkillKind::NavigateTo | SkillKind::Find | SkillKind::SitNextTo => {
            let target = &subgoal.args["target"];
            let Some((x, y)) = world.truth_centroid(target) else {
                return verdict(false, Some(format!("`{target}` does not exist in the scene")));
            };
            let d = world.agent.pose.distance_to(x, y);
            if d > cfg.task.success_radius {
                return verdict(false, Some(format!("ended {d:.2} m from `{target}`")));
            }
            if skill.kind == SkillKind::SitNextTo && world.agent.posture != Posture::Sitting {
                return verdict(false, Some("not sitting".into()));
            }
            verdict(true, None)
        }
        SkillKind::SwitchGait => match outcome.gait {
            Some((_, true)) => verdict(true, None),
            _ => verdict(false, Some("chosen gait lies outside the voted ranges".into())),
        },
        SkillKind::SitDown | SkillKind::StandUp | SkillKind::SquatDown | SkillKind::Greet => {
            let state = serde_json::json!({
                "posture": world.agent.posture,
                "greetings": world.agent.greetings,
            });
            let shown = serde_json::json!({
                "description": subgoal.description,
                "skill": subgoal.skill,
            });
            let request = ChatRequest::new(
                prompts::scoped(ids::EVALUATE, scope),
                prompts::render(
                    prompts::EVALUATE,
                    &[("subgoal", &shown.to_string()), ("state", &state.to_string())],
                ),
            );
            match gateway.complete(&request) {
                Ok(mut ex) => {
                    let answer = ex.responses.remove(0).to_ascii_lowercase();
                    if answer.contains("fail") {
                        verdict(false, Some("evaluator answered failure".into()))
                    } else if answer.contains("success") {
                        verdict(true, None)
                    } else {
                        verdict(false, Some(format!("unclear evaluator answer: {}", answer.trim())))
                    }
                }
                Err(e) => verdict(false, Some(format!("evaluator unavailable: {e}"))),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub description: String,
    pub skill: String,
    pub args: BTreeMap<String, String>,
    /// Logical clock at invocation and after evaluation.
    pub started: u64,
    pub finished: u64,
    pub status: SubgoalStatus,
    pub reason: Option<String>,
    pub pose_before: Pose,
    pub pose_after: Pose,
    pub posture: Posture,
    /// Observations ingested so far; identifies the world snapshot.
    pub snapshot: usize,
    pub instances: usize,
    /// Transcript keys (`template#ordinal`) consumed by this subgoal.
    pub llm_calls: Vec<String>,
    pub navigation: Option<NavReport>,
    pub gait: Option<BehaviorParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub instruction: String,
    pub plan: Vec<Subgoal>,
    pub records: Vec<TraceRecord>,
    pub task_complete: bool,
}

impl ExecutionTrace {
    /// Header line, one line per executed subgoal, then a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({ "instruction": self.instruction, "plan": self.plan.iter().map(|s| {
            serde_json::json!({ "description": s.description, "skill": s.skill, "args": s.args })
        }).collect::<Vec<_>>() });
        out.push_str(&header.to_string());
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "task_complete": self.task_complete,
            "statuses": self.plan.iter().map(|s| s.status).collect::<Vec<_>>(),
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Called after a failed subgoal with the trace so far; may return
/// replacement subgoals for the rest of the plan.
pub type ReplanHook<'a> = &'a dyn Fn(&ExecutionTrace, usize) -> Option<Vec<Subgoal>>;

pub fn execute(
    instruction: &str,
    plan: Vec<Subgoal>,
    library: &SkillLibrary,
    world: &mut World,
    gateway: &Gateway,
    cfg: &Config,
) -> Result<ExecutionTrace, TaskError> {
    execute_with(instruction, plan, library, world, gateway, cfg, None)
}

/// Runs the plan in order. Every subgoal is validated against the library
/// before anything moves. Without a replan hook, execution halts at the
/// first failure and the remaining subgoals stay pending.
pub fn execute_with(
    instruction: &str,
    plan: Vec<Subgoal>,
    library: &SkillLibrary,
    world: &mut World,
    gateway: &Gateway,
    cfg: &Config,
    replan: Option<ReplanHook>,
) -> Result<ExecutionTrace, TaskError> {
    for s in &plan {
        retrieve_skill(s, library)?;
    }
    let mut trace = ExecutionTrace {
        instruction: instruction.to_string(),
        plan,
        records: Vec::new(),
        task_complete: false,
    };
    let mut i = 0;
    while i < trace.plan.len() {
        let subgoal = trace.plan[i].clone();
        let (skill, args) = retrieve_skill(&subgoal, library)?;
        trace.plan[i].advance(i, SubgoalStatus::Running)?;
        let scope = i.to_string();
        let calls_before = gateway.transcript().len();
        let pose_before = world.agent.pose;
        let started = world.tick();
        let outcome = run_skill(skill, &args, &subgoal, &scope, world, gateway, cfg);
        let is_last = i + 1 == trace.plan.len();
        let verdict = evaluate_success(&subgoal, skill, &outcome, world, gateway, &scope, cfg, is_last);
        let finished = world.tick();
        trace.plan[i].advance(i, verdict.status)?;
        let llm_calls = gateway.transcript()[calls_before..]
            .iter()
            .map(|r| format!("{}#{}", r.template_id, r.ordinal))
            .collect();
        trace.records.push(TraceRecord {
            index: i,
            description: subgoal.description.clone(),
            skill: subgoal.skill.clone(),
            args,
            started,
            finished,
            status: verdict.status,
            reason: verdict.reason.clone(),
            pose_before,
            pose_after: world.agent.pose,
            posture: world.agent.posture,
            snapshot: world.frames(),
            instances: world.memory.len(),
            llm_calls,
            navigation: outcome.navigation,
            gait: outcome.gait.map(|(p, _)| p),
        });
        if verdict.status == SubgoalStatus::Failed {
            match replan.and_then(|hook| hook(&trace, i)) {
                Some(rest) => {
                    for s in &rest {
                        retrieve_skill(s, library)?;
                    }
                    trace.plan.truncate(i + 1);
                    trace.plan.extend(rest);
                }
                None => break,
            }
        }
        i += 1;
    }
    trace.task_complete = trace.plan.iter().all(|s| s.status == SubgoalStatus::Succeeded);
    Ok(trace)
}

/// An instruction paired with a scene and a transcript. Relative paths
/// resolve against the scenario file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub instruction: String,
    pub scene: PathBuf,
    pub transcript: PathBuf,
    #[serde(default)]
    pub cost_mode: Option<CostMode>,
    /// `[x, y, yaw]`; defaults to the scene's first frame pose.
    #[serde(default)]
    pub start: Option<[f64; 3]>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, TaskError> {
        if text.trim().is_empty() {
            return Err(TaskError::Scenario("scenario file is empty".into()));
        }
        let s: Scenario = serde_json::from_str(text).map_err(|e| TaskError::Scenario(e.to_string()))?;
        if s.instruction.trim().is_empty() {
            return Err(TaskError::EmptyInstruction);
        }
        if let Some(p) = s.start {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(TaskError::Scenario("start pose is not finite".into()));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, TaskError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TaskError::Scenario(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        s.scene = dir.join(&s.scene);
        s.transcript = dir.join(&s.transcript);
        Ok(s)
    }

    pub fn load_scene(&self) -> Result<Scene, TaskError> {
        let text = std::fs::read_to_string(&self.scene)
            .map_err(|e| TaskError::Scenario(format!("cannot read {}: {e}", self.scene.display())))?;
        Ok(parse_scene(&text)?)
    }

    pub fn start_pose(&self) -> Option<Pose> {
        self.start.map(|[x, y, yaw]| Pose::new(x, y, yaw))
    }
}

/// Decomposes and executes a scenario. The scenario's cost mode, if set,
/// overrides the config's.
pub fn run_scenario(
    scenario: &Scenario,
    scene: &Scene,
    gateway: &Gateway,
    cfg: &Config,
) -> Result<ExecutionTrace, TaskError> {
    let mut cfg = cfg.clone();
    if let Some(mode) = scenario.cost_mode {
        cfg.navigation.cost_mode = mode;
    }
    let library = SkillLibrary::default();
    let mut world = World::from_scene(scene, scenario.start_pose(), &cfg.mapping)?;
    let plan = decompose(&scenario.instruction, &library, gateway)?;
    execute(&scenario.instruction, plan, &library, &mut world, gateway, &cfg)
}
