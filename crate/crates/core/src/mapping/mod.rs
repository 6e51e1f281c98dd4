//! Semantic instance map.
//!
//! The map is a `K x M x M` integer grid with `K = C + 3`: one channel per
//! category holding the owning instance id of each cell, then the explored,
//! current-position and past-position channels. Row index follows world `y`,
//! column index follows world `x`, and the map origin sits at the grid centre.

mod memory;
mod scene;

pub use memory::{
    dilate, ingest, match_detection, merge, Detection, InstanceMemory, InstanceRecord, ViewRef,
};
pub use scene::{parse_scene, scene_to_jsonl, Scene, SceneHeader};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Map cell as `(row, col)`.
pub type Cell = (i32, i32);

/// Value written to category channels by [`SemanticMap::project_frame`] for
/// cells not yet owned by an instance.
pub const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("point ({x}, {y}) lies outside the {size} m map")]
    OutOfExtent { x: f64, y: f64, size: f64 },
    #[error("category id {id} out of range (map has {count} categories)")]
    UnknownCategory { id: usize, count: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("instance {id} has class {have}, detection has class {got}")]
    ClassMismatch { id: u32, have: usize, got: usize },
    #[error("no instance with id {0}")]
    UnknownInstance(u32),
    #[error("invalid map geometry: {0}")]
    Geometry(String),
    #[error("scene line {line}: {reason}")]
    Scene { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// Cells per side.
    pub map_size: usize,
    pub cell_size: f64,
    /// Dilation radius for instance matching, in cells.
    pub dilation: usize,
    pub sensor_range: f64,
    /// Horizontal field of view in degrees.
    pub fov_deg: f64,
    /// Cells within this radius of the agent count as observed regardless of
    /// heading.
    pub near_radius: f64,
    pub max_height: f64,
    pub height_bin: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            map_size: 480,
            cell_size: 0.05,
            dilation: 3,
            sensor_range: 3.0,
            fov_deg: 87.0,
            near_radius: 0.5,
            max_height: 2.0,
            height_bin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, 0 = east (+x).
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// True when `(x, y)` is inside the sensor footprint at `pose`.
pub fn in_footprint(pose: &Pose, x: f64, y: f64, cfg: &MappingConfig) -> bool {
    let d = pose.distance_to(x, y);
    if d <= cfg.near_radius {
        return true;
    }
    if d > cfg.sensor_range {
        return false;
    }
    let bearing = wrap_angle((y - pose.y).atan2(x - pose.x) - pose.yaw);
    bearing.abs() <= cfg.fov_deg.to_radians() / 2.0 + 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub category: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub pose: Pose,
    pub points: Vec<LabeledPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    categories: Vec<String>,
    size: usize,
    cell_size: f64,
    data: Vec<u32>,
    frames_seen: usize,
}

impl SemanticMap {
    pub fn new(categories: Vec<String>, size: usize, cell_size: f64) -> Result<Self, MappingError> {
        if size == 0 || size > 1 << 14 {
            return Err(MappingError::Geometry(format!("map size {size} out of range")));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(MappingError::Geometry(format!("cell size {cell_size} must be positive")));
        }
        let channels = categories.len() + 3;
        Ok(Self {
            categories,
            size,
            cell_size,
            data: vec![0; channels * size * size],
            frames_seen: 0,
        })
    }

    pub fn with_config(categories: Vec<String>, cfg: &MappingConfig) -> Result<Self, MappingError> {
        Self::new(categories, cfg.map_size, cfg.cell_size)
    }

    /// Number of channels, `C + 3`.
    pub fn channels(&self) -> usize {
        self.categories.len() + 3
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn explored_channel(&self) -> usize {
        self.categories.len()
    }

    pub fn current_channel(&self) -> usize {
        self.categories.len() + 1
    }

    pub fn past_channel(&self) -> usize {
        self.categories.len() + 2
    }

    /// Side length in metres.
    pub fn extent(&self) -> f64 {
        self.size as f64 * self.cell_size
    }

    /// Appends a category channel, reallocating the grid. Returns its index.
    pub fn add_category(&mut self, name: &str) -> usize {
        if let Some(i) = self.category_index(name) {
            return i;
        }
        let plane = self.size * self.size;
        let c = self.categories.len();
        let mut data = Vec::with_capacity((c + 4) * plane);
        data.extend_from_slice(&self.data[..c * plane]);
        data.extend(std::iter::repeat(0).take(plane));
        data.extend_from_slice(&self.data[c * plane..]);
        self.data = data;
        self.categories.push(name.to_string());
        c
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.size && (c as usize) < self.size
    }

    fn offset(&self, channel: usize, (r, c): Cell) -> usize {
        (channel * self.size + r as usize) * self.size + c as usize
    }

    /// Reads a cell; out-of-bounds cells read as zero.
    pub fn get(&self, channel: usize, cell: Cell) -> u32 {
        if channel >= self.channels() || !self.in_bounds(cell) {
            return 0;
        }
        self.data[self.offset(channel, cell)]
    }

    pub fn set(&mut self, channel: usize, cell: Cell, value: u32) {
        if channel < self.channels() && self.in_bounds(cell) {
            let o = self.offset(channel, cell);
            self.data[o] = value;
        }
    }

    pub fn channel(&self, channel: usize) -> &[u32] {
        let plane = self.size * self.size;
        &self.data[channel * plane..(channel + 1) * plane]
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Result<Cell, MappingError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(MappingError::NonFinite("point"));
        }
        let half = (self.size / 2) as i64;
        let col = (x / self.cell_size + 1e-9).floor() as i64 + half;
        let row = (y / self.cell_size + 1e-9).floor() as i64 + half;
        let n = self.size as i64;
        if !(0..n).contains(&row) || !(0..n).contains(&col) {
            return Err(MappingError::OutOfExtent { x, y, size: self.extent() });
        }
        Ok((row as i32, col as i32))
    }

    /// World coordinates of a cell centre.
    pub fn cell_to_world(&self, (r, c): Cell) -> (f64, f64) {
        let half = (self.size / 2) as f64;
        (
            (c as f64 - half + 0.5) * self.cell_size,
            (r as f64 - half + 0.5) * self.cell_size,
        )
    }

    pub fn is_explored(&self, cell: Cell) -> bool {
        self.get(self.explored_channel(), cell) != 0
    }

    pub fn explored_count(&self) -> usize {
        self.channel(self.explored_channel()).iter().filter(|v| **v != 0).count()
    }

    /// Category ids with a nonzero entry at `cell`.
    pub fn categories_at(&self, cell: Cell) -> impl Iterator<Item = usize> + '_ {
        (0..self.categories.len()).filter(move |&c| self.get(c, cell) != 0)
    }

    pub fn current_cell(&self) -> Option<Cell> {
        let ch = self.channel(self.current_channel());
        ch.iter()
            .position(|v| *v != 0)
            .map(|i| ((i / self.size) as i32, (i % self.size) as i32))
    }

    /// Moves the agent marker and marks the sensor footprint explored.
    pub fn update_pose(&mut self, pose: &Pose, cfg: &MappingConfig) -> Result<(), MappingError> {
        if !pose.is_finite() {
            return Err(MappingError::NonFinite("pose"));
        }
        let here = self.world_to_cell(pose.x, pose.y)?;
        let cur = self.current_channel();
        let plane = self.size * self.size;
        self.data[cur * plane..(cur + 1) * plane].fill(0);
        self.set(cur, here, 1);
        self.set(self.past_channel(), here, 1);

        let reach = (cfg.sensor_range.max(cfg.near_radius) / self.cell_size).ceil() as i32 + 1;
        let explored = self.explored_channel();
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let cell = (here.0 + dr, here.1 + dc);
                if !self.in_bounds(cell) {
                    continue;
                }
                let (x, y) = self.cell_to_world(cell);
                if in_footprint(pose, x, y, cfg) {
                    self.set(explored, cell, 1);
                }
            }
        }
        self.set(explored, here, 1);
        Ok(())
    }

    /// Bins a labeled cloud into height voxels, sums over the vertical axis
    /// and marks every supported `(cell, category)` in that category's
    /// channel. Returns one detection per 8-connected component per category.
    /// Points outside the map or the height window are skipped.
    pub fn project_frame(
        &mut self,
        frame: &Frame,
        frame_index: usize,
        cfg: &MappingConfig,
    ) -> Result<Vec<Detection>, MappingError> {
        self.update_pose(&frame.pose, cfg)?;
        let touched = self.touched_cells(&frame.points, cfg)?;
        let explored = self.explored_channel();
        for (&cat, cells) in &touched {
            for &cell in cells {
                self.set(explored, cell, 1);
                if self.get(cat, cell) == 0 {
                    self.set(cat, cell, UNASSIGNED);
                }
            }
        }
        self.frames_seen += 1;
        let mut detections = Vec::new();
        for (cat, cells) in touched {
            for component in components(&cells) {
                detections.push(Detection::new(cat, component, frame_index, cfg.dilation));
            }
        }
        Ok(detections)
    }

    /// Cells with nonzero vertical support, per category.
    pub fn touched_cells(
        &self,
        points: &[LabeledPoint],
        cfg: &MappingConfig,
    ) -> Result<BTreeMap<usize, BTreeSet<Cell>>, MappingError> {
        let bins = (cfg.max_height / cfg.height_bin).round() as i64;
        let mut column: BTreeMap<(usize, Cell), BTreeSet<i64>> = BTreeMap::new();
        for p in points {
            if p.category >= self.categories.len() {
                return Err(MappingError::UnknownCategory {
                    id: p.category,
                    count: self.categories.len(),
                });
            }
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(MappingError::NonFinite("point"));
            }
            let bin = (p.z / cfg.height_bin + 1e-9).floor() as i64;
            if !(0..bins).contains(&bin) {
                continue;
            }
            let Ok(cell) = self.world_to_cell(p.x, p.y) else {
                continue;
            };
            column.entry((p.category, cell)).or_default().insert(bin);
        }
        let mut out: BTreeMap<usize, BTreeSet<Cell>> = BTreeMap::new();
        for ((cat, cell), voxels) in column {
            if !voxels.is_empty() {
                out.entry(cat).or_default().insert(cell);
            }
        }
        Ok(out)
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Grayscale export of one channel: nonzero cells white, row 0 at the
    /// bottom so north is up.
    pub fn channel_pgm(&self, channel: usize) -> Vec<u8> {
        let n = self.size;
        let mut pixels = vec![0u8; n * n];
        for r in 0..n {
            for c in 0..n {
                if self.get(channel, (r as i32, c as i32)) != 0 {
                    pixels[(n - 1 - r) * n + c] = 255;
                }
            }
        }
        crate::pgm::encode(n, n, &pixels)
    }
}

const NEIGHBORS8: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// 8-connected components, each in ascending cell order; components ordered
/// by their smallest cell.
pub fn components(cells: &BTreeSet<Cell>) -> Vec<BTreeSet<Cell>> {
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in cells {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(c) = stack.pop() {
            comp.insert(c);
            for (dr, dc) in NEIGHBORS8 {
                let n = (c.0 + dr, c.1 + dc);
                if cells.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        out.push(comp);
    }
    out
}
