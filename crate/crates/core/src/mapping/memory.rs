//! Instance memory: detections are dilated and merged into existing
//! instances of the same class when they overlap.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Cell, Frame, MappingConfig, MappingError, SemanticMap, UNASSIGNED};

/// Map-space bounding box `[row0, col0, row1, col1]` (inclusive) of a
/// detection, tagged with the frame it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ViewRef {
    pub frame: usize,
    pub bbox: [i32; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: usize,
    pub cells: BTreeSet<Cell>,
    pub dilated: BTreeSet<Cell>,
    pub view: ViewRef,
}

impl Detection {
    pub fn new(class: usize, cells: BTreeSet<Cell>, frame: usize, p: usize) -> Self {
        let view = ViewRef {
            frame,
            bbox: bbox(&cells),
        };
        let dilated = dilate(&cells, p);
        Self { class, cells, dilated, view }
    }
}

fn bbox(cells: &BTreeSet<Cell>) -> [i32; 4] {
    let mut b = [i32::MAX, i32::MAX, i32::MIN, i32::MIN];
    for &(r, c) in cells {
        b[0] = b[0].min(r);
        b[1] = b[1].min(c);
        b[2] = b[2].max(r);
        b[3] = b[3].max(c);
    }
    b
}

/// Chebyshev dilation by `p` cells.
pub fn dilate(cells: &BTreeSet<Cell>, p: usize) -> BTreeSet<Cell> {
    if p == 0 {
        return cells.clone();
    }
    let p = p as i32;
    let mut out = BTreeSet::new();
    for &(r, c) in cells {
        for dr in -p..=p {
            for dc in -p..=p {
                out.insert((r + dr, c + dc));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: u32,
    pub class: usize,
    pub cells: BTreeSet<Cell>,
    pub views: BTreeSet<ViewRef>,
}

impl InstanceRecord {
    /// Mean `(row, col)` of the cells.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.cells.len().max(1) as f64;
        let (sr, sc) = self
            .cells
            .iter()
            .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
        (sr / n, sc / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMemory {
    instances: BTreeMap<u32, InstanceRecord>,
    next_id: u32,
}

impl Default for InstanceMemory {
    fn default() -> Self {
        Self {
            instances: BTreeMap::new(),
            next_id: 1,
        }
    }
}

impl InstanceMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&InstanceRecord> {
        self.instances.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.instances.values()
    }

    pub fn of_class(&self, class: usize) -> impl Iterator<Item = &InstanceRecord> {
        self.instances.values().filter(move |i| i.class == class)
    }

    /// Creates an instance from a detection and returns its id.
    pub fn insert(&mut self, d: &Detection) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        self.instances.insert(
            id,
            InstanceRecord {
                id,
                class: d.class,
                cells: d.cells.clone(),
                views: BTreeSet::from([d.view]),
            },
        );
        id
    }
}

/// Same-class instance with the largest overlap between the dilated
/// detection and its cells; ties go to the lowest id.
pub fn match_detection(d: &Detection, memory: &InstanceMemory) -> Option<u32> {
    let mut best: Option<(usize, u32)> = None;
    for inst in memory.of_class(d.class) {
        let overlap = if d.dilated.len() < inst.cells.len() {
            d.dilated.iter().filter(|c| inst.cells.contains(c)).count()
        } else {
            inst.cells.iter().filter(|c| d.dilated.contains(c)).count()
        };
        if overlap > 0 && best.map_or(true, |(o, _)| overlap > o) {
            best = Some((overlap, inst.id));
        }
    }
    best.map(|(_, id)| id)
}

/// Unions the detection's cells and view into instance `id`.
pub fn merge(id: u32, d: &Detection, memory: &mut InstanceMemory) -> Result<(), MappingError> {
    let inst = memory
        .instances
        .get_mut(&id)
        .ok_or(MappingError::UnknownInstance(id))?;
    if inst.class != d.class {
        return Err(MappingError::ClassMismatch {
            id,
            have: inst.class,
            got: d.class,
        });
    }
    inst.cells.extend(d.cells.iter().copied());
    inst.views.insert(d.view);
    Ok(())
}

/// Projects a frame and folds its detections into memory. Cells already
/// owned by a different instance of the same class stay with that instance,
/// so every marked cell has exactly one owner. Returns the ids touched.
pub fn ingest(
    map: &mut SemanticMap,
    memory: &mut InstanceMemory,
    frame: &Frame,
    frame_index: usize,
    cfg: &MappingConfig,
) -> Result<Vec<u32>, MappingError> {
    let detections = map.project_frame(frame, frame_index, cfg)?;
    let mut touched = Vec::new();
    for mut d in detections {
        let target = match_detection(&d, memory);
        d.cells.retain(|&cell| {
            let owner = map.get(d.class, cell);
            owner == 0 || owner == UNASSIGNED || Some(owner) == target
        });
        if d.cells.is_empty() {
            continue;
        }
        let id = match target {
            Some(id) => {
                merge(id, &d, memory)?;
                id
            }
            None => memory.insert(&d),
        };
        for &cell in &d.cells {
            map.set(d.class, cell, id);
        }
        touched.push(id);
    }
    Ok(touched)
}
