//! Generators for the bundled synthetic scenes.
//!
//! Objects are axis-aligned boxes filled with one labeled point per cell
//! centre. Planning scenes hold the frames of an eight-heading scan from the
//! origin; task scenes hold a single frame with the whole ground truth, from
//! which the executor samples what the agent can currently see.

use crate::mapping::{in_footprint, Frame, LabeledPoint, MappingConfig, Pose, Scene, SceneHeader};

pub const CELL_SIZE: f64 = 0.05;
/// Headings per in-place scan.
pub const SCAN_HEADINGS: usize = 8;

/// Box `[x0, x1) x [y0, y1)` in metres at height `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub category: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub z: f64,
}

impl Region {
    pub fn new(category: usize, x0: f64, y0: f64, x1: f64, y1: f64, z: f64) -> Self {
        Self { category, x0, y0, x1, y1, z }
    }

    /// One point at the centre of every covered cell.
    pub fn points(&self, cell_size: f64) -> Vec<LabeledPoint> {
        let span = |a: f64, b: f64| (a / cell_size).round() as i64..(b / cell_size).round() as i64;
        let mut out = Vec::new();
        for i in span(self.x0, self.x1) {
            for j in span(self.y0, self.y1) {
                out.push(LabeledPoint {
                    x: (i as f64 + 0.5) * cell_size,
                    y: (j as f64 + 0.5) * cell_size,
                    z: self.z,
                    category: self.category,
                });
            }
        }
        out
    }
}

/// Square ring of wall boxes with outer bounds `[x0, x1) x [y0, y1)`.
pub fn ring(category: usize, x0: f64, y0: f64, x1: f64, y1: f64, thickness: f64, z: f64) -> Vec<Region> {
    vec![
        Region::new(category, x0, y0, x1, y0 + thickness, z),
        Region::new(category, x0, y1 - thickness, x1, y1, z),
        Region::new(category, x0, y0 + thickness, x0 + thickness, y1 - thickness, z),
        Region::new(category, x1 - thickness, y0 + thickness, x1, y1 - thickness, z),
    ]
}

pub fn ground_truth(regions: &[Region], cell_size: f64) -> Vec<LabeledPoint> {
    regions.iter().flat_map(|r| r.points(cell_size)).collect()
}

/// Frames of an in-place scan: `headings` evenly spaced yaws starting at
/// `pose.yaw`, each holding the points inside that view's footprint.
pub fn scan_frames(truth: &[LabeledPoint], pose: Pose, headings: usize, cfg: &MappingConfig) -> Vec<Frame> {
    (0..headings)
        .map(|k| {
            let view = Pose::new(
                pose.x,
                pose.y,
                crate::mapping::wrap_angle(pose.yaw + k as f64 * 2.0 * std::f64::consts::PI / headings as f64),
            );
            Frame {
                pose: view,
                points: truth
                    .iter()
                    .copied()
                    .filter(|p| in_footprint(&view, p.x, p.y, cfg))
                    .collect(),
            }
        })
        .collect()
}

fn header(categories: &[&str], map_size: usize) -> SceneHeader {
    SceneHeader {
        categories: categories.iter().map(|s| s.to_string()).collect(),
        cell_size: CELL_SIZE,
        map_size,
    }
}

fn scan_scene(categories: &[&str], map_size: usize, regions: &[Region]) -> Scene {
    let truth = ground_truth(regions, CELL_SIZE);
    let frames = scan_frames(&truth, Pose::default(), SCAN_HEADINGS, &MappingConfig::default());
    Scene {
        header: header(categories, map_size),
        frames,
    }
}

fn truth_scene(categories: &[&str], map_size: usize, regions: &[Region], start: Pose) -> Scene {
    Scene {
        header: header(categories, map_size),
        frames: vec![Frame {
            pose: start,
            points: ground_truth(regions, CELL_SIZE),
        }],
    }
}

/// Chair 2.6 m ahead with a mattress band across the straight line to it;
/// `with_band = false` gives the control scene.
pub fn band_scene(with_band: bool) -> Scene {
    let mut regions = vec![Region::new(0, 2.4, -0.2, 2.8, 0.2, 0.45)];
    if with_band {
        regions.push(Region::new(1, 1.0, -1.0, 1.6, 1.0, 0.25));
    }
    scan_scene(&["chair", "mattress"], 160, &regions)
}

/// Chair sealed inside a wall ring.
pub fn walled_scene() -> Scene {
    let mut regions = vec![Region::new(0, 1.8, -0.2, 2.2, 0.2, 0.45)];
    regions.extend(ring(1, 1.3, -0.5, 2.3, 0.5, 0.1, 0.8));
    scan_scene(&["chair", "wall"], 160, &regions)
}

/// Chair alone in open space.
pub fn empty_scene() -> Scene {
    scan_scene(&["chair"], 160, &[Region::new(0, 2.0, -0.2, 2.4, 0.2, 0.45)])
}

/// Bed, then a patch of grass, a sofa and a pile of blue clothes behind it.
pub fn errand_scene() -> Scene {
    let regions = [
        Region::new(0, 1.0, -0.8, 2.0, 0.8, 0.4),
        Region::new(1, 2.5, -1.0, 4.5, 1.0, 0.02),
        Region::new(2, 4.6, 0.4, 5.0, 1.6, 0.5),
        Region::new(3, 5.2, 1.6, 5.6, 2.0, 0.05),
    ];
    truth_scene(&["bed", "grass", "sofa", "blue clothes"], 240, &regions, Pose::default())
}

/// Blue clothes sealed inside a wall ring.
pub fn walled_clothes_scene() -> Scene {
    let mut regions = vec![Region::new(0, 1.8, -0.2, 2.2, 0.2, 0.05)];
    regions.extend(ring(1, 1.3, -0.5, 2.3, 0.5, 0.1, 0.8));
    truth_scene(&["blue clothes", "wall"], 160, &regions, Pose::default())
}

/// Blue clothes behind the agent, outside the initial view.
pub fn hidden_clothes_scene() -> Scene {
    truth_scene(
        &["blue clothes"],
        160,
        &[Region::new(0, -2.9, 1.4, -2.5, 1.8, 0.05)],
        Pose::new(0.0, 0.0, 0.0),
    )
}

/// File name and contents of every bundled scene.
pub fn bundled() -> Vec<(&'static str, Scene)> {
    vec![
        ("band.jsonl", band_scene(true)),
        ("band_control.jsonl", band_scene(false)),
        ("walled.jsonl", walled_scene()),
        ("empty.jsonl", empty_scene()),
        ("errand.jsonl", errand_scene()),
        ("walled_clothes.jsonl", walled_clothes_scene()),
        ("hidden_clothes.jsonl", hidden_clothes_scene()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_points_land_on_cell_centres() {
        let pts = Region::new(0, 1.0, -0.2, 1.2, 0.2, 0.1).points(0.05);
        assert_eq!(pts.len(), 4 * 8);
        assert!(pts.iter().all(|p| ((p.x / 0.05).fract() - 0.5).abs() < 1e-9));
    }

    #[test]
    fn ring_is_closed() {
        let pts = ground_truth(&ring(0, 0.0, 0.0, 1.0, 1.0, 0.1, 0.5), 0.05);
        let cells: std::collections::BTreeSet<(i64, i64)> = pts
            .iter()
            .map(|p| ((p.x / 0.05).floor() as i64, (p.y / 0.05).floor() as i64))
            .collect();
        assert_eq!(cells.len(), 20 * 20 - 16 * 16);
    }

    #[test]
    fn scan_covers_all_near_points() {
        let scene = walled_scene();
        assert_eq!(scene.frames.len(), SCAN_HEADINGS);
        let truth = ground_truth(
            &{
                let mut r = vec![Region::new(0, 1.8, -0.2, 2.2, 0.2, 0.45)];
                r.extend(ring(1, 1.3, -0.5, 2.3, 0.5, 0.1, 0.8));
                r
            },
            CELL_SIZE,
        );
        let seen: usize = scene.frames.iter().map(|f| f.points.len()).sum();
        assert!(seen >= truth.len());
        for p in &truth {
            assert!(scene.frames.iter().any(|f| f.points.contains(p)));
        }
    }
}
