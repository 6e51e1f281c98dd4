//! Line-delimited scene files: a header line followed by one line per frame.
//!
//! ```text
//! {"categories": ["chair", "mattress"], "cell_size": 0.05, "M": 200}
//! {"pose": [0.0, 0.0, 0.0], "points": [[1.0, 0.5, 0.3, 0], ...]}
//! ```

use serde::{Deserialize, Serialize};

use super::{Frame, LabeledPoint, MappingError, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneHeader {
    pub categories: Vec<String>,
    pub cell_size: f64,
    #[serde(rename = "M", alias = "m")]
    pub map_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub header: SceneHeader,
    pub frames: Vec<Frame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    pose: [f64; 3],
    points: Vec<[f64; 4]>,
}

fn err(line: usize, reason: impl Into<String>) -> MappingError {
    MappingError::Scene {
        line,
        reason: reason.into(),
    }
}

pub fn parse_scene(text: &str) -> Result<Scene, MappingError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header_line) = lines.next().ok_or_else(|| err(1, "empty scene file"))?;
    let header: SceneHeader =
        serde_json::from_str(header_line).map_err(|e| err(hl, format!("header: {e}")))?;
    if header.categories.is_empty() {
        return Err(err(hl, "header lists no categories"));
    }
    if !(header.cell_size.is_finite() && header.cell_size > 0.0) {
        return Err(err(hl, "cell_size must be positive"));
    }
    if header.map_size == 0 || header.map_size > 1 << 14 {
        return Err(err(hl, format!("M = {} out of range", header.map_size)));
    }
    let c = header.categories.len();
    let mut frames = Vec::new();
    for (ln, line) in lines {
        let raw: RawFrame = serde_json::from_str(line).map_err(|e| err(ln, e.to_string()))?;
        if raw.pose.iter().any(|v| !v.is_finite()) {
            return Err(err(ln, "non-finite pose"));
        }
        let mut points = Vec::with_capacity(raw.points.len());
        for (k, p) in raw.points.iter().enumerate() {
            if p[..3].iter().any(|v| !v.is_finite()) {
                return Err(err(ln, format!("point {k}: non-finite coordinate")));
            }
            let cat = p[3];
            if cat < 0.0 || cat.fract() != 0.0 || cat >= c as f64 {
                return Err(err(ln, format!("point {k}: category {cat} not in 0..{c}")));
            }
            points.push(LabeledPoint {
                x: p[0],
                y: p[1],
                z: p[2],
                category: cat as usize,
            });
        }
        frames.push(Frame {
            pose: Pose::new(raw.pose[0], raw.pose[1], raw.pose[2]),
            points,
        });
    }
    Ok(Scene { header, frames })
}

pub fn scene_to_jsonl(scene: &Scene) -> String {
    let mut out = serde_json::to_string(&scene.header).expect("header serializes");
    out.push('\n');
    for f in &scene.frames {
        let raw = RawFrame {
            pose: [f.pose.x, f.pose.y, f.pose.yaw],
            points: f
                .points
                .iter()
                .map(|p| [p.x, p.y, p.z, p.category as f64])
                .collect(),
        };
        out.push_str(&serde_json::to_string(&raw).expect("frame serializes"));
        out.push('\n');
    }
    out
}
