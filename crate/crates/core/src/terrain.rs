//! Benchmark terrains as heightfields.
//!
//! Every terrain has a flat platform centred on the world origin. Slopes and
//! stairs start at the platform edge and are mirrored along -x. The raw
//! parameter values are stored with their simulator sign convention (negative
//! slope and step height for the ascending terrains); world heights rise for
//! the uphill/upside variants.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("query ({x}, {y}) outside the heightfield extent")]
    OutOfExtent { x: f64, y: f64 },
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    #[error("unknown terrain `{0}`; valid names: {names}", names = TerrainKind::names().join(", "))]
    UnknownTerrain(String),
    #[error("invalid heightfield: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    UphillSlope,
    DownhillSlope,
    UpsideStair,
    DownsideStair,
    UnevenGround,
}

impl TerrainKind {
    pub const ALL: [TerrainKind; 5] = [
        TerrainKind::UphillSlope,
        TerrainKind::DownhillSlope,
        TerrainKind::UpsideStair,
        TerrainKind::DownsideStair,
        TerrainKind::UnevenGround,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TerrainKind::UphillSlope => "uphill_slope",
            TerrainKind::DownhillSlope => "downhill_slope",
            TerrainKind::UpsideStair => "upside_stair",
            TerrainKind::DownsideStair => "downside_stair",
            TerrainKind::UnevenGround => "uneven_ground",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|k| k.name()).collect()
    }

    /// Default spec with the benchmark parameters.
    pub fn default_spec(self) -> TerrainSpec {
        match self {
            TerrainKind::UphillSlope => TerrainSpec::UphillSlope {
                slope: -0.15,
                platform_size: 0.6,
            },
            TerrainKind::DownhillSlope => TerrainSpec::DownhillSlope {
                slope: 0.4,
                platform_size: 0.8,
            },
            TerrainKind::UpsideStair => TerrainSpec::UpsideStair {
                step_width: 0.5,
                step_height: -0.1,
                platform_size: 0.8,
            },
            TerrainKind::DownsideStair => TerrainSpec::DownsideStair {
                step_width: 0.5,
                step_height: 0.1,
                platform_size: 1.0,
            },
            TerrainKind::UnevenGround => TerrainSpec::UnevenGround {
                min_height: 0.0,
                max_height: 0.2,
                seed: 0,
            },
        }
    }

    /// Natural-language description handed to the language model.
    pub fn description(self) -> &'static str {
        match self {
            TerrainKind::UphillSlope => "There is an uphill slope. The slope rises 15 centimeters for every meter travelled.",
            TerrainKind::DownhillSlope => "There is a downhill slope. The slope drops 40 centimeters for every meter travelled.",
            TerrainKind::UpsideStair => "There is a staircase going up here. Each step is 10 centimeters in height and 50 centimeters in width.",
            TerrainKind::DownsideStair => "There is a staircase going down here. Each step is 10 centimeters in height and 50 centimeters in width.",
            TerrainKind::UnevenGround => "There is uneven ground. The ground's maximum height is 20 cm, and the minimum height is 0 cm.",
        }
    }
}

impl fmt::Display for TerrainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TerrainKind {
    type Err = TerrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        TerrainKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| TerrainError::UnknownTerrain(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TerrainSpec {
    UphillSlope {
        slope: f64,
        platform_size: f64,
    },
    DownhillSlope {
        slope: f64,
        platform_size: f64,
    },
    UpsideStair {
        step_width: f64,
        step_height: f64,
        platform_size: f64,
    },
    DownsideStair {
        step_width: f64,
        step_height: f64,
        platform_size: f64,
    },
    UnevenGround {
        min_height: f64,
        max_height: f64,
        seed: u64,
    },
}

impl TerrainSpec {
    pub fn kind(&self) -> TerrainKind {
        match self {
            TerrainSpec::UphillSlope { .. } => TerrainKind::UphillSlope,
            TerrainSpec::DownhillSlope { .. } => TerrainKind::DownhillSlope,
            TerrainSpec::UpsideStair { .. } => TerrainKind::UpsideStair,
            TerrainSpec::DownsideStair { .. } => TerrainKind::DownsideStair,
            TerrainSpec::UnevenGround { .. } => TerrainKind::UnevenGround,
        }
    }

    /// Platform side length; uneven ground has none.
    pub fn platform_size(&self) -> f64 {
        match *self {
            TerrainSpec::UphillSlope { platform_size, .. }
            | TerrainSpec::DownhillSlope { platform_size, .. }
            | TerrainSpec::UpsideStair { platform_size, .. }
            | TerrainSpec::DownsideStair { platform_size, .. } => platform_size,
            TerrainSpec::UnevenGround { .. } => 0.0,
        }
    }

    /// World-frame height of the feature profile at distance `d >= 0` past the
    /// platform edge.
    fn profile(&self, d: f64) -> f64 {
        match *self {
            TerrainSpec::UphillSlope { slope, .. } => slope.abs() * d,
            TerrainSpec::DownhillSlope { slope, .. } => -slope.abs() * d,
            TerrainSpec::UpsideStair {
                step_width,
                step_height,
                ..
            } => (d / step_width).floor() * step_height.abs(),
            TerrainSpec::DownsideStair {
                step_width,
                step_height,
                ..
            } => -(d / step_width).floor() * step_height.abs(),
            TerrainSpec::UnevenGround { .. } => 0.0,
        }
    }
}

/// Regular grid of node heights. Node `(i, j)` sits at
/// `origin + (i * resolution, j * resolution)` with `i` along x.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightfield {
    nx: usize,
    ny: usize,
    resolution: f64,
    origin: [f64; 2],
    heights: Vec<f64>,
}

impl Heightfield {
    pub const DEFAULT_RESOLUTION: f64 = 0.05;
    pub const DEFAULT_EXTENT: f64 = 8.0;

    pub fn from_fn(
        nx: usize,
        ny: usize,
        resolution: f64,
        origin: [f64; 2],
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, TerrainError> {
        if nx < 2 || ny < 2 || !(resolution > 0.0) {
            return Err(TerrainError::Invalid(format!(
                "need at least 2x2 nodes and positive resolution, got {nx}x{ny} @ {resolution}"
            )));
        }
        let mut heights = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let h = f(
                    origin[0] + i as f64 * resolution,
                    origin[1] + j as f64 * resolution,
                );
                if !h.is_finite() {
                    return Err(TerrainError::Invalid(format!("non-finite height at ({i}, {j})")));
                }
                heights.push(h);
            }
        }
        Ok(Self {
            nx,
            ny,
            resolution,
            origin,
            heights,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.nx + i]
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.resolution,
            self.origin[1] + j as f64 * self.resolution,
        ]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn extent(&self) -> [f64; 2] {
        [
            (self.nx - 1) as f64 * self.resolution,
            (self.ny - 1) as f64 * self.resolution,
        ]
    }

    /// Bilinear interpolation of the surrounding nodes.
    pub fn height_at(&self, x: f64, y: f64) -> Result<f64, TerrainError> {
        let u = (x - self.origin[0]) / self.resolution;
        let v = (y - self.origin[1]) / self.resolution;
        let (umax, vmax) = ((self.nx - 1) as f64, (self.ny - 1) as f64);
        if !(u.is_finite() && v.is_finite()) || u < -1e-9 || v < -1e-9 || u > umax + 1e-9 || v > vmax + 1e-9 {
            return Err(TerrainError::OutOfExtent { x, y });
        }
        let u = u.clamp(0.0, umax);
        let v = v.clamp(0.0, vmax);
        let i0 = (u.floor() as usize).min(self.nx - 2);
        let j0 = (v.floor() as usize).min(self.ny - 2);
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let h00 = self.node(i0, j0);
        let h10 = self.node(i0 + 1, j0);
        let h01 = self.node(i0, j0 + 1);
        let h11 = self.node(i0 + 1, j0 + 1);
        Ok((1.0 - fv) * ((1.0 - fu) * h00 + fu * h10) + fv * ((1.0 - fu) * h01 + fu * h11))
    }

    /// Mean forward-difference gradient magnitude and height span over the
    /// nodes inside `region`.
    pub fn slope_roughness(&self, region: Region) -> Result<TerrainStats, TerrainError> {
        if !(region.x0 < region.x1 && region.y0 < region.y1) {
            return Err(TerrainError::DegenerateRegion(format!("{region:?} is empty")));
        }
        let [ex, ey] = self.extent();
        let (ox, oy) = (self.origin[0], self.origin[1]);
        if region.x0 < ox - 1e-9
            || region.y0 < oy - 1e-9
            || region.x1 > ox + ex + 1e-9
            || region.y1 > oy + ey + 1e-9
        {
            return Err(TerrainError::DegenerateRegion(format!(
                "{region:?} leaves the heightfield extent"
            )));
        }
        let to_idx_lo = |p: f64, o: f64| ((p - o) / self.resolution - 1e-9).ceil().max(0.0) as usize;
        let to_idx_hi = |p: f64, o: f64| ((p - o) / self.resolution + 1e-9).floor() as usize;
        let (i0, i1) = (to_idx_lo(region.x0, ox), to_idx_hi(region.x1, ox).min(self.nx - 1));
        let (j0, j1) = (to_idx_lo(region.y0, oy), to_idx_hi(region.y1, oy).min(self.ny - 1));
        if i1 <= i0 || j1 <= j0 {
            return Err(TerrainError::DegenerateRegion(format!(
                "{region:?} covers fewer than 2x2 nodes"
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let h = self.node(i, j);
                lo = lo.min(h);
                hi = hi.max(h);
            }
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in j0..j1 {
            for i in i0..i1 {
                let h = self.node(i, j);
                let gx = (self.node(i + 1, j) - h) / self.resolution;
                let gy = (self.node(i, j + 1) - h) / self.resolution;
                sum += gx.hypot(gy);
                n += 1;
            }
        }
        Ok(TerrainStats {
            mean_gradient: sum / n as f64,
            height_span: hi - lo,
        })
    }

    /// Whitespace-separated matrix, one row per y index, `ny` rows of `nx` values.
    pub fn write_matrix<W: Write>(&self, mut w: W) -> Result<(), TerrainError> {
        for j in 0..self.ny {
            let row: Vec<String> = (0..self.nx).map(|i| format!("{:.6}", self.node(i, j))).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    /// 8-bit PGM with heights scaled linearly between the field's min and max.
    pub fn to_pgm(&self) -> Vec<u8> {
        let lo = self.heights.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        // image rows run top-down, so flip y
        let mut pixels = Vec::with_capacity(self.nx * self.ny);
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                pixels.push((255.0 * (self.node(i, j) - lo) / span).round() as u8);
            }
        }
        crate::pgm::encode(self.nx, self.ny, &pixels)
    }
}

/// Axis-aligned world rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainStats {
    pub mean_gradient: f64,
    pub height_span: f64,
}

/// Builds the terrain on the default 8 m x 8 m, 5 cm grid centred on the origin.
pub fn build(spec: &TerrainSpec) -> Heightfield {
    build_with(spec, Heightfield::DEFAULT_EXTENT, Heightfield::DEFAULT_RESOLUTION)
}

pub fn build_with(spec: &TerrainSpec, extent: f64, resolution: f64) -> Heightfield {
    let n = (extent / resolution).round() as usize + 1;
    let half = 0.5 * (n - 1) as f64 * resolution;
    let origin = [-half, -half];
    let half_platform = 0.5 * spec.platform_size();
    match *spec {
        TerrainSpec::UnevenGround {
            min_height,
            max_height,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut heights = Vec::with_capacity(n * n);
            for _j in 0..n {
                for i in 0..n {
                    let x = origin[0] + i as f64 * resolution;
                    let h = min_height + (max_height - min_height) * rng.gen::<f64>();
                    // the zero-width platform keeps the spawn column at ground level
                    heights.push(if x.abs() <= half_platform + 1e-9 { 0.0 } else { h });
                }
            }
            Heightfield {
                nx: n,
                ny: n,
                resolution,
                origin,
                heights,
            }
        }
        _ => Heightfield::from_fn(n, n, resolution, origin, |x, _y| {
            let d = (x.abs() - half_platform).max(0.0);
            // snap to suppress round-off right at step edges
            let d = (d * 1e9).round() / 1e9;
            spec.profile(d)
        })
        .expect("benchmark terrains are finite"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn platform_center_is_zero() {
        for k in TerrainKind::ALL {
            let hf = build(&k.default_spec());
            assert_eq!(hf.height_at(0.0, 0.0).unwrap(), 0.0, "{k}");
        }
    }

    #[test]
    fn upside_stair_two_steps() {
        let hf = build(&TerrainKind::UpsideStair.default_spec());
        // platform edge at 0.4 m, 1.3 m past it -> two 0.1 m steps
        assert_abs_diff_eq!(hf.height_at(1.7, 0.0).unwrap(), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(hf.height_at(-1.7, 1.0).unwrap(), 0.2, epsilon = 1e-12);
        let down = build(&TerrainKind::DownsideStair.default_spec());
        assert_abs_diff_eq!(down.height_at(0.5 + 1.3, 0.0).unwrap(), -0.2, epsilon = 1e-12);
    }

    #[test]
    fn stairs_jump_at_step_edges() {
        let hf = build(&TerrainKind::UpsideStair.default_spec());
        // nodes at 0.85 (0.45 past edge) and 0.9 (0.5 past edge)
        assert_abs_diff_eq!(hf.height_at(0.85, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hf.height_at(0.9, 0.0).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn uneven_ground_bounds_and_determinism() {
        let spec = TerrainKind::UnevenGround.default_spec();
        let a = build(&spec);
        let b = build(&spec);
        assert_eq!(a, b);
        let lo = a.heights().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.heights().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo >= 0.0 && hi <= 0.2);
        let region = Region { x0: 1.0, x1: 3.0, y0: -1.0, y1: 1.0 };
        assert_eq!(a.slope_roughness(region).unwrap(), b.slope_roughness(region).unwrap());
        let other = build(&TerrainSpec::UnevenGround { min_height: 0.0, max_height: 0.2, seed: 7 });
        assert_ne!(a, other);
    }

    #[test]
    fn roughness_examples() {
        let hf = build(&TerrainKind::UphillSlope.default_spec());
        let flat = hf.slope_roughness(Region { x0: -0.25, x1: 0.25, y0: -1.0, y1: 1.0 }).unwrap();
        assert_eq!(flat.mean_gradient, 0.0);
        assert_eq!(flat.height_span, 0.0);
        let slope = hf.slope_roughness(Region { x0: 1.0, x1: 3.0, y0: -1.0, y1: 1.0 }).unwrap();
        assert_abs_diff_eq!(slope.mean_gradient, 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(slope.height_span, 0.3, epsilon = 1e-9);
        assert!(hf.slope_roughness(Region { x0: 1.0, x1: 1.0, y0: 0.0, y1: 1.0 }).is_err());
        assert!(hf.slope_roughness(Region { x0: 1.0, x1: 1.01, y0: 0.0, y1: 1.0 }).is_err());
    }

    #[test]
    fn interpolation_basics() {
        let hf = Heightfield::from_fn(3, 3, 0.5, [0.0, 0.0], |x, _| if x > 0.25 { 0.1 } else { 0.0 }).unwrap();
        assert_eq!(hf.height_at(0.5, 0.5).unwrap(), 0.1);
        assert_abs_diff_eq!(hf.height_at(0.25, 0.5).unwrap(), 0.05, epsilon = 1e-15);
        assert!(hf.height_at(1.2, 0.0).is_err());
        assert!(hf.height_at(-0.1, 0.0).is_err());
    }

    #[test]
    fn matrix_and_pgm_export() {
        let hf = build_with(&TerrainKind::UphillSlope.default_spec(), 1.0, 0.25);
        let mut buf = Vec::new();
        hf.write_matrix(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().all(|l| l.split_whitespace().count() == 5));
        let img = crate::pgm::decode(&hf.to_pgm()).unwrap();
        assert_eq!((img.width, img.height), (5, 5));
    }

    // independent bilinear evaluation straight from the four corner nodes
    fn oracle(hf: &Heightfield, x: f64, y: f64) -> f64 {
        let r = hf.resolution();
        let [ox, oy] = hf.origin();
        let (nx, ny) = hf.dims();
        let gx = ((x - ox) / r).min((nx - 1) as f64 - 1e-12);
        let gy = ((y - oy) / r).min((ny - 1) as f64 - 1e-12);
        let (i, j) = (gx.floor() as usize, gy.floor() as usize);
        let (a, b) = (gx - i as f64, gy - j as f64);
        let corners = [
            (hf.node(i, j), (1.0 - a) * (1.0 - b)),
            (hf.node(i + 1, j), a * (1.0 - b)),
            (hf.node(i, j + 1), (1.0 - a) * b),
            (hf.node(i + 1, j + 1), a * b),
        ];
        corners.iter().map(|(h, w)| h * w).sum()
    }

    proptest! {
        #[test]
        fn bilinear_matches_oracle(x in -3.9..3.9f64, y in -3.9..3.9f64, seed in 0u64..20) {
            let hf = build(&TerrainSpec::UnevenGround { min_height: 0.0, max_height: 0.2, seed });
            prop_assert!((hf.height_at(x, y).unwrap() - oracle(&hf, x, y)).abs() < 1e-12);
        }

        #[test]
        fn slopes_are_continuous(x in -3.9..3.9f64, k in 0usize..2) {
            let spec = TerrainKind::ALL[k].default_spec();
            let hf = build(&spec);
            let a = hf.height_at(x, 0.0).unwrap();
            let b = hf.height_at(x + 1e-6, 0.0).unwrap();
            prop_assert!((a - b).abs() < 1e-5);
        }
    }
}
