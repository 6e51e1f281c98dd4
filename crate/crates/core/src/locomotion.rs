//! Command vector, behavior parameters, gait presets and the closed-form
//! gait-phase clock.
//!
//! The behavior parameters are the five continuous knobs of the low-level
//! controller (body height, stepping frequency, foot swing height, body pitch,
//! foot stance width) plus a gait, given as three timing offsets between foot
//! pairs. Each continuous knob is split into five contiguous ordinal levels;
//! [`LevelTable`] holds those intervals and can be loaded from config.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction of the gait cycle a foot is commanded to be in stance.
pub const DEFAULT_DUTY_FACTOR: f64 = 0.5;

/// Absolute tolerance used when deciding whether a value lies on a sampling grid.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocomotionError {
    #[error("cycle fraction {0} outside [0, 1]")]
    PhaseOutOfRange(f64),
    #[error("gait offset {0} outside [0, 1)")]
    OffsetOutOfRange(f64),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown level `{level}` for {param}")]
    UnknownLevel { param: Param, level: String },
    #[error("unknown gait `{0}`; expected one of pronking, trotting, bounding, pacing")]
    UnknownGait(String),
    #[error("invalid interval [{lo}, {hi}] for {param}")]
    BadInterval { param: Param, lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] leaves the global range of {param}")]
    OutsideGlobalRange { param: Param, lo: f64, hi: f64 },
    #[error("level table for {param}: {reason}")]
    BadLevelTable { param: Param, reason: String },
    #[error("{field} = {value} is not finite or exceeds its limit {limit}")]
    CommandOutOfRange {
        field: &'static str,
        value: f64,
        limit: f64,
    },
}

/// Body-frame velocity command `(v_x, v_y, w_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandVector {
    pub v_x: f64,
    pub v_y: f64,
    pub w_z: f64,
}

impl CommandVector {
    pub const DEFAULT_MAX_LINEAR: f64 = 2.0;
    pub const DEFAULT_MAX_YAW: f64 = 3.0;

    pub fn new(v_x: f64, v_y: f64, w_z: f64) -> Result<Self, LocomotionError> {
        Self::with_limits(
            v_x,
            v_y,
            w_z,
            Self::DEFAULT_MAX_LINEAR,
            Self::DEFAULT_MAX_YAW,
        )
    }

    pub fn with_limits(
        v_x: f64,
        v_y: f64,
        w_z: f64,
        max_linear: f64,
        max_yaw: f64,
    ) -> Result<Self, LocomotionError> {
        for (field, value, limit) in [
            ("v_x", v_x, max_linear),
            ("v_y", v_y, max_linear),
            ("w_z", w_z, max_yaw),
        ] {
            if !value.is_finite() || value.abs() > limit {
                return Err(LocomotionError::CommandOutOfRange {
                    field,
                    value,
                    limit,
                });
            }
        }
        Ok(Self { v_x, v_y, w_z })
    }

    /// Forward walking at 1 m/s, the benchmark command.
    pub fn forward() -> Self {
        Self {
            v_x: 1.0,
            v_y: 0.0,
            w_z: 0.0,
        }
    }

    pub fn linear(&self) -> [f64; 2] {
        [self.v_x, self.v_y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FootId {
    FR,
    FL,
    RR,
    RL,
}

impl FootId {
    pub const ALL: [FootId; 4] = [FootId::FR, FootId::FL, FootId::RR, FootId::RL];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Timing offsets `(θ1, θ2, θ3)` between foot pairs, as cycle fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitOffsets(pub [f64; 3]);

impl GaitOffsets {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self, LocomotionError> {
        for v in [theta1, theta2, theta3] {
            if !(0.0..1.0).contains(&v) {
                return Err(LocomotionError::OffsetOutOfRange(v));
            }
        }
        Ok(Self([theta1, theta2, theta3]))
    }
}

/// The four gait presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gait {
    Pronking,
    Trotting,
    Bounding,
    Pacing,
}

impl Gait {
    pub const ALL: [Gait; 4] = [Gait::Pronking, Gait::Trotting, Gait::Bounding, Gait::Pacing];

    pub fn offsets(self) -> GaitOffsets {
        match self {
            Gait::Pronking => GaitOffsets([0.0, 0.0, 0.0]),
            Gait::Trotting => GaitOffsets([0.5, 0.0, 0.0]),
            Gait::Bounding => GaitOffsets([0.0, 0.5, 0.0]),
            Gait::Pacing => GaitOffsets([0.0, 0.0, 0.5]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gait::Pronking => "pronking",
            Gait::Trotting => "trotting",
            Gait::Bounding => "bounding",
            Gait::Pacing => "pacing",
        }
    }
}

impl fmt::Display for Gait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Gait {
    type Err = LocomotionError;

    /// Accepts the preset names and their common stems ("trot", "pace", ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let word = s
            .trim()
            .trim_end_matches(['.', ',', ';'])
            .trim()
            .to_ascii_lowercase();
        let gait = if word.starts_with("pronk") {
            Gait::Pronking
        } else if word.starts_with("trot") {
            Gait::Trotting
        } else if word.starts_with("bound") {
            Gait::Bounding
        } else if word.starts_with("pac") {
            Gait::Pacing
        } else {
            return Err(LocomotionError::UnknownGait(s.trim().to_string()));
        };
        Ok(gait)
    }
}

/// The five continuous behavior parameters, in the order the location prompt
/// asks about them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    BodyHeight,
    StepFrequency,
    SwingHeight,
    BodyPitch,
    StanceWidth,
}

impl Param {
    pub const ALL: [Param; 5] = [
        Param::BodyHeight,
        Param::StepFrequency,
        Param::SwingHeight,
        Param::BodyPitch,
        Param::StanceWidth,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Param::BodyHeight => "body_height",
            Param::StepFrequency => "step_frequency",
            Param::SwingHeight => "swing_height",
            Param::BodyPitch => "body_pitch",
            Param::StanceWidth => "stance_width",
        }
    }

    /// Human-readable label used in prompts.
    pub fn label(self) -> &'static str {
        match self {
            Param::BodyHeight => "body height",
            Param::StepFrequency => "stepping frequency",
            Param::SwingHeight => "foot swing height",
            Param::BodyPitch => "body pitch",
            Param::StanceWidth => "foot stance width",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Param::StepFrequency => "Hz",
            Param::BodyPitch => "rad",
            _ => "m",
        }
    }

    pub fn global_range(self) -> Interval {
        let (lo, hi) = match self {
            Param::BodyHeight => (0.1, 0.45),
            Param::StepFrequency => (1.5, 4.0),
            Param::SwingHeight => (0.03, 0.25),
            Param::BodyPitch => (-0.4, 0.4),
            Param::StanceWidth => (0.05, 0.45),
        };
        Interval { lo, hi }
    }

    /// Grid spacing used when sampling candidates inside a located range.
    pub fn sample_step(self) -> f64 {
        match self {
            Param::BodyHeight => 0.05,
            Param::StepFrequency => 0.2,
            Param::SwingHeight => 0.02,
            Param::BodyPitch => 0.08,
            Param::StanceWidth => 0.05,
        }
    }

    pub fn clamp(self, value: f64) -> f64 {
        let r = self.global_range();
        value.clamp(r.lo, r.hi)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Param {
    type Err = LocomotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Param::ALL
            .into_iter()
            .find(|p| p.key() == norm)
            .ok_or_else(|| LocomotionError::UnknownParameter(s.to_string()))
    }
}

/// Ordinal level 0..=4. Magnitude parameters read it as very low .. very high,
/// body pitch reads it as very negative .. very positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl Level {
    pub const ALL: [Level; 5] = [
        Level::VeryLow,
        Level::Low,
        Level::Medium,
        Level::High,
        Level::VeryHigh,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }

    /// Name of this level as seen for `param`.
    pub fn name_for(self, param: Param) -> &'static str {
        if param == Param::BodyPitch {
            ["very_negative", "negative", "neutral", "positive", "very_positive"][self.ordinal()]
        } else {
            ["very_low", "low", "medium", "high", "very_high"][self.ordinal()]
        }
    }

    /// Parses a level word for `param`. Pitch only accepts sign-aware names
    /// (including the "neural" spelling used by the location prompt), the
    /// other parameters only magnitude names.
    pub fn parse_for(param: Param, s: &str) -> Result<Level, LocomotionError> {
        let norm = s
            .trim()
            .trim_end_matches(['.', ',', ';', '!'])
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], " ");
        let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
        let level = if param == Param::BodyPitch {
            match norm.as_str() {
                "very negative" => Level::VeryLow,
                "negative" => Level::Low,
                "neutral" | "neural" => Level::Medium,
                "positive" => Level::High,
                "very positive" => Level::VeryHigh,
                _ => None.ok_or_else(|| LocomotionError::UnknownLevel {
                    param,
                    level: s.trim().to_string(),
                })?,
            }
        } else {
            match norm.as_str() {
                "very low" => Level::VeryLow,
                "low" => Level::Low,
                "medium" => Level::Medium,
                "high" => Level::High,
                "very high" => Level::VeryHigh,
                _ => None.ok_or_else(|| LocomotionError::UnknownLevel {
                    param,
                    level: s.trim().to_string(),
                })?,
            }
        };
        Ok(level)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Distance from `v` to the interval, zero inside.
    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }
}

/// Per-parameter level intervals. Defaults are compiled in; a config file may
/// override them as long as each row stays contiguous and covers the
/// parameter's global range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelTable {
    pub body_height: [Interval; 5],
    pub step_frequency: [Interval; 5],
    pub swing_height: [Interval; 5],
    pub body_pitch: [Interval; 5],
    pub stance_width: [Interval; 5],
}

const fn iv(lo: f64, hi: f64) -> Interval {
    Interval { lo, hi }
}

impl Default for LevelTable {
    fn default() -> Self {
        Self {
            body_height: [
                iv(0.1, 0.15),
                iv(0.15, 0.2),
                iv(0.2, 0.3),
                iv(0.3, 0.4),
                iv(0.4, 0.45),
            ],
            step_frequency: [
                iv(1.5, 2.0),
                iv(2.0, 2.5),
                iv(2.5, 3.0),
                iv(3.0, 3.5),
                iv(3.5, 4.0),
            ],
            swing_height: [
                iv(0.03, 0.07),
                iv(0.07, 0.11),
                iv(0.11, 0.16),
                iv(0.16, 0.21),
                iv(0.21, 0.25),
            ],
            body_pitch: [
                iv(-0.4, -0.24),
                iv(-0.24, -0.08),
                iv(-0.08, 0.08),
                iv(0.08, 0.24),
                iv(0.24, 0.4),
            ],
            stance_width: [
                iv(0.05, 0.13),
                iv(0.13, 0.21),
                iv(0.21, 0.29),
                iv(0.29, 0.37),
                iv(0.37, 0.45),
            ],
        }
    }
}

impl LevelTable {
    pub fn row(&self, param: Param) -> &[Interval; 5] {
        match param {
            Param::BodyHeight => &self.body_height,
            Param::StepFrequency => &self.step_frequency,
            Param::SwingHeight => &self.swing_height,
            Param::BodyPitch => &self.body_pitch,
            Param::StanceWidth => &self.stance_width,
        }
    }

    pub fn range(&self, param: Param, level: Level) -> Interval {
        self.row(param)[level.ordinal()]
    }

    /// Checks that each row is ascending, contiguous and spans the global range.
    pub fn validate(&self) -> Result<(), LocomotionError> {
        for param in Param::ALL {
            let row = self.row(param);
            let bad = |reason: String| LocomotionError::BadLevelTable { param, reason };
            let global = param.global_range();
            if (row[0].lo - global.lo).abs() > GRID_EPS || (row[4].hi - global.hi).abs() > GRID_EPS
            {
                return Err(bad(format!(
                    "levels span [{}, {}] but the global range is [{}, {}]",
                    row[0].lo, row[4].hi, global.lo, global.hi
                )));
            }
            for (i, r) in row.iter().enumerate() {
                if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                    return Err(bad(format!("level {i} is not an ascending interval")));
                }
                if i > 0 && (row[i - 1].hi - r.lo).abs() > GRID_EPS {
                    return Err(bad(format!("gap or overlap between levels {} and {i}", i - 1)));
                }
            }
        }
        Ok(())
    }
}

/// Looks up the interval of a `(parameter, level)` pair given by name.
pub fn level_range(
    table: &LevelTable,
    param: &str,
    level: &str,
) -> Result<Interval, LocomotionError> {
    let param: Param = param.parse()?;
    let level = Level::parse_for(param, level)?;
    Ok(table.range(param, level))
}

/// Enumerates `interval` at the parameter's sampling step, always ending on
/// the interval's upper bound.
pub fn sample_grid(param: Param, interval: Interval) -> Result<Vec<f64>, LocomotionError> {
    let Interval { lo, hi } = interval;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(LocomotionError::BadInterval { param, lo, hi });
    }
    let global = param.global_range();
    if lo < global.lo - GRID_EPS || hi > global.hi + GRID_EPS {
        return Err(LocomotionError::OutsideGlobalRange { param, lo, hi });
    }
    let step = param.sample_step();
    let n = ((hi - lo) / step + GRID_EPS).floor() as usize;
    let mut values: Vec<f64> = (0..=n).map(|k| round_grid(lo + k as f64 * step)).collect();
    let last = *values.last().expect("grid has at least the lower bound");
    if (hi - last).abs() > GRID_EPS {
        values.push(round_grid(hi));
    }
    Ok(values)
}

fn round_grid(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Full behavior-parameter vector handed to the locomotion controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorParams {
    pub body_height: f64,
    pub step_frequency: f64,
    pub body_pitch: f64,
    pub stance_width: f64,
    pub swing_height: f64,
    pub gait: Gait,
}

impl BehaviorParams {
    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::BodyHeight => self.body_height,
            Param::StepFrequency => self.step_frequency,
            Param::SwingHeight => self.swing_height,
            Param::BodyPitch => self.body_pitch,
            Param::StanceWidth => self.stance_width,
        }
    }

    pub fn set(&mut self, param: Param, value: f64) {
        match param {
            Param::BodyHeight => self.body_height = value,
            Param::StepFrequency => self.step_frequency = value,
            Param::SwingHeight => self.swing_height = value,
            Param::BodyPitch => self.body_pitch = value,
            Param::StanceWidth => self.stance_width = value,
        }
    }

    pub fn from_values(values: [f64; 5], gait: Gait) -> Self {
        let mut p = Self {
            body_height: 0.0,
            step_frequency: 0.0,
            body_pitch: 0.0,
            stance_width: 0.0,
            swing_height: 0.0,
            gait,
        };
        for param in Param::ALL {
            p.set(param, values[param.index()]);
        }
        p
    }

    pub fn values(&self) -> [f64; 5] {
        Param::ALL.map(|p| self.get(p))
    }

    pub fn in_global_ranges(&self) -> bool {
        Param::ALL
            .iter()
            .all(|&p| p.global_range().contains(self.get(p)))
    }

    pub fn clamped(mut self) -> Self {
        for p in Param::ALL {
            self.set(p, p.clamp(self.get(p)));
        }
        self
    }

    /// Midpoints of the given levels.
    pub fn from_levels(table: &LevelTable, levels: [Level; 5], gait: Gait) -> Self {
        Self::from_values(
            Param::ALL.map(|p| table.range(p, levels[p.index()]).midpoint()),
            gait,
        )
    }
}

/// Per-foot cycle fractions `[FR, FL, RR, RL]` at cycle counter `t`.
pub fn foot_phases(t: f64, gait: GaitOffsets) -> Result<[f64; 4], LocomotionError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(LocomotionError::PhaseOutOfRange(t));
    }
    let [t1, t2, t3] = gait.0;
    Ok([t + t2 + t3, t + t1 + t3, t + t1, t + t2].map(|v| v.rem_euclid(1.0)))
}

/// Sinusoidal clock inputs `sin(2π t_foot)`.
pub fn timing_reference(t: f64, gait: GaitOffsets) -> Result<[f64; 4], LocomotionError> {
    Ok(foot_phases(t, gait)?.map(|p| (std::f64::consts::TAU * p).sin()))
}

/// Commanded contact state per foot (`true` = stance) with the default duty factor.
pub fn desired_contact(gait: GaitOffsets, t: f64) -> Result<[bool; 4], LocomotionError> {
    desired_contact_with_duty(gait, t, DEFAULT_DUTY_FACTOR)
}

pub fn desired_contact_with_duty(
    gait: GaitOffsets,
    t: f64,
    duty_factor: f64,
) -> Result<[bool; 4], LocomotionError> {
    Ok(foot_phases(t, gait)?.map(|p| p < duty_factor))
}
