//! Velocity-tracking and gait-phase tracking rewards, and their aggregation
//! into percent-of-maximum episode scores.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locomotion::{desired_contact_with_duty, CommandVector, GaitOffsets, LocomotionError};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("episode contains no samples")]
    EmptyEpisode,
    #[error("{0} must be strictly positive")]
    NonPositiveSigma(&'static str),
    #[error("invalid reward setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Phase(#[from] LocomotionError),
    #[error("csv: {0}")]
    Csv(String),
}

/// One simulation step as seen by the reward terms. Foot arrays are ordered
/// FR, FL, RR, RL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    pub v_xy: [f64; 2],
    pub w_z: f64,
    pub foot_force: [f64; 4],
    pub foot_speed_xy: [f64; 4],
    pub phase_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Per-step maximum of a phase term is the number of feet it selects.
    #[default]
    Realized,
    /// Per-step maximum of a phase term is always four feet.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub sigma_vxy: f64,
    pub sigma_wz: f64,
    pub sigma_cf: f64,
    pub sigma_cv: f64,
    /// Per-term maxima, used only by [`composite_reward`].
    pub weights: [f64; 4],
    /// Use the `[1 - C]` multiplier for the stance-velocity term too.
    pub stance_uses_swing_mask: bool,
    pub normalization: Normalization,
    pub duty_factor: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            sigma_vxy: 0.25,
            sigma_wz: 0.25,
            sigma_cf: 100.0,
            sigma_cv: 0.25,
            weights: [1.0, 1.0, 0.08, 0.08],
            stance_uses_swing_mask: false,
            normalization: Normalization::Realized,
            duty_factor: crate::locomotion::DEFAULT_DUTY_FACTOR,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        for (name, s) in [
            ("sigma_vxy", self.sigma_vxy),
            ("sigma_wz", self.sigma_wz),
            ("sigma_cf", self.sigma_cf),
            ("sigma_cv", self.sigma_cv),
        ] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(RewardError::NonPositiveSigma(name));
            }
        }
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(RewardError::Invalid("weights must be finite".into()));
        }
        if !(self.duty_factor > 0.0 && self.duty_factor <= 1.0) {
            return Err(RewardError::Invalid(format!("duty_factor must lie in (0, 1], got {}", self.duty_factor)));
        }
        Ok(())
    }

    fn contacts(&self, gait: GaitOffsets, t: f64) -> Result<[bool; 4], RewardError> {
        Ok(desired_contact_with_duty(gait, t, self.duty_factor)?)
    }

    /// Feet counted by the swing-force term.
    fn swing_mask(&self, gait: GaitOffsets, t: f64) -> Result<[bool; 4], RewardError> {
        Ok(self.contacts(gait, t)?.map(|c| !c))
    }

    /// Feet counted by the stance-velocity term.
    fn stance_mask(&self, gait: GaitOffsets, t: f64) -> Result<[bool; 4], RewardError> {
        let c = self.contacts(gait, t)?;
        Ok(if self.stance_uses_swing_mask { c.map(|c| !c) } else { c })
    }
}

pub fn r_velocity_xy(sample: &StepSample, cmd: &CommandVector, cfg: &RewardConfig) -> f64 {
    let dx = sample.v_xy[0] - cmd.v_x;
    let dy = sample.v_xy[1] - cmd.v_y;
    (-(dx * dx + dy * dy) / cfg.sigma_vxy).exp()
}

pub fn r_velocity_yaw(sample: &StepSample, cmd: &CommandVector, cfg: &RewardConfig) -> f64 {
    let dw = sample.w_z - cmd.w_z;
    (-(dw * dw) / cfg.sigma_wz).exp()
}

pub fn r_swing_force(
    sample: &StepSample,
    gait: GaitOffsets,
    cfg: &RewardConfig,
) -> Result<f64, RewardError> {
    let mask = cfg.swing_mask(gait, sample.phase_t)?;
    Ok(masked_sum(mask, sample.foot_force, cfg.sigma_cf))
}

pub fn r_stance_velocity(
    sample: &StepSample,
    gait: GaitOffsets,
    cfg: &RewardConfig,
) -> Result<f64, RewardError> {
    let mask = cfg.stance_mask(gait, sample.phase_t)?;
    Ok(masked_sum(mask, sample.foot_speed_xy, cfg.sigma_cv))
}

fn masked_sum(mask: [bool; 4], values: [f64; 4], sigma: f64) -> f64 {
    mask.iter()
        .zip(values)
        .filter(|(m, _)| **m)
        .map(|(_, v)| (-(v * v) / sigma).exp())
        .sum()
}

/// Weighted single-scalar reward for one step.
pub fn composite_reward(
    sample: &StepSample,
    cmd: &CommandVector,
    gait: GaitOffsets,
    cfg: &RewardConfig,
) -> Result<f64, RewardError> {
    let terms = [
        r_velocity_xy(sample, cmd, cfg),
        r_velocity_yaw(sample, cmd, cfg),
        r_swing_force(sample, gait, cfg)?,
        r_stance_velocity(sample, gait, cfg)?,
    ];
    Ok(terms.iter().zip(cfg.weights).map(|(t, w)| t * w).sum())
}

/// Episode scores as percent of the maximum attainable reward, in the order
/// xy velocity, yaw velocity, swing force, stance velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub velocity_xy: f64,
    pub velocity_yaw: f64,
    pub swing_force: f64,
    pub stance_velocity: f64,
}

impl EpisodeReport {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.velocity_xy,
            self.velocity_yaw,
            self.swing_force,
            self.stance_velocity,
        ]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            velocity_xy: a[0],
            velocity_yaw: a[1],
            swing_force: a[2],
            stance_velocity: a[3],
        }
    }

    pub fn mean(reports: &[EpisodeReport]) -> Option<EpisodeReport> {
        if reports.is_empty() {
            return None;
        }
        let mut acc = [0.0; 4];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.as_array()) {
                *a += v;
            }
        }
        Some(Self::from_array(acc.map(|a| a / reports.len() as f64)))
    }
}

pub fn episode_percent(
    samples: &[StepSample],
    cmd: &CommandVector,
    gait: GaitOffsets,
    cfg: &RewardConfig,
) -> Result<EpisodeReport, RewardError> {
    if samples.is_empty() {
        return Err(RewardError::EmptyEpisode);
    }
    let mut got = [0.0; 4];
    let mut max = [0.0; 4];
    for s in samples {
        got[0] += r_velocity_xy(s, cmd, cfg);
        got[1] += r_velocity_yaw(s, cmd, cfg);
        got[2] += r_swing_force(s, gait, cfg)?;
        got[3] += r_stance_velocity(s, gait, cfg)?;
        max[0] += 1.0;
        max[1] += 1.0;
        match cfg.normalization {
            Normalization::Realized => {
                max[2] += count(cfg.swing_mask(gait, s.phase_t)?) as f64;
                max[3] += count(cfg.stance_mask(gait, s.phase_t)?) as f64;
            }
            Normalization::Flat => {
                max[2] += 4.0;
                max[3] += 4.0;
            }
        }
    }
    // a term that never selects a foot has nothing to track
    let pct = |g: f64, m: f64| if m > 0.0 { 100.0 * g / m } else { 100.0 };
    Ok(EpisodeReport {
        velocity_xy: pct(got[0], max[0]),
        velocity_yaw: pct(got[1], max[1]),
        swing_force: pct(got[2], max[2]),
        stance_velocity: pct(got[3], max[3]),
    })
}

fn count(mask: [bool; 4]) -> usize {
    mask.iter().filter(|m| **m).count()
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub terrain: String,
    pub method: String,
    pub report: EpisodeReport,
}

pub const REPORT_CSV_HEADER: &str = "terrain,method,r_vxy_pct,r_wz_pct,r_cf_pct,r_cv_pct";

/// Serializes rows as CSV with a header line and four decimals per percent.
pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let [a, b, c, d] = row.report.as_array();
        out.push_str(&format!(
            "{},{},{a:.4},{b:.4},{c:.4},{d:.4}\n",
            row.terrain, row.method
        ));
    }
    out
}

/// Parses the CSV written by [`rows_to_csv`].
pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>, RewardError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == REPORT_CSV_HEADER => {}
        other => {
            return Err(RewardError::Csv(format!(
                "unexpected header {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(RewardError::Csv(format!("line {}: expected 6 columns", i + 2)));
        }
        let mut v = [0.0; 4];
        for (k, c) in cols[2..].iter().enumerate() {
            v[k] = c
                .trim()
                .parse()
                .map_err(|_| RewardError::Csv(format!("line {}: bad number {c:?}", i + 2)))?;
        }
        rows.push(ReportRow {
            terrain: cols[0].to_string(),
            method: cols[1].to_string(),
            report: EpisodeReport::from_array(v),
        });
    }
    Ok(rows)
}
