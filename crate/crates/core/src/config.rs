//! One TOML file configuring every stage. Missing tables and keys take
//! their defaults; unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! [sim]
//! noise_scale = 0.0
//! [navigation]
//! cost_mode = "continuous"
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locomotion::LevelTable;
use crate::lss::{EvalSettings, LssConfig};
use crate::mapping::MappingConfig;
use crate::navigation::NavConfig;
use crate::reward::RewardConfig;
use crate::surrogate::SimConfig;
use crate::task::TaskConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Root seed; every component seed is derived from it.
    pub seed: u64,
    pub table: LevelTable,
    pub reward: RewardConfig,
    pub sim: SimConfig,
    pub lss: LssConfig,
    pub mapping: MappingConfig,
    pub navigation: NavConfig,
    pub task: TaskConfig,
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")))
    }
}

fn unit(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.table.validate().map_err(|e| invalid(&e))?;
        self.reward.validate().map_err(|e| invalid(&e))?;

        if self.sim.steps == 0 {
            return Err(ConfigError::Invalid("sim.steps must be at least 1".into()));
        }
        positive("sim.dt", self.sim.dt)?;
        positive("sim.body_mass", self.sim.body_mass)?;
        if !(self.sim.noise_scale.is_finite() && self.sim.noise_scale >= 0.0) {
            return Err(ConfigError::Invalid("sim.noise_scale must be non-negative".into()));
        }
        if self.lss.candidate_cap == 0 {
            return Err(ConfigError::Invalid("lss.candidate_cap must be at least 1".into()));
        }

        let m = &self.mapping;
        if m.map_size == 0 {
            return Err(ConfigError::Invalid("mapping.map_size must be at least 1".into()));
        }
        positive("mapping.cell_size", m.cell_size)?;
        positive("mapping.sensor_range", m.sensor_range)?;
        positive("mapping.max_height", m.max_height)?;
        positive("mapping.height_bin", m.height_bin)?;
        if !(m.fov_deg > 0.0 && m.fov_deg <= 360.0) {
            return Err(ConfigError::Invalid(format!("mapping.fov_deg must lie in (0, 360], got {}", m.fov_deg)));
        }
        if !(m.near_radius.is_finite() && m.near_radius >= 0.0) {
            return Err(ConfigError::Invalid("mapping.near_radius must be non-negative".into()));
        }

        let n = &self.navigation;
        unit("navigation.unexplored_cost", n.unexplored_cost)?;
        unit("navigation.default_category_cost", n.default_category_cost)?;
        positive("navigation.speed_floor", n.speed_floor)?;
        unit("navigation.speed_floor", n.speed_floor)?;

        let t = &self.task;
        positive("task.success_radius", t.success_radius)?;
        positive("task.step_length", t.step_length)?;
        if t.max_nav_iterations == 0 {
            return Err(ConfigError::Invalid("task.max_nav_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            table: self.table.clone(),
            reward: self.reward.clone(),
            sim: self.sim.clone(),
            lss: self.lss.clone(),
        }
    }
}
