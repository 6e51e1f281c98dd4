//! Toolkit for language-model-guided quadruped locomotion adaptation,
//! semantic instance mapping, cost-map path planning and long-horizon task
//! execution over a skill library.

pub mod llm;
pub mod locomotion;
pub mod pgm;
pub mod reward;
pub mod surrogate;
pub mod terrain;
pub mod lss;
pub mod seed;
pub mod mapping;
pub mod navigation;
pub mod config;
pub mod task;
pub mod scene_synth;
