//! Deterministic response model standing in for "trained policy + physics".
//!
//! Each terrain has an ideal level per behavior parameter and an ideal gait.
//! How well a parameter set walks is summarized by an efficiency in (0, 1]:
//! a Gaussian penalty on each parameter's distance (in interval widths) to the
//! ideal level's interval, times a gait factor. Achieved velocity, foot forces
//! and foot slip are then derived from the efficiency, so the simulate-and-select
//! loop has a known optimum.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::locomotion::{
    desired_contact, BehaviorParams, CommandVector, Gait, Level, LevelTable, Param,
};
use crate::reward::StepSample;
use crate::terrain::{self, Region, TerrainKind, TerrainSpec, TerrainStats};

/// Width of the Gaussian penalty, in interval widths.
pub const PENALTY_WIDTH: f64 = 0.5;
/// Efficiency multiplier when the gait differs from the ideal one.
pub const GAIT_MISMATCH_FACTOR: f64 = 0.8;

const GRAVITY: f64 = 9.81;
/// Fraction of body weight pushed through a foot that should be in swing, at zero efficiency.
const SPURIOUS_FORCE_GAIN: f64 = 0.5;
/// Stance-foot slip speed per unit of commanded speed, at zero efficiency.
const SLIP_GAIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealProfile {
    /// Indexed by [`Param::index`].
    pub levels: [Level; 5],
    pub gait: Gait,
}

impl IdealProfile {
    pub fn level(&self, param: Param) -> Level {
        self.levels[param.index()]
    }

    /// Midpoint parameters of the ideal levels.
    pub fn midpoint_params(&self, table: &LevelTable) -> BehaviorParams {
        BehaviorParams::from_levels(table, self.levels, self.gait)
    }
}

/// Ideal levels per terrain. Only the uphill row comes from an expert
/// example; the others are this model's assumptions (lower, slower and wider
/// when descending; higher swing on stairs and rough ground).
pub fn ideal_profile(kind: TerrainKind) -> IdealProfile {
    use Level::*;
    // order: body height, step frequency, swing height, body pitch, stance width
    let (levels, gait) = match kind {
        TerrainKind::UphillSlope => ([Low, High, High, High, Medium], Gait::Trotting),
        TerrainKind::DownhillSlope => ([Low, Low, Medium, Low, High], Gait::Trotting),
        TerrainKind::UpsideStair => ([Medium, Medium, VeryHigh, High, Medium], Gait::Trotting),
        TerrainKind::DownsideStair => ([Low, Low, High, Low, High], Gait::Trotting),
        TerrainKind::UnevenGround => ([Low, Medium, High, Medium, High], Gait::Trotting),
    };
    IdealProfile { levels, gait }
}

/// Walking efficiency of `params` against an ideal profile.
pub fn efficiency(params: &BehaviorParams, ideal: &IdealProfile, table: &LevelTable) -> f64 {
    let mut e = 1.0;
    for p in Param::ALL {
        let interval = table.range(p, ideal.level(p));
        let d = interval.distance(params.get(p)) / interval.width();
        e *= (-(d / PENALTY_WIDTH).powi(2)).exp();
    }
    if params.gait != ideal.gait {
        e *= GAIT_MISMATCH_FACTOR;
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub steps: usize,
    pub dt: f64,
    pub noise_scale: f64,
    pub seed: u64,
    /// Robot mass in kg, sets stance foot forces.
    pub body_mass: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps: 250,
            dt: 0.02,
            noise_scale: 0.05,
            seed: 0,
            body_mass: 15.0,
        }
    }
}

impl SimConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// A terrain prepared for repeated simulation: spec, ideal profile and the
/// geometry summary ahead of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateTerrain {
    pub spec: TerrainSpec,
    pub ideal: IdealProfile,
    pub descriptor: TerrainStats,
}

impl SurrogateTerrain {
    pub fn new(spec: TerrainSpec) -> Self {
        let hf = terrain::build(&spec);
        let descriptor = hf
            .slope_roughness(Region {
                x0: 0.0,
                x1: 3.5,
                y0: -1.0,
                y1: 1.0,
            })
            .expect("region lies inside the default extent");
        Self {
            ideal: ideal_profile(spec.kind()),
            spec,
            descriptor,
        }
    }

    pub fn kind(&self) -> TerrainKind {
        self.spec.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub terrain: TerrainKind,
    pub params: BehaviorParams,
    pub command: CommandVector,
    pub seed: u64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub samples: Vec<StepSample>,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "step,v_x,v_y,w_z,f_fr,f_fl,f_rr,f_rl,s_fr,s_fl,s_rr,s_rl,phase";

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_CSV_HEADER);
        out.push('\n');
        for (k, s) in self.samples.iter().enumerate() {
            let _ = write!(out, "{k},{:.9},{:.9},{:.9}", s.v_xy[0], s.v_xy[1], s.w_z);
            for v in s.foot_force.iter().chain(s.foot_speed_xy.iter()) {
                let _ = write!(out, ",{v:.9}");
            }
            let _ = writeln!(out, ",{:.9}", s.phase_t);
        }
        out
    }
}

/// Rolls out `cfg.steps` steps of the response model.
pub fn simulate(
    terrain: &SurrogateTerrain,
    params: &BehaviorParams,
    cmd: &CommandVector,
    cfg: &SimConfig,
    table: &LevelTable,
) -> Trajectory {
    let eff = efficiency(params, &terrain.ideal, table);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_scale.max(0.0)).expect("finite noise scale");
    let weight = cfg.body_mass * GRAVITY;
    let cmd_speed = cmd.v_x.hypot(cmd.v_y);
    let gait = params.gait.offsets();

    let mut phase = 0.0f64;
    let mut samples = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let n_lin: f64 = noise.sample(&mut rng);
        let n_yaw: f64 = noise.sample(&mut rng);
        let tracking = (eff + n_lin).clamp(0.0, 1.0);
        let v_xy = [cmd.v_x * tracking, cmd.v_y * tracking];
        let w_z = cmd.w_z * eff + n_yaw;

        let contact = desired_contact(gait, phase).expect("phase kept in [0, 1)");
        let n_stance = contact.iter().filter(|c| **c).count().max(1) as f64;
        let mut foot_force = [0.0; 4];
        let mut foot_speed_xy = [0.0; 4];
        for foot in 0..4 {
            if contact[foot] {
                foot_force[foot] = weight / n_stance;
                foot_speed_xy[foot] = SLIP_GAIN * (1.0 - eff) * cmd_speed;
            } else {
                foot_force[foot] = SPURIOUS_FORCE_GAIN * (1.0 - eff) * weight;
                foot_speed_xy[foot] = 2.0 * cmd_speed * tracking;
            }
        }
        samples.push(StepSample {
            v_xy,
            w_z,
            foot_force,
            foot_speed_xy,
            phase_t: phase,
        });
        phase = (phase + params.step_frequency * cfg.dt).rem_euclid(1.0);
    }
    Trajectory {
        meta: TrajectoryMeta {
            terrain: terrain.kind(),
            params: *params,
            command: *cmd,
            seed: cfg.seed,
            efficiency: eff,
        },
        samples,
    }
}
