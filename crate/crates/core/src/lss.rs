//! Automatic locomotion adaptation.
//!
//! Location-Simulation-Selection: the model votes an ordinal level for each
//! parameter, every combination of grid samples inside the voted intervals is
//! rolled out on the surrogate, and the candidate with the best xy-velocity
//! score wins. The baselines (direct numeric prediction with or without prior
//! knowledge, picking among interval midpoints, and a manual parameter file)
//! go through the same evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::parse::{self, LevelAnswers, ParseError};
use crate::llm::prompts::{self, ids};
use crate::llm::{ChatRequest, Gateway, LlmError, PARSING_TEMPERATURE, SAMPLING_TEMPERATURE};
use crate::locomotion::{
    sample_grid, BehaviorParams, CommandVector, Gait, Level, LevelTable, Param,
};
use crate::reward::{episode_percent, EpisodeReport, RewardConfig};
use crate::seed::derive_seed;
use crate::surrogate::{simulate, SimConfig, SurrogateTerrain};
use crate::terrain::TerrainKind;

/// Number of candidates requested per sampling call.
pub const VOTE_SAMPLES: usize = 3;
pub const DEFAULT_CANDIDATE_CAP: usize = 4096;

pub type LevelSelection = LevelAnswers;

#[derive(Debug, Error)]
pub enum LssError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("could not parse {parameter} from the model reply after a retry: {source}")]
    Unparseable {
        parameter: String,
        #[source]
        source: ParseError,
    },
    #[error("{parameter}: {value} is not one of the offered midpoints")]
    InvalidPick { parameter: String, value: f64 },
    #[error("no candidates to evaluate")]
    NoCandidates,
    #[error("manual parameters missing for terrain {0}")]
    ManualMissing(TerrainKind),
    #[error("manual parameter file: {0}")]
    ManualFile(String),
    #[error("unknown method `{0}`; valid: manual, auto, auto_prior, auto_lss, lss_determining")]
    UnknownVariant(String),
    #[error("runs must be at least 1")]
    NoRuns,
}

/// Human-set parameters per terrain, loaded from a TOML file whose tables are
/// terrain names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ManualParams(pub BTreeMap<TerrainKind, BehaviorParams>);

impl ManualParams {
    pub fn parse(text: &str) -> Result<Self, LssError> {
        toml::from_str(text).map_err(|e| LssError::ManualFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LssError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LssError::ManualFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, kind: TerrainKind) -> Result<BehaviorParams, LssError> {
        self.0
            .get(&kind)
            .map(|p| p.clamped())
            .ok_or(LssError::ManualMissing(kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodVariant {
    Manual,
    Auto,
    AutoPrior,
    AutoLssSampling,
    AutoLssDetermining,
}

impl MethodVariant {
    pub const ALL: [MethodVariant; 5] = [
        MethodVariant::Manual,
        MethodVariant::Auto,
        MethodVariant::AutoPrior,
        MethodVariant::AutoLssSampling,
        MethodVariant::AutoLssDetermining,
    ];

    /// Label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            MethodVariant::Manual => "Manual",
            MethodVariant::Auto => "Auto",
            MethodVariant::AutoPrior => "Auto+prior",
            MethodVariant::AutoLssSampling => "Auto+LSS",
            MethodVariant::AutoLssDetermining => "LSS-Determining",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            MethodVariant::Manual => "manual",
            MethodVariant::Auto => "auto",
            MethodVariant::AutoPrior => "auto_prior",
            MethodVariant::AutoLssSampling => "auto_lss",
            MethodVariant::AutoLssDetermining => "lss_determining",
        }
    }
}

impl fmt::Display for MethodVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MethodVariant {
    type Err = LssError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['+', '-', ' '], "_");
        let v = match norm.as_str() {
            "manual" => MethodVariant::Manual,
            "auto" => MethodVariant::Auto,
            "auto_prior" => MethodVariant::AutoPrior,
            "auto_lss" | "lss_sampling" | "auto_lss_sampling" | "sampling" => {
                MethodVariant::AutoLssSampling
            }
            "lss_determining" | "auto_lss_determining" | "determining" => {
                MethodVariant::AutoLssDetermining
            }
            _ => return Err(LssError::UnknownVariant(s.to_string())),
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LssConfig {
    /// Also grid-search the four gait presets.
    pub include_gaits: bool,
    pub candidate_cap: usize,
}

impl Default for LssConfig {
    fn default() -> Self {
        Self {
            include_gaits: false,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
        }
    }
}

/// Location votes and the resolved selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub selection: LevelSelection,
    pub votes: Vec<LevelAnswers>,
    /// Votes from the tie-breaking re-query, if one was needed.
    pub requery_votes: Vec<LevelAnswers>,
}

fn parameter_for_index(err: &ParseError) -> String {
    let index = match err {
        ParseError::MissingAnswer(i) => i.as_str(),
        ParseError::InvalidAnswer { index, .. } => index.as_str(),
        ParseError::MissingParam(p) => return p.clone(),
        ParseError::InvalidGait(_) => return "gait".into(),
        _ => return "response".into(),
    };
    match index {
        "A1" => Param::BodyHeight.key().into(),
        "A2" => Param::StepFrequency.key().into(),
        "A3" => Param::SwingHeight.key().into(),
        "A4" => Param::BodyPitch.key().into(),
        "A5" => Param::StanceWidth.key().into(),
        "A6" => "gait".into(),
        other => other.into(),
    }
}

/// Parses every sample, re-asking once (n = 1) for each one that fails.
fn parse_samples<T>(
    gateway: &Gateway,
    request: &ChatRequest,
    responses: Vec<String>,
    parser: impl Fn(&str) -> Result<T, ParseError>,
) -> Result<Vec<T>, LssError> {
    let mut out = Vec::with_capacity(responses.len());
    for text in responses {
        match parser(&text) {
            Ok(v) => out.push(v),
            Err(first) => {
                let retry = ChatRequest {
                    user: prompts::reprompt(&request.user, &first.to_string()),
                    n_samples: 1,
                    temperature: PARSING_TEMPERATURE,
                    ..request.clone()
                };
                let again = gateway.complete(&retry)?.responses.remove(0);
                let v = parser(&again).map_err(|source| LssError::Unparseable {
                    parameter: parameter_for_index(&source),
                    source,
                })?;
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Strict majority among the votes, if any.
fn majority<T: Copy + Eq + Ord>(votes: &[T]) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(*v).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|(_, c)| 2 * c > votes.len())
        .map(|(v, _)| v)
}

fn median_level(votes: &[Level]) -> Level {
    let mut v = votes.to_vec();
    v.sort();
    v[v.len() / 2]
}

/// Asks for ordinal levels three times and takes the per-parameter majority.
/// A parameter whose three votes all differ triggers one re-query; if that is
/// split again the median of the new votes is used (trotting for the gait).
pub fn locate_ranges(
    terrain_description: &str,
    scope: &str,
    gateway: &Gateway,
) -> Result<Located, LssError> {
    let request = ChatRequest::new(
        prompts::scoped(ids::LSS_LOCATION, scope),
        prompts::render(
            prompts::LSS_LOCATION,
            &[("terrain_description", terrain_description)],
        ),
    )
    .samples(VOTE_SAMPLES, SAMPLING_TEMPERATURE);

    let ask = || -> Result<Vec<LevelAnswers>, LssError> {
        let responses = gateway.complete(&request)?.responses;
        parse_samples(gateway, &request, responses, parse::parse_levels)
    };

    let votes = ask()?;
    let mut levels: [Option<Level>; 5] = [None; 5];
    for p in Param::ALL {
        let v: Vec<Level> = votes.iter().map(|a| a.level(p)).collect();
        levels[p.index()] = majority(&v);
    }
    let mut gait = majority(&votes.iter().map(|a| a.gait).collect::<Vec<_>>());

    let mut requery_votes = Vec::new();
    if levels.iter().any(Option::is_none) || gait.is_none() {
        requery_votes = ask()?;
        for p in Param::ALL {
            if levels[p.index()].is_none() {
                let v: Vec<Level> = requery_votes.iter().map(|a| a.level(p)).collect();
                levels[p.index()] = Some(majority(&v).unwrap_or_else(|| median_level(&v)));
            }
        }
        if gait.is_none() {
            let g: Vec<Gait> = requery_votes.iter().map(|a| a.gait).collect();
            gait = Some(majority(&g).unwrap_or(Gait::Trotting));
        }
    }
    Ok(Located {
        selection: LevelSelection {
            levels: levels.map(|l| l.expect("every level resolved")),
            gait: gait.expect("gait resolved"),
        },
        votes,
        requery_votes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectOutcome {
    pub params: BehaviorParams,
    pub candidates: Vec<BehaviorParams>,
}

/// Asks for exact numbers three times, averaging the clamped values and
/// taking the gait by majority (trotting on a three-way split).
pub fn direct_params(
    terrain_description: &str,
    scope: &str,
    gateway: &Gateway,
    with_prior: bool,
) -> Result<DirectOutcome, LssError> {
    let (id, template) = if with_prior {
        (ids::AUTO_PRIOR, prompts::AUTO_PRIOR)
    } else {
        (ids::AUTO, prompts::AUTO)
    };
    let request = ChatRequest::new(
        prompts::scoped(id, scope),
        prompts::render(template, &[("terrain_description", terrain_description)]),
    )
    .samples(VOTE_SAMPLES, SAMPLING_TEMPERATURE);
    let responses = gateway.complete(&request)?.responses;
    let candidates: Vec<BehaviorParams> = parse_samples(gateway, &request, responses, |t| {
        parse::parse_numeric_params(t).map(|n| n.params)
    })?;
    Ok(DirectOutcome {
        params: average_params(&candidates),
        candidates,
    })
}

fn average_params(candidates: &[BehaviorParams]) -> BehaviorParams {
    let n = candidates.len() as f64;
    let mut sum = [0.0; 5];
    for c in candidates {
        for p in Param::ALL {
            sum[p.index()] += c.get(p);
        }
    }
    let gaits: Vec<Gait> = candidates.iter().map(|c| c.gait).collect();
    let gait = majority(&gaits).unwrap_or(Gait::Trotting);
    BehaviorParams::from_values(sum.map(|s| s / n), gait).clamped()
}

/// Picks `m` evenly spaced indices out of `0..n`, keeping both ends.
fn spread_indices(n: usize, m: usize) -> Vec<usize> {
    if m >= n {
        return (0..n).collect();
    }
    if m == 1 {
        return vec![0];
    }
    (0..m)
        .map(|k| ((k * (n - 1)) as f64 / (m - 1) as f64).round() as usize)
        .collect()
}

/// Cartesian product of the grid samples inside each selected interval.
/// When the product exceeds the cap, the longest axis is thinned one value at
/// a time (endpoints kept) until it fits.
pub fn candidate_grid(
    selection: &LevelSelection,
    table: &LevelTable,
    cfg: &LssConfig,
) -> Vec<BehaviorParams> {
    let axes: Vec<Vec<f64>> = Param::ALL
        .iter()
        .map(|&p| {
            sample_grid(p, table.range(p, selection.level(p)))
                .expect("level intervals lie inside the global range")
        })
        .collect();
    let gaits: Vec<Gait> = if cfg.include_gaits {
        Gait::ALL.to_vec()
    } else {
        vec![selection.gait]
    };
    let cap = cfg.candidate_cap.max(1);
    let mut counts: Vec<usize> = axes.iter().map(Vec::len).collect();
    let budget = (cap / gaits.len()).max(1);
    while counts.iter().product::<usize>() > budget {
        let (i, _) = counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, c)| **c)
            .expect("five axes");
        if counts[i] == 1 {
            break;
        }
        counts[i] -= 1;
    }
    let axes: Vec<Vec<f64>> = axes
        .iter()
        .zip(&counts)
        .map(|(a, &m)| spread_indices(a.len(), m).into_iter().map(|k| a[k]).collect())
        .collect();

    let mut out = Vec::with_capacity(gaits.len() * counts.iter().product::<usize>());
    for &gait in &gaits {
        for &h in &axes[0] {
            for &f in &axes[1] {
                for &s in &axes[2] {
                    for &pitch in &axes[3] {
                        for &w in &axes[4] {
                            out.push(BehaviorParams::from_values([h, f, s, pitch, w], gait));
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub params: BehaviorParams,
    pub velocity_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationResult {
    pub variant: MethodVariant,
    pub terrain: TerrainKind,
    pub chosen: BehaviorParams,
    /// Screening scores, one per simulated candidate (empty when no
    /// simulation was involved).
    pub candidates: Vec<CandidateScore>,
    /// Transcript keys consulted during adaptation.
    pub transcript_keys: Vec<String>,
}

/// Shared evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalSettings {
    pub table: LevelTable,
    pub reward: RewardConfig,
    pub sim: SimConfig,
    pub lss: LssConfig,
}

/// Rolls out one parameter set and returns its episode report.
pub fn evaluate(
    terrain: &SurrogateTerrain,
    params: &BehaviorParams,
    cmd: &CommandVector,
    sim: &SimConfig,
    settings: &EvalSettings,
) -> EpisodeReport {
    let traj = simulate(terrain, params, cmd, sim, &settings.table);
    episode_percent(&traj.samples, cmd, params.gait.offsets(), &settings.reward)
        .expect("simulation yields at least one step")
}

/// Scores every candidate and returns the one with the highest xy-velocity
/// percent. Exact ties go to the lower body height, then the lower stepping
/// frequency, then the earlier candidate.
pub fn select_best(
    candidates: &[BehaviorParams],
    terrain: &SurrogateTerrain,
    cmd: &CommandVector,
    sim: &SimConfig,
    settings: &EvalSettings,
) -> Result<(BehaviorParams, Vec<CandidateScore>), LssError> {
    if candidates.is_empty() {
        return Err(LssError::NoCandidates);
    }
    let scores: Vec<CandidateScore> = candidates
        .par_iter()
        .map(|p| CandidateScore {
            params: *p,
            velocity_pct: evaluate(terrain, p, cmd, sim, settings).velocity_xy,
        })
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            b.velocity_pct
                .total_cmp(&a.velocity_pct)
                .then(a.params.body_height.total_cmp(&b.params.body_height))
                .then(a.params.step_frequency.total_cmp(&b.params.step_frequency))
                .then(ia.cmp(ib))
        })
        .map(|(_, s)| s.params)
        .expect("non-empty");
    Ok((best, scores))
}

fn format_option(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Midpoint of each level per parameter.
pub fn level_midpoints(table: &LevelTable, p: Param) -> [f64; 5] {
    Level::ALL.map(|l| table.range(p, l).midpoint())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminingOutcome {
    pub params: BehaviorParams,
    /// Midpoints of the located intervals, for comparison.
    pub selection_midpoints: BehaviorParams,
}

/// Offers the five interval midpoints of every parameter and lets the model
/// pick one number each. No simulation is involved; the gait comes from the
/// located selection.
pub fn determining_pick(
    selection: &LevelSelection,
    terrain_description: &str,
    scope: &str,
    gateway: &Gateway,
    table: &LevelTable,
) -> Result<DeterminingOutcome, LssError> {
    let options: Vec<String> = Param::ALL
        .iter()
        .map(|&p| {
            let mids: Vec<String> = level_midpoints(table, p).iter().map(|m| format_option(*m)).collect();
            format!("{} ({}): {}", p.label(), p.unit(), mids.join(", "))
        })
        .collect();
    let user = prompts::render(
        prompts::LSS_DETERMINING,
        &[
            ("options", &options.join("\n")),
            ("terrain_description", terrain_description),
        ],
    );
    let request = ChatRequest::new(prompts::scoped(ids::LSS_DETERMINING, scope), user);

    let check = |text: &str| -> Result<[f64; 5], (String, Option<f64>, ParseError)> {
        let values = parse::parse_numeric_values(text)
            .map_err(|e| (parameter_for_index(&e), None, e))?;
        let mut snapped = [0.0; 5];
        for p in Param::ALL {
            let v = values[p.index()];
            let mids = level_midpoints(table, p);
            snapped[p.index()] = *mids
                .iter()
                .find(|m| (*m - v).abs() < 1e-4)
                .ok_or_else(|| {
                    (
                        p.key().to_string(),
                        Some(v),
                        ParseError::MissingParam(format!("{} option", p.label())),
                    )
                })?;
        }
        Ok(snapped)
    };

    let first = gateway.complete(&request)?.responses.remove(0);
    let values = match check(&first) {
        Ok(v) => v,
        Err((_, _, problem)) => {
            let retry = ChatRequest {
                user: prompts::reprompt(&request.user, &problem.to_string()),
                ..request.clone()
            };
            let again = gateway.complete(&retry)?.responses.remove(0);
            check(&again).map_err(|(parameter, value, source)| match value {
                Some(value) => LssError::InvalidPick { parameter, value },
                None => LssError::Unparseable { parameter, source },
            })?
        }
    };
    Ok(DeterminingOutcome {
        params: BehaviorParams::from_values(values, selection.gait),
        selection_midpoints: BehaviorParams::from_levels(table, selection.levels, selection.gait),
    })
}

/// Runs one adaptation method on one terrain.
pub fn adapt(
    variant: MethodVariant,
    terrain: &SurrogateTerrain,
    gateway: &Gateway,
    settings: &EvalSettings,
    manual: Option<&ManualParams>,
    cmd: &CommandVector,
    root_seed: u64,
) -> Result<AdaptationResult, LssError> {
    let kind = terrain.kind();
    let desc = kind.description();
    let scope = kind.name();
    let sim = settings
        .sim
        .with_seed(derive_seed(root_seed, &["adapt", scope]));
    let (chosen, candidates, keys) = match variant {
        MethodVariant::Manual => {
            let m = manual.ok_or(LssError::ManualMissing(kind))?;
            (m.get(kind)?, Vec::new(), Vec::new())
        }
        MethodVariant::Auto | MethodVariant::AutoPrior => {
            let prior = variant == MethodVariant::AutoPrior;
            let out = direct_params(desc, scope, gateway, prior)?;
            let id = if prior { ids::AUTO_PRIOR } else { ids::AUTO };
            (out.params, Vec::new(), vec![prompts::scoped(id, scope)])
        }
        MethodVariant::AutoLssSampling => {
            let located = locate_ranges(desc, scope, gateway)?;
            let grid = candidate_grid(&located.selection, &settings.table, &settings.lss);
            let (best, scores) = select_best(&grid, terrain, cmd, &sim, settings)?;
            (best, scores, vec![prompts::scoped(ids::LSS_LOCATION, scope)])
        }
        MethodVariant::AutoLssDetermining => {
            let located = locate_ranges(desc, scope, gateway)?;
            let out = determining_pick(&located.selection, desc, scope, gateway, &settings.table)?;
            (
                out.params,
                Vec::new(),
                vec![
                    prompts::scoped(ids::LSS_LOCATION, scope),
                    prompts::scoped(ids::LSS_DETERMINING, scope),
                ],
            )
        }
    };
    Ok(AdaptationResult {
        variant,
        terrain: kind,
        chosen,
        candidates,
        transcript_keys: keys,
    })
}

/// Seed of evaluation run `run` on `terrain`; shared by every method so they
/// see identical noise.
pub fn eval_seed(root_seed: u64, terrain: TerrainKind, run: usize) -> u64 {
    derive_seed(root_seed, &["eval", terrain.name(), &run.to_string()])
}

/// Mean report of `params` over `runs` evaluation seeds.
pub fn evaluate_runs(
    terrain: &SurrogateTerrain,
    params: &BehaviorParams,
    cmd: &CommandVector,
    runs: usize,
    root_seed: u64,
    settings: &EvalSettings,
) -> Result<EpisodeReport, LssError> {
    if runs == 0 {
        return Err(LssError::NoRuns);
    }
    let reports: Vec<EpisodeReport> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let sim = settings.sim.with_seed(eval_seed(root_seed, terrain.kind(), r));
            evaluate(terrain, params, cmd, &sim, settings)
        })
        .collect();
    Ok(EpisodeReport::mean(&reports).expect("runs >= 1"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub adaptation: AdaptationResult,
    pub report: EpisodeReport,
}

/// Adapts once per (terrain, method) and averages the chosen parameters over
/// `runs` evaluation seeds, walking forward at 1 m/s.
pub fn run_benchmark(
    variants: &[MethodVariant],
    terrains: &[SurrogateTerrain],
    runs: usize,
    gateway: &Gateway,
    settings: &EvalSettings,
    manual: Option<&ManualParams>,
    root_seed: u64,
) -> Result<Vec<BenchmarkRow>, LssError> {
    if runs == 0 {
        return Err(LssError::NoRuns);
    }
    let cmd = CommandVector::forward();
    let mut rows = Vec::new();
    for terrain in terrains {
        for &variant in variants {
            let adaptation = adapt(variant, terrain, gateway, settings, manual, &cmd, root_seed)?;
            let report = evaluate_runs(terrain, &adaptation.chosen, &cmd, runs, root_seed, settings)?;
            rows.push(BenchmarkRow { adaptation, report });
        }
    }
    Ok(rows)
}

/// Uniformly random parameters inside the global ranges, random gait.
pub fn random_params(rng: &mut impl Rng) -> BehaviorParams {
    let values = Param::ALL.map(|p| {
        let r = p.global_range();
        rng.gen_range(r.lo..=r.hi)
    });
    BehaviorParams::from_values(values, Gait::ALL[rng.gen_range(0..4)])
}

/// Mean xy-velocity percent of `n` random parameter sets, each evaluated on
/// the first evaluation seed.
pub fn random_baseline(
    terrain: &SurrogateTerrain,
    n: usize,
    root_seed: u64,
    settings: &EvalSettings,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root_seed, &["random", terrain.kind().name()]));
    let cmd = CommandVector::forward();
    let sim = settings.sim.with_seed(eval_seed(root_seed, terrain.kind(), 0));
    let params: Vec<BehaviorParams> = (0..n).map(|_| random_params(&mut rng)).collect();
    let total: f64 = params
        .par_iter()
        .map(|p| evaluate(terrain, p, &cmd, &sim, settings).velocity_xy)
        .sum();
    total / n.max(1) as f64
}
