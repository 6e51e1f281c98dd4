use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use locomind::config::Config;
use locomind::llm::Gateway;
use locomind::lss::{run_benchmark, ManualParams, MethodVariant};
use locomind::mapping::{parse_scene, scene_to_jsonl};
use locomind::navigation::{plan_in_scene, GoalSource};
use locomind::scene_synth;
use locomind::surrogate::SurrogateTerrain;
use locomind::task::{run_scenario, Scenario, SubgoalStatus};
use locomind::terrain::TerrainKind;

#[derive(Parser, Debug)]
#[command(name = "locomind", version, about = "Language-guided locomotion adaptation and navigation")]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Provider::Scripted)]
    provider: Provider,
    /// Recorded model replies used by the scripted provider.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Provider {
    Scripted,
    Live,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Adapt behaviour parameters per terrain and score them.
    Adapt {
        #[arg(long, value_delimiter = ',', default_value = "uphill_slope,downhill_slope,upside_stair,downside_stair,uneven_ground")]
        terrains: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "auto,auto_lss,lss_determining")]
        variants: Vec<String>,
        /// Evaluation seeds per (terrain, method).
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Overrides the configured observation noise scale.
        #[arg(long)]
        noise_scale: Option<f64>,
        /// Per-terrain parameters for the manual method.
        #[arg(long)]
        manual: Option<PathBuf>,
    },
    /// Plan a path to the target named in an instruction.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        instruction: String,
        /// Ignore assigned costs; obstacles come from occupancy only.
        #[arg(long)]
        no_cost: bool,
    },
    /// Decompose and execute an instruction scenario.
    Task {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write the bundled synthetic scenes.
    GenScenes {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Invalid invocation; reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    provider: Provider,
    config: Option<String>,
    transcript: Option<String>,
    arguments: serde_json::Value,
    outputs: Vec<String>,
}

struct Ctx {
    cfg: Config,
    provider: Provider,
    transcript: Option<PathBuf>,
    config_path: Option<PathBuf>,
    out: PathBuf,
}

impl Ctx {
    fn gateway(&self, fallback: Option<&Path>) -> Result<(Gateway, Option<PathBuf>)> {
        match self.provider {
            Provider::Scripted => {
                let path = self
                    .transcript
                    .clone()
                    .or_else(|| fallback.map(Path::to_path_buf))
                    .ok_or_else(|| usage("the scripted provider needs --transcript"))?;
                let gw = Gateway::scripted_from_file(&path)
                    .with_context(|| format!("loading transcript {}", path.display()))?;
                Ok((gw, Some(path)))
            }
            Provider::Live => Ok((Gateway::live_from_env().context("configuring the live provider")?, None)),
        }
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>, outputs: &mut Vec<String>) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(name.to_string());
        Ok(())
    }

    fn finish(
        &self,
        command: &str,
        gateway: &Gateway,
        transcript: Option<PathBuf>,
        arguments: serde_json::Value,
        mut outputs: Vec<String>,
    ) -> Result<()> {
        gateway
            .write_transcript(&self.out.join("transcript.jsonl"))
            .context("writing transcript")?;
        outputs.push("transcript.jsonl".into());
        outputs.push("manifest.json".into());
        let manifest = Manifest {
            command,
            seed: self.cfg.seed,
            provider: self.provider,
            config: self.config_path.as_ref().map(|p| p.display().to_string()),
            transcript: transcript.map(|p| p.display().to_string()),
            arguments,
            outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.out.join("manifest.json"), text).context("writing manifest")?;
        Ok(())
    }
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

fn adapt(
    ctx: &Ctx,
    terrains: &[String],
    variants: &[String],
    runs: usize,
    noise_scale: Option<f64>,
    manual: Option<&Path>,
) -> Result<bool> {
    let kinds = terrains
        .iter()
        .map(|t| t.parse::<TerrainKind>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let methods = variants
        .iter()
        .map(|v| v.parse::<MethodVariant>().map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let manual = match manual {
        Some(p) => Some(ManualParams::load(p)?),
        None if methods.contains(&MethodVariant::Manual) => {
            return Err(usage("the manual method needs --manual"));
        }
        None => None,
    };
    let mut settings = ctx.cfg.eval_settings();
    if let Some(n) = noise_scale {
        if !(n.is_finite() && n >= 0.0) {
            return Err(usage("--noise-scale must be non-negative"));
        }
        settings.sim.noise_scale = n;
    }

    let (gateway, transcript) = ctx.gateway(None)?;
    let surrogates: Vec<SurrogateTerrain> = kinds.iter().map(|k| SurrogateTerrain::new(k.default_spec())).collect();
    let rows = run_benchmark(&methods, &surrogates, runs, &gateway, &settings, manual.as_ref(), ctx.cfg.seed)?;

    let mut results = String::from("terrain,method,velocity_xy,velocity_yaw,swing_force,stance_velocity\n");
    let mut chosen = String::from("terrain,method,body_height,step_frequency,swing_height,body_pitch,stance_width,gait\n");
    let mut candidates =
        String::from("terrain,method,body_height,step_frequency,swing_height,body_pitch,stance_width,gait,velocity_xy\n");
    for row in &rows {
        let a = &row.adaptation;
        let r = &row.report;
        let (t, m) = (a.terrain.name(), a.variant.key());
        results += &format!(
            "{t},{m},{},{},{},{}\n",
            pct(r.velocity_xy),
            pct(r.velocity_yaw),
            pct(r.swing_force),
            pct(r.stance_velocity)
        );
        let p = &a.chosen;
        chosen += &format!(
            "{t},{m},{},{},{},{},{},{}\n",
            p.body_height, p.step_frequency, p.swing_height, p.body_pitch, p.stance_width, p.gait
        );
        for c in &a.candidates {
            let p = &c.params;
            candidates += &format!(
                "{t},{m},{},{},{},{},{},{},{}\n",
                p.body_height,
                p.step_frequency,
                p.swing_height,
                p.body_pitch,
                p.stance_width,
                p.gait,
                pct(c.velocity_pct)
            );
        }
        println!(
            "{t:<15} {:<16} vxy {:>6}%  vyaw {:>6}%  swing {:>6}%  stance {:>6}%",
            a.variant.label(),
            pct(r.velocity_xy),
            pct(r.velocity_yaw),
            pct(r.swing_force),
            pct(r.stance_velocity)
        );
    }

    let mut outputs = Vec::new();
    ctx.write("results.csv", results, &mut outputs)?;
    ctx.write("chosen.csv", chosen, &mut outputs)?;
    ctx.write("candidates.csv", candidates, &mut outputs)?;
    let args = serde_json::json!({
        "terrains": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "variants": methods.iter().map(|m| m.key()).collect::<Vec<_>>(),
        "runs": runs,
        "noise_scale": settings.sim.noise_scale,
        "manual": manual.is_some(),
    });
    ctx.finish("adapt", &gateway, transcript, args, outputs)?;
    Ok(true)
}

fn plan(ctx: &Ctx, scene_path: &Path, instruction: &str, no_cost: bool) -> Result<bool> {
    let text = fs::read_to_string(scene_path).with_context(|| format!("reading {}", scene_path.display()))?;
    let scene = parse_scene(&text).with_context(|| format!("parsing {}", scene_path.display()))?;
    let (gateway, transcript) = ctx.gateway(None)?;
    let cfg = &ctx.cfg;
    let result = plan_in_scene(
        &scene,
        instruction,
        &gateway,
        &cfg.mapping,
        &cfg.navigation,
        cfg.task.success_radius,
        no_cost,
    )?;

    let summary = serde_json::json!({
        "instruction": instruction,
        "no_cost": no_cost,
        "assignment": result.assignment,
        "start": result.start,
        "goal": result.goal.cell,
        "goal_instance": match result.goal.source {
            GoalSource::Instance(id) => Some(id),
            GoalSource::Frontier => None,
        },
        "target_centroid": result.target_centroid,
        "end_distance": result.end_distance,
        "reachable": result.plan.is_some(),
        "success": result.success,
        "path": result.plan,
    });

    let mut outputs = Vec::new();
    ctx.write("cost_map.pgm", result.cost.to_pgm(), &mut outputs)?;
    ctx.write("arrival.csv", result.field.to_csv(), &mut outputs)?;
    ctx.write("plan.json", serde_json::to_string_pretty(&summary)? + "\n", &mut outputs)?;
    let args = serde_json::json!({
        "scene": scene_path.display().to_string(),
        "instruction": instruction,
        "no_cost": no_cost,
    });
    ctx.finish("plan", &gateway, transcript, args, outputs)?;

    match &result.plan {
        Some(p) => println!(
            "path: {} waypoints, {:.2} m, end distance {:.3} m, success {}",
            p.waypoints.len(),
            p.length(),
            result.end_distance.unwrap_or(f64::NAN),
            result.success
        ),
        None => println!("goal unreachable from {:?}", result.start),
    }
    Ok(result.success)
}

fn task(ctx: &Ctx, scenario_path: &Path) -> Result<bool> {
    let text = fs::read_to_string(scenario_path).with_context(|| format!("reading {}", scenario_path.display()))?;
    if text.trim().is_empty() {
        return Err(usage(format!("scenario file {} is empty", scenario_path.display())));
    }
    let scenario = Scenario::load(scenario_path)?;
    let scene = scenario.load_scene()?;
    let (gateway, transcript) = ctx.gateway(Some(&scenario.transcript))?;
    let trace = run_scenario(&scenario, &scene, &gateway, &ctx.cfg)?;

    let mut verdicts = String::from("index,skill,status,reason\n");
    for r in &trace.records {
        let status = match r.status {
            SubgoalStatus::Pending => "pending",
            SubgoalStatus::Running => "running",
            SubgoalStatus::Succeeded => "succeeded",
            SubgoalStatus::Failed => "failed",
        };
        let reason = r.reason.as_deref().unwrap_or("");
        verdicts += &format!("{},{},{},\"{}\"\n", r.index, r.skill, status, reason.replace('"', "'"));
        println!("[{}] {:<12} {:<9} {}", r.index, r.skill, status, reason);
    }
    println!("task complete: {}", trace.task_complete);

    let mut outputs = Vec::new();
    ctx.write("trace.jsonl", trace.to_jsonl(), &mut outputs)?;
    ctx.write("verdicts.csv", verdicts, &mut outputs)?;
    let args = serde_json::json!({ "scenario": scenario_path.display().to_string() });
    ctx.finish("task", &gateway, transcript, args, outputs)?;
    Ok(trace.task_complete)
}

fn gen_scenes(dir: &Path) -> Result<bool> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, scene) in scene_synth::bundled() {
        let path = dir.join(name);
        fs::write(&path, scene_to_jsonl(&scene)).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    if let Command::GenScenes { dir } = &cli.command {
        return gen_scenes(dir);
    }
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Ctx {
        cfg,
        provider: cli.provider,
        transcript: cli.transcript,
        config_path: cli.config,
        out: cli.out,
    };
    match &cli.command {
        Command::Adapt {
            terrains,
            variants,
            runs,
            noise_scale,
            manual,
        } => adapt(&ctx, terrains, variants, *runs, *noise_scale, manual.as_deref()),
        Command::Plan {
            scene,
            instruction,
            no_cost,
        } => plan(&ctx, scene, instruction, *no_cost),
        Command::Task { scenario } => task(&ctx, scenario),
        Command::GenScenes { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
