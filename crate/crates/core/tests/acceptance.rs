//! Acceptance suite. Prints one PASS/FAIL line per criterion together with
//! its measured runtime and bound; exits nonzero if any criterion fails.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locomind::config::Config;
use locomind::llm::parse::{parse_cost_json, parse_levels, CostMode};
use locomind::llm::{Gateway, TranscriptRecord};
use locomind::locomotion::{
    desired_contact, foot_phases, timing_reference, CommandVector, Gait, Level, Param,
};
use locomind::lss::{
    candidate_grid, evaluate, locate_ranges, random_baseline, run_benchmark, select_best, LssConfig,
    MethodVariant,
};
use locomind::mapping::{
    dilate, ingest, match_detection, Cell, Detection, Frame, InstanceMemory, LabeledPoint, MappingConfig,
    Pose, SemanticMap,
};
use locomind::navigation::{
    extract_path, fmm_solve, frontier_goal, plan_in_scene, CostMap, NavConfig, TIE_EPS,
};
use locomind::reward::{
    episode_percent, r_stance_velocity, r_swing_force, r_velocity_xy, r_velocity_yaw, RewardConfig, StepSample,
};
use locomind::surrogate::SurrogateTerrain;
use locomind::task::{run_scenario, Scenario, SubgoalStatus};
use locomind::terrain::TerrainKind;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn scripted(entries: &[(&str, &str)]) -> Gateway {
    let mut ordinals: BTreeMap<&str, usize> = BTreeMap::new();
    Gateway::scripted(
        entries
            .iter()
            .map(|(id, reply)| {
                let o = ordinals.entry(id).or_insert(0);
                *o += 1;
                TranscriptRecord {
                    template_id: id.to_string(),
                    ordinal: *o - 1,
                    request_hash: String::new(),
                    response: reply.to_string(),
                }
            })
            .collect(),
    )
}

// 1 ------------------------------------------------------------------------

fn gait_mathematics() -> Outcome {
    let presets = [
        (Gait::Pronking, [0.0, 0.0, 0.0]),
        (Gait::Trotting, [0.5, 0.0, 0.0]),
        (Gait::Bounding, [0.0, 0.5, 0.0]),
        (Gait::Pacing, [0.0, 0.0, 0.5]),
    ];
    let mut checked = 0;
    for (gait, [a, b, c]) in presets {
        ensure(gait.offsets().0 == [a, b, c], || format!("{gait} offsets {:?}", gait.offsets().0))?;
        for k in 0..100 {
            let t = k as f64 / 100.0;
            let raw = [t + b + c, t + a + c, t + a, t + b];
            let want: Vec<f64> = raw.iter().map(|v| v - v.floor()).collect();
            let got = foot_phases(t, gait.offsets()).map_err(|e| e.to_string())?;
            let clock = timing_reference(t, gait.offsets()).map_err(|e| e.to_string())?;
            let contact = desired_contact(gait.offsets(), t).map_err(|e| e.to_string())?;
            for i in 0..4 {
                ensure((got[i] - want[i]).abs() <= 1e-12, || format!("{gait} t={t} phase {i}: {} vs {}", got[i], want[i]))?;
                let s = (2.0 * std::f64::consts::PI * want[i]).sin();
                ensure((clock[i] - s).abs() <= 1e-12, || format!("{gait} t={t} clock {i}"))?;
                ensure(contact[i] == (want[i] < 0.5), || format!("{gait} t={t} contact {i}"))?;
                checked += 1;
            }
            match gait {
                Gait::Trotting => ensure(got[0] == got[3] && got[1] == got[2], || format!("trot pairs at t={t}"))?,
                Gait::Pacing => ensure(got[0] == got[1] && got[2] == got[3], || format!("pace pairs at t={t}"))?,
                _ => {}
            }
        }
    }
    Ok(format!("{checked} foot-phase evaluations"))
}

// 2 ------------------------------------------------------------------------

fn reward_closed_forms() -> Outcome {
    let cfg = RewardConfig::default();
    let cmd = CommandVector::new(1.0, 0.0, 0.0).map_err(|e| e.to_string())?;
    let e1 = (-1.0f64).exp();
    let sample = |v: [f64; 2], w: f64, force: f64, speed: f64, t: f64| StepSample {
        v_xy: v,
        w_z: w,
        foot_force: [force; 4],
        foot_speed_xy: [speed; 4],
        phase_t: t,
    };
    let close = |name: &str, got: f64, want: f64| {
        ensure((got - want).abs() <= 1e-12, || format!("{name}: {got} vs {want}"))
    };
    let pronk = Gait::Pronking.offsets();
    let err = |e: locomind::reward::RewardError| e.to_string();

    close("vxy e^0", r_velocity_xy(&sample([1.0, 0.0], 0.0, 0.0, 0.0, 0.0), &cmd, &cfg), 1.0)?;
    close("vxy e^-1", r_velocity_xy(&sample([0.5, 0.0], 0.0, 0.0, 0.0, 0.0), &cmd, &cfg), e1)?;
    close("wz e^0", r_velocity_yaw(&sample([1.0, 0.0], 0.0, 0.0, 0.0, 0.0), &cmd, &cfg), 1.0)?;
    close("wz e^-1", r_velocity_yaw(&sample([1.0, 0.0], 0.5, 0.0, 0.0, 0.0), &cmd, &cfg), e1)?;
    // Pronking at t = 0.75 commands every foot to swing, at 0.25 to stance.
    close("swing e^0", r_swing_force(&sample([1.0, 0.0], 0.0, 0.0, 0.0, 0.75), pronk, &cfg).map_err(err)?, 4.0)?;
    close("swing e^-1", r_swing_force(&sample([1.0, 0.0], 0.0, 10.0, 0.0, 0.75), pronk, &cfg).map_err(err)?, 4.0 * e1)?;
    close("stance e^0", r_stance_velocity(&sample([1.0, 0.0], 0.0, 0.0, 0.0, 0.25), pronk, &cfg).map_err(err)?, 4.0)?;
    close("stance e^-1", r_stance_velocity(&sample([1.0, 0.0], 0.0, 0.0, 0.5, 0.25), pronk, &cfg).map_err(err)?, 4.0 * e1)?;

    let trot = Gait::Trotting.offsets();
    let perfect: Vec<StepSample> = (0..250)
        .map(|k| sample([1.0, 0.0], 0.0, 0.0, 0.0, (k % 50) as f64 / 50.0))
        .collect();
    let report = episode_percent(&perfect, &cmd, trot, &cfg).map_err(err)?;
    ensure(report.as_array() == [100.0; 4], || format!("perfect episode {:?}", report.as_array()))?;
    Ok("8 closed forms, perfect episode = 100 x 4".into())
}

// 3 ------------------------------------------------------------------------

fn lss_oracle_equivalence() -> Outcome {
    let reply = fixture("levels_uphill.txt");
    let id = "lss_location/uphill_slope";
    let gateway = scripted(&[(id, &reply), (id, &reply), (id, &reply)]);
    let kind = TerrainKind::UphillSlope;
    let located = locate_ranges(kind.description(), kind.name(), &gateway).map_err(|e| e.to_string())?;

    let mut settings = Config::default().eval_settings();
    settings.sim.noise_scale = 0.0;
    let grid = candidate_grid(&located.selection, &settings.table, &LssConfig::default());
    ensure(!grid.is_empty() && grid.len() <= 1024, || format!("{} candidates", grid.len()))?;

    let terrain = SurrogateTerrain::new(kind.default_spec());
    let cmd = CommandVector::forward();
    let sim = settings.sim.with_seed(11);
    let (best, _) = select_best(&grid, &terrain, &cmd, &sim, &settings).map_err(|e| e.to_string())?;

    let mut oracle = grid[0];
    let mut oracle_score = f64::NEG_INFINITY;
    for c in &grid {
        let s = evaluate(&terrain, c, &cmd, &sim, &settings).velocity_xy;
        let better = s > oracle_score
            || (s == oracle_score
                && (c.body_height < oracle.body_height
                    || (c.body_height == oracle.body_height && c.step_frequency < oracle.step_frequency)));
        if better {
            oracle = *c;
            oracle_score = s;
        }
    }
    ensure(best == oracle, || format!("select_best {best:?} vs oracle {oracle:?}"))?;

    // Voted intervals: low height, high frequency, high swing, positive pitch,
    // medium stance, trotting.
    let bounds = [
        (Param::BodyHeight, 0.15, 0.2),
        (Param::StepFrequency, 3.0, 3.5),
        (Param::SwingHeight, 0.16, 0.21),
        (Param::BodyPitch, 0.08, 0.24),
        (Param::StanceWidth, 0.21, 0.29),
    ];
    for (p, lo, hi) in bounds {
        let v = best.get(p);
        ensure(v >= lo - 1e-9 && v <= hi + 1e-9, || format!("{} = {v} outside [{lo}, {hi}]", p.key()))?;
    }
    ensure(best.gait == Gait::Trotting, || format!("gait {}", best.gait))?;
    Ok(format!("{} candidates, best velocity {oracle_score:.2} %", grid.len()))
}

// 4 ------------------------------------------------------------------------

fn trend_reproduction() -> Outcome {
    let gateway = Gateway::scripted_from_file(&assets().join("transcripts/adapt.jsonl")).map_err(|e| e.to_string())?;
    let cfg = Config::default();
    let settings = cfg.eval_settings();
    let terrains: Vec<SurrogateTerrain> = TerrainKind::ALL.iter().map(|k| SurrogateTerrain::new(k.default_spec())).collect();
    let rows = run_benchmark(
        &[MethodVariant::AutoLssSampling, MethodVariant::AutoLssDetermining],
        &terrains,
        10,
        &gateway,
        &settings,
        None,
        cfg.seed,
    )
    .map_err(|e| e.to_string())?;
    let score = |kind: TerrainKind, v: MethodVariant| {
        rows.iter()
            .find(|r| r.adaptation.terrain == kind && r.adaptation.variant == v)
            .map(|r| r.report.velocity_xy)
            .expect("row present")
    };
    let mut beats_determining = 0;
    let mut beats_random = 0;
    let mut detail = Vec::new();
    for t in &terrains {
        let kind = t.kind();
        let lss = score(kind, MethodVariant::AutoLssSampling);
        let det = score(kind, MethodVariant::AutoLssDetermining);
        let random = random_baseline(t, 100, cfg.seed, &settings);
        beats_determining += usize::from(lss >= det);
        beats_random += usize::from(lss >= random);
        detail.push(format!("{}: {lss:.1}/{det:.1}/{random:.1}", kind.name()));
    }
    ensure(beats_determining >= 4 && beats_random == 5, || {
        format!("LSS >= determining on {beats_determining}/5, >= random on {beats_random}/5 ({})", detail.join(", "))
    })?;
    Ok(format!("LSS/determining/random {}", detail.join(", ")))
}

// 5 ------------------------------------------------------------------------

const MAP_M: usize = 64;
const CELL: f64 = 0.05;

fn oracle_cell(x: f64, y: f64) -> Option<Cell> {
    let c = (x / CELL).floor() as i64 + (MAP_M / 2) as i64;
    let r = (y / CELL).floor() as i64 + (MAP_M / 2) as i64;
    let ok = |v: i64| (0..MAP_M as i64).contains(&v);
    (ok(r) && ok(c)).then_some((r as i32, c as i32))
}

fn oracle_components(cells: &BTreeSet<Cell>) -> Vec<BTreeSet<Cell>> {
    let mut left = cells.clone();
    let mut out = Vec::new();
    while let Some(&seed) = left.iter().next() {
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([seed]);
        left.remove(&seed);
        while let Some((r, c)) = queue.pop_front() {
            comp.insert((r, c));
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if left.remove(&(r + dr, c + dc)) {
                        queue.push_back((r + dr, c + dc));
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

fn chebyshev_near(a: &BTreeSet<Cell>, b: &BTreeSet<Cell>, p: i32) -> bool {
    a.iter()
        .any(|&(r, c)| b.iter().any(|&(r2, c2)| (r - r2).abs() <= p && (c - c2).abs() <= p))
}

fn find(parent: &mut Vec<usize>, i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut i = i;
    while parent[i] != root {
        let next = parent[i];
        parent[i] = root;
        i = next;
    }
    root
}

fn random_frame(rng: &mut ChaCha8Rng, classes: usize) -> Frame {
    let pose = Pose::new(rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4), rng.gen_range(-3.1..3.1));
    let mut points = Vec::new();
    for _ in 0..rng.gen_range(1..5) {
        let category = rng.gen_range(0..classes);
        let (cx, cy) = (rng.gen_range(-1.9..1.9), rng.gen_range(-1.9..1.9));
        let radius = rng.gen_range(0.02..0.25);
        for _ in 0..rng.gen_range(3..40) {
            points.push(LabeledPoint {
                x: cx + rng.gen_range(-radius..radius),
                y: cy + rng.gen_range(-radius..radius),
                z: rng.gen_range(-0.3..2.4),
                category,
            });
        }
    }
    Frame { pose, points }
}

fn mapping_correctness() -> Outcome {
    for c in [1usize, 5, 20] {
        let names: Vec<String> = (0..c).map(|i| format!("class{i}")).collect();
        let map = SemanticMap::new(names, MAP_M, CELL).map_err(|e| e.to_string())?;
        ensure(map.channels() == c + 3, || format!("K = {} for C = {c}", map.channels()))?;
    }

    let classes = 5;
    let cfg = MappingConfig {
        map_size: MAP_M,
        cell_size: CELL,
        ..MappingConfig::default()
    };
    let p = cfg.dilation as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names: Vec<String> = (0..classes).map(|i| format!("class{i}")).collect();
    let mut map = SemanticMap::new(names, MAP_M, CELL).map_err(|e| e.to_string())?;
    let mut memory = InstanceMemory::new();

    let mut coverage: Vec<BTreeSet<Cell>> = vec![BTreeSet::new(); classes];
    let mut detections: Vec<(usize, BTreeSet<Cell>)> = Vec::new();
    for f in 0..100 {
        let frame = random_frame(&mut rng, classes);
        ingest(&mut map, &mut memory, &frame, f, &cfg).map_err(|e| e.to_string())?;

        let mut touched: Vec<BTreeSet<Cell>> = vec![BTreeSet::new(); classes];
        for pt in &frame.points {
            if !(0.0..2.0).contains(&pt.z) {
                continue;
            }
            if let Some(cell) = oracle_cell(pt.x, pt.y) {
                touched[pt.category].insert(cell);
            }
        }
        for (class, cells) in touched.into_iter().enumerate() {
            coverage[class].extend(cells.iter().copied());
            detections.extend(oracle_components(&cells).into_iter().map(|c| (class, c)));
        }
    }

    // Per-point projection coverage.
    for (class, want) in coverage.iter().enumerate() {
        let in_map: BTreeSet<Cell> = (0..MAP_M as i32)
            .flat_map(|r| (0..MAP_M as i32).map(move |c| (r, c)))
            .filter(|&cell| map.get(class, cell) != 0)
            .collect();
        ensure(&in_map == want, || format!("class {class}: map {} cells, oracle {}", in_map.len(), want.len()))?;
        let in_memory: BTreeSet<Cell> = memory.of_class(class).flat_map(|i| i.cells.iter().copied()).collect();
        ensure(&in_memory == want, || format!("class {class}: memory coverage differs"))?;
    }

    // Partition: every marked cell has exactly one owner and the map stores it.
    let mut owner: BTreeMap<(usize, Cell), u32> = BTreeMap::new();
    for inst in memory.iter() {
        for &cell in &inst.cells {
            ensure(owner.insert((inst.class, cell), inst.id).is_none(), || format!("cell {cell:?} owned twice"))?;
            ensure(map.get(inst.class, cell) == inst.id, || format!("map owner at {cell:?}"))?;
        }
    }

    // Transitive closure of same-class dilation overlap.
    let n = detections.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if detections[i].0 == detections[j].0 && chebyshev_near(&detections[i].1, &detections[j].1, p) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut clusters: BTreeMap<usize, (usize, BTreeSet<Cell>)> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let entry = clusters.entry(root).or_insert((detections[i].0, BTreeSet::new()));
        entry.1.extend(detections[i].1.iter().copied());
    }
    for (class, cells) in clusters.values() {
        let inside: BTreeSet<Cell> = memory
            .of_class(*class)
            .filter(|i| i.cells.is_subset(cells))
            .flat_map(|i| i.cells.iter().copied())
            .collect();
        ensure(&inside == cells, || format!("class {class}: cluster of {} cells not covered by its instances", cells.len()))?;
    }
    for inst in memory.iter() {
        ensure(
            clusters.values().any(|(class, cells)| *class == inst.class && inst.cells.is_subset(cells)),
            || format!("instance {} spans several clusters", inst.id),
        )?;
    }

    // A chain of overlapping detections fed in order collapses to one instance.
    let mut chain_map = SemanticMap::new(vec!["box".into()], MAP_M, CELL).map_err(|e| e.to_string())?;
    let mut chain_memory = InstanceMemory::new();
    let mut chain_cells = BTreeSet::new();
    for k in 0..8 {
        let x = -1.0 + k as f64 * 0.2;
        let frame = Frame {
            pose: Pose::default(),
            points: vec![
                LabeledPoint { x, y: 0.01, z: 0.5, category: 0 },
                LabeledPoint { x: x + 0.05, y: 0.01, z: 0.5, category: 0 },
            ],
        };
        for pt in &frame.points {
            chain_cells.insert(oracle_cell(pt.x, pt.y).expect("inside"));
        }
        ingest(&mut chain_map, &mut chain_memory, &frame, k, &cfg).map_err(|e| e.to_string())?;
    }
    ensure(chain_memory.len() == 1, || format!("chain gave {} instances", chain_memory.len()))?;
    ensure(chain_memory.iter().next().unwrap().cells == chain_cells, || "chain cells differ".into())?;

    Ok(format!("{} detections, {} instances, {} clusters", n, memory.len(), clusters.len()))
}

// 6 ------------------------------------------------------------------------

fn random_cells(rng: &mut ChaCha8Rng, span: i32, max: usize) -> BTreeSet<Cell> {
    let k = rng.gen_range(1..=max);
    (0..k).map(|_| (rng.gen_range(0..span), rng.gen_range(0..span))).collect()
}

fn dilation_and_matching() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let cells = random_cells(&mut rng, 20, 15);
        let p = rng.gen_range(0..5usize);
        let pi = p as i32;
        let mut want = BTreeSet::new();
        for r in -pi - 1..20 + pi + 1 {
            for c in -pi - 1..20 + pi + 1 {
                if cells.iter().any(|&(a, b)| (a - r).abs().max((b - c).abs()) <= pi) {
                    want.insert((r, c));
                }
            }
        }
        ensure(dilate(&cells, p) == want, || format!("dilation trial {trial} (p = {p})"))?;
    }

    let mut matches = 0;
    for trial in 0..1000 {
        let p = rng.gen_range(0..4usize);
        let mut memory = InstanceMemory::new();
        for f in 0..rng.gen_range(0..6) {
            let d = Detection::new(rng.gen_range(0..3), random_cells(&mut rng, 30, 12), f, p);
            memory.insert(&d);
        }
        let d = Detection::new(rng.gen_range(0..3), random_cells(&mut rng, 30, 12), 99, p);
        let mut want: Option<(usize, u32)> = None;
        for inst in memory.iter() {
            if inst.class != d.class {
                continue;
            }
            let overlap = inst.cells.intersection(&d.dilated).count();
            if overlap > 0 && want.map_or(true, |(o, id)| overlap > o || (overlap == o && inst.id < id)) {
                want = Some((overlap, inst.id));
            }
        }
        let got = match_detection(&d, &memory);
        ensure(got == want.map(|(_, id)| id), || format!("match trial {trial}: {got:?} vs {want:?}"))?;
        matches += usize::from(got.is_some());
    }
    Ok(format!("1000 dilations, 1000 matches ({matches} positive)"))
}

// 7 ------------------------------------------------------------------------

/// 8-connected Dijkstra without corner cutting; edge weight is the step
/// length times the mean slowness of its endpoints.
fn dijkstra(cost: &CostMap, source: Cell, floor: f64) -> Vec<f64> {
    let n = cost.size() as i32;
    let h = cost.cell_size();
    let idx = |(r, c): Cell| (r * n + c) as usize;
    let mut dist = vec![f64::INFINITY; (n * n) as usize];
    let mut heap = BinaryHeap::new();
    dist[idx(source)] = 0.0;
    heap.push(Reverse((0f64.to_bits(), source)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[idx(u)] {
            continue;
        }
        for dr in -1..=1 {
            for dc in -1..=1 {
                if (dr, dc) == (0, 0) {
                    continue;
                }
                let v = (u.0 + dr, u.1 + dc);
                if cost.is_obstacle(v) {
                    continue;
                }
                if dr != 0 && dc != 0 && (cost.is_obstacle((u.0 + dr, u.1)) || cost.is_obstacle((u.0, u.1 + dc))) {
                    continue;
                }
                let len = if dr != 0 && dc != 0 { h * std::f64::consts::SQRT_2 } else { h };
                let w = len * 0.5 * (1.0 / cost.speed(u, floor) + 1.0 / cost.speed(v, floor));
                let nd = d + w;
                if nd < dist[idx(v)] {
                    dist[idx(v)] = nd;
                    heap.push(Reverse((nd.to_bits(), v)));
                }
            }
        }
    }
    dist
}

fn random_free(rng: &mut ChaCha8Rng, cost: &CostMap) -> Cell {
    let n = cost.size() as i32;
    loop {
        let cell = (rng.gen_range(0..n), rng.gen_range(0..n));
        if !cost.is_obstacle(cell) {
            return cell;
        }
    }
}

fn fmm_vs_oracle() -> Outcome {
    let n = 50;
    let floor = NavConfig::default().speed_floor;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for grid in 0..50 {
        let costs: Vec<f64> = (0..n * n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    1.0
                } else {
                    [0.0, 0.3, 0.6][rng.gen_range(0..3)]
                }
            })
            .collect();
        let cm = CostMap::from_costs(n, CELL, costs);
        let goal = random_free(&mut rng, &cm);
        let field = fmm_solve(&cm, goal, floor).map_err(|e| e.to_string())?;
        let oracle = dijkstra(&cm, goal, floor);
        for r in 0..n as i32 {
            for c in 0..n as i32 {
                let cell = (r, c);
                if cm.is_obstacle(cell) {
                    continue;
                }
                let reach = oracle[cm.index(cell)].is_finite();
                ensure(field.is_reachable(cell) == reach, || format!("grid {grid}: reachability differs at {cell:?}"))?;
            }
        }
        let reachable: Vec<Cell> = (0..n as i32)
            .flat_map(|r| (0..n as i32).map(move |c| (r, c)))
            .filter(|&c| c != goal && !cm.is_obstacle(c) && oracle[cm.index(c)].is_finite())
            .collect();
        if reachable.is_empty() {
            continue;
        }
        let start = reachable[rng.gen_range(0..reachable.len())];
        let plan = extract_path(&field, start, &cm, 0.0).map_err(|e| format!("grid {grid}: {e}"))?;
        let d = oracle[cm.index(start)];
        let rel = (plan.arrival_time - d).abs() / d;
        ensure(rel <= 0.10, || format!("grid {grid}: T(start) {} vs Dijkstra {d} ({:.1} %)", plan.arrival_time, 100.0 * rel))?;
        worst = worst.max(rel);
        compared += 1;
    }
    Ok(format!("{compared} starts, worst deviation {:.2} %", 100.0 * worst))
}

// 8 ------------------------------------------------------------------------

struct FrontierCase {
    cost: CostMap,
    map: SemanticMap,
    start: Cell,
}

const ROOM_N: i32 = 41;
const ROOM_LO: i32 = 4;
const ROOM_HI: i32 = 36;

/// Explored square room bounded by a wall ring with single-cell doorways,
/// unexplored outside. Only doorways are frontier cells.
fn room(walls: &BTreeSet<Cell>, doors: &BTreeSet<Cell>, start: Cell) -> FrontierCase {
    let n = ROOM_N as usize;
    let mut cost = CostMap::uniform(n, CELL, 0.5);
    let mut map = SemanticMap::new(vec!["wall".into()], n, CELL).expect("valid map");
    let explored = map.explored_channel();
    for r in ROOM_LO..=ROOM_HI {
        for c in ROOM_LO..=ROOM_HI {
            map.set(explored, (r, c), 1);
            let ring = r == ROOM_LO || r == ROOM_HI || c == ROOM_LO || c == ROOM_HI;
            let blocked = (ring && !doors.contains(&(r, c))) || walls.contains(&(r, c));
            cost.set_cost((r, c), if blocked { 1.0 } else { 0.0 });
        }
    }
    FrontierCase { cost, map, start }
}

fn ring_cell(rng: &mut ChaCha8Rng) -> Cell {
    let k = rng.gen_range(ROOM_LO + 1..ROOM_HI);
    match rng.gen_range(0..4) {
        0 => (ROOM_LO, k),
        1 => (ROOM_HI, k),
        2 => (k, ROOM_LO),
        _ => (k, ROOM_HI),
    }
}

fn interior_walls(rng: &mut ChaCha8Rng, count: usize) -> BTreeSet<Cell> {
    let mut walls = BTreeSet::new();
    for _ in 0..count {
        let len = rng.gen_range(6..20);
        let (r, c) = (rng.gen_range(ROOM_LO + 3..ROOM_HI - 2), rng.gen_range(ROOM_LO + 3..ROOM_HI - 2));
        let horizontal = rng.gen_bool(0.5);
        for k in 0..len {
            let cell = if horizontal { (r, c + k) } else { (r + k, c) };
            if cell.0 < ROOM_HI - 1 && cell.1 < ROOM_HI - 1 {
                walls.insert(cell);
            }
        }
    }
    walls
}

fn oracle_frontier(case: &FrontierCase, floor: f64) -> Option<(Cell, f64, f64)> {
    let n = ROOM_N;
    let dist = dijkstra(&case.cost, case.start, floor);
    let mut frontier = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let cell = (r, c);
            if !case.map.is_explored(cell) || case.cost.is_obstacle(cell) {
                continue;
            }
            let open = (-1..=1).any(|dr| {
                (-1..=1).any(|dc| {
                    let nb = (r + dr, c + dc);
                    (0..n).contains(&nb.0) && (0..n).contains(&nb.1) && !case.map.is_explored(nb)
                })
            });
            if open && dist[case.cost.index(cell)].is_finite() {
                frontier.push((dist[case.cost.index(cell)], cell));
            }
        }
    }
    let best = frontier.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    let goal = frontier.iter().filter(|f| f.0 <= best + TIE_EPS).map(|f| f.1).min()?;
    let runner_up = frontier
        .iter()
        .map(|f| f.0)
        .filter(|&d| d > best + TIE_EPS)
        .fold(f64::INFINITY, f64::min);
    Some((goal, best, runner_up))
}

fn frontier_cases() -> Vec<FrontierCase> {
    let mut cases = Vec::new();
    let mid = (ROOM_LO + ROOM_HI) / 2;

    // A doorway just behind a long wall against one farther away in the open.
    let wall: BTreeSet<Cell> = (ROOM_LO + 1..ROOM_HI - 3).map(|r| (r, mid + 3)).collect();
    cases.push(room(&wall, &BTreeSet::from([(mid, ROOM_HI)]).union(&BTreeSet::from([(ROOM_LO, mid - 8)])).copied().collect(), (mid, mid)));
    let wall: BTreeSet<Cell> = (mid - 10..=mid + 10).map(|c| (mid + 3, c)).collect();
    cases.push(room(&wall, &BTreeSet::from([(ROOM_HI, mid), (mid - 6, ROOM_LO)]), (mid, mid)));

    // Mirror-symmetric rooms: the tie goes to the smaller (row, col).
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    while cases.len() < 8 {
        let half = interior_walls(&mut rng, 2);
        let walls: BTreeSet<Cell> = half
            .iter()
            .filter(|c| c.1 < mid)
            .flat_map(|&(r, c)| [(r, c), (r, 2 * mid - c)])
            .collect();
        let r = rng.gen_range(ROOM_LO + 1..ROOM_HI);
        let c = rng.gen_range(ROOM_LO + 1..mid - 1);
        let doors = if rng.gen_bool(0.5) {
            BTreeSet::from([(r, ROOM_LO), (r, ROOM_HI)])
        } else {
            BTreeSet::from([(ROOM_LO, c), (ROOM_LO, 2 * mid - c)])
        };
        let start = (rng.gen_range(ROOM_LO + 1..ROOM_HI), mid);
        if walls.contains(&start) {
            continue;
        }
        cases.push(room(&walls, &doors, start));
    }

    // Random mazes whose nearest doorway is unambiguous at grid resolution.
    let floor = NavConfig::default().speed_floor;
    while cases.len() < 20 {
        let count = rng.gen_range(2..6);
        let walls = interior_walls(&mut rng, count);
        let doors: BTreeSet<Cell> = (0..rng.gen_range(2..5)).map(|_| ring_cell(&mut rng)).collect();
        let start = (rng.gen_range(ROOM_LO + 1..ROOM_HI), rng.gen_range(ROOM_LO + 1..ROOM_HI));
        if walls.contains(&start) {
            continue;
        }
        let case = room(&walls, &doors, start);
        match oracle_frontier(&case, floor) {
            Some((_, best, runner)) if runner > 1.15 * best => cases.push(case),
            _ => {}
        }
    }
    cases
}

fn frontier_selection() -> Outcome {
    let floor = NavConfig::default().speed_floor;
    let cases = frontier_cases();
    let mut ties = 0;
    for (i, case) in cases.iter().enumerate() {
        let (want, best, runner) = oracle_frontier(case, floor).ok_or_else(|| format!("case {i}: no reachable frontier"))?;
        let got = frontier_goal(&case.map, &case.cost, case.start, floor).map_err(|e| format!("case {i}: {e}"))?;
        ensure(got == want, || format!("case {i}: frontier_goal {got:?} vs oracle {want:?} ({best:.3} / {runner:.3})"))?;
        if i < 2 {
            // The chosen doorway must not be the Euclidean-nearest one.
            let euclid = |c: Cell| ((c.0 - case.start.0) as f64).hypot((c.1 - case.start.1) as f64);
            let doors: Vec<Cell> = (0..ROOM_N)
                .flat_map(|r| (0..ROOM_N).map(move |c| (r, c)))
                .filter(|&c| {
                    (c.0 == ROOM_LO || c.0 == ROOM_HI || c.1 == ROOM_LO || c.1 == ROOM_HI)
                        && case.map.is_explored(c)
                        && !case.cost.is_obstacle(c)
                })
                .collect();
            let nearest = doors.iter().copied().min_by(|a, b| euclid(*a).total_cmp(&euclid(*b))).expect("doors");
            ensure(nearest != got, || format!("case {i}: geodesic and Euclidean choices coincide"))?;
        }
        let tied = (0..ROOM_N)
            .flat_map(|r| (0..ROOM_N).map(move |c| (r, c)))
            .filter(|&c| c != want && (c.0 == ROOM_LO || c.0 == ROOM_HI || c.1 == ROOM_LO || c.1 == ROOM_HI))
            .filter(|&c| !case.cost.is_obstacle(c))
            .any(|c| (dijkstra(&case.cost, case.start, floor)[case.cost.index(c)] - best).abs() <= TIE_EPS);
        ties += usize::from(tied);
    }
    Ok(format!("{} maps, {ties} with exact ties", cases.len()))
}

// 9 ------------------------------------------------------------------------

fn cost_ablation() -> Outcome {
    let cfg = Config::default();
    let load = |name: &str| {
        let text = std::fs::read_to_string(assets().join("scenes").join(name)).expect("bundled scene");
        locomind::mapping::parse_scene(&text).expect("valid scene")
    };
    let band = load("band.jsonl");
    let control = load("band_control.jsonl");
    let transcript = assets().join("transcripts/chair.jsonl");
    let instruction = "Go to the chair. Do not walk over the mattress.";
    let plan = |scene, no_cost| {
        let gw = Gateway::scripted_from_file(&transcript).map_err(|e| e.to_string())?;
        plan_in_scene(scene, instruction, &gw, &cfg.mapping, &cfg.navigation, cfg.task.success_radius, no_cost)
            .map_err(|e| e.to_string())
    };
    let crosses = |p: &locomind::navigation::ScenePlan| {
        p.plan.as_ref().is_some_and(|path| {
            path.waypoints
                .iter()
                .any(|w| (1.0..1.6).contains(&w.x) && (-1.0..1.0).contains(&w.y))
        })
    };

    let with_cost = plan(&band, false)?;
    let without = plan(&band, true)?;
    ensure(with_cost.plan.is_some(), || "cost plan unreachable".into())?;
    ensure(!crosses(&with_cost), || "cost plan crosses the band".into())?;
    ensure(crosses(&without), || "no-cost plan avoids the band".into())?;

    let mut ends = Vec::new();
    for no_cost in [false, true] {
        let p = plan(&control, no_cost)?;
        let d = p.end_distance.ok_or("control plan has no end")?;
        ensure(d <= 0.5 && p.success, || format!("control (no_cost = {no_cost}) ends {d:.3} m away"))?;
        ends.push(d);
    }
    let len = |p: &locomind::navigation::ScenePlan| p.plan.as_ref().map_or(0.0, |x| x.length());
    Ok(format!(
        "band path {:.2} m vs ablation {:.2} m; control ends {:.3} / {:.3} m",
        len(&with_cost),
        len(&without),
        ends[0],
        ends[1]
    ))
}

// 10 -----------------------------------------------------------------------

fn long_horizon() -> Outcome {
    let path = assets().join("scenarios/errand.json");
    let run = || -> Result<(String, locomind::task::ExecutionTrace), String> {
        let scenario = Scenario::load(&path).map_err(|e| e.to_string())?;
        let scene = scenario.load_scene().map_err(|e| e.to_string())?;
        let gw = Gateway::scripted_from_file(&scenario.transcript).map_err(|e| e.to_string())?;
        let trace = run_scenario(&scenario, &scene, &gw, &Config::default()).map_err(|e| e.to_string())?;
        Ok((trace.to_jsonl(), trace))
    };
    let (first, trace) = run()?;
    let (second, _) = run()?;
    ensure(trace.plan.len() == 6, || format!("{} subgoals", trace.plan.len()))?;
    ensure(
        trace.records.len() == 6 && trace.records.iter().all(|r| r.status == SubgoalStatus::Succeeded),
        || "not every subgoal succeeded".into(),
    )?;
    ensure(first == second, || "traces differ between runs".into())?;

    // Instance centroid of the clothes from the full scene.
    let scenario = Scenario::load(&path).map_err(|e| e.to_string())?;
    let scene = scenario.load_scene().map_err(|e| e.to_string())?;
    let h = &scene.header;
    let cfg = MappingConfig {
        map_size: h.map_size,
        cell_size: h.cell_size,
        ..MappingConfig::default()
    };
    let mut map = SemanticMap::new(h.categories.clone(), h.map_size, h.cell_size).map_err(|e| e.to_string())?;
    let mut memory = InstanceMemory::new();
    for (i, f) in scene.frames.iter().enumerate() {
        ingest(&mut map, &mut memory, f, i, &cfg).map_err(|e| e.to_string())?;
    }
    let class = map.category_index("blue clothes").ok_or("no clothes category")?;
    let inst = memory.of_class(class).next().ok_or("clothes not mapped")?;
    let (r, c) = inst.centroid();
    let half = (h.map_size / 2) as f64;
    let (cx, cy) = ((c - half + 0.5) * h.cell_size, (r - half + 0.5) * h.cell_size);
    let end = trace.records.last().expect("records").pose_after;
    let d = (end.x - cx).hypot(end.y - cy);
    ensure(d <= 0.5, || format!("final pose {d:.3} m from the clothes"))?;
    Ok(format!("6/6 subgoals, final distance {d:.3} m, {} trace bytes", first.len()))
}

// 11 -----------------------------------------------------------------------

fn parser_fidelity() -> Outcome {
    let levels = parse_levels(&fixture("levels_uphill.txt")).map_err(|e| e.to_string())?;
    let want = [Level::Low, Level::High, Level::High, Level::High, Level::Medium];
    ensure(levels.levels == want && levels.gait == Gait::Trotting, || format!("{levels:?}"))?;
    ensure(Level::High.name_for(Param::BodyPitch) == "positive", || "pitch naming".into())?;

    let cost = parse_cost_json(&fixture("cost_example.txt"), CostMode::Binary).map_err(|e| e.to_string())?;
    ensure(cost.target_object == "red cabinet", || cost.target_object.clone())?;
    ensure(cost.obstacles == ["white kitchen table", "wooden chair"], || format!("{:?}", cost.obstacles))?;
    let terrain: Vec<(&str, f64, u8)> = cost.terrain.iter().map(|t| (t.category.as_str(), t.cost, t.gait)).collect();
    ensure(
        terrain == [("light wooden floor", 0.0, 0), ("gray tiles", 0.0, 0), ("metal steps", 1.0, 1)],
        || format!("{terrain:?}"),
    )?;
    Ok("location answers and cost JSON".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("gait mathematics", Duration::from_secs(1), gait_mathematics),
        ("reward closed forms", Duration::from_secs(1), reward_closed_forms),
        ("LSS oracle equivalence", Duration::from_secs(30), lss_oracle_equivalence),
        ("trend reproduction", Duration::from_secs(300), trend_reproduction),
        ("mapping correctness", Duration::from_secs(30), mapping_correctness),
        ("dilation and matching", Duration::from_secs(10), dilation_and_matching),
        ("FMM vs Dijkstra", Duration::from_secs(60), fmm_vs_oracle),
        ("frontier selection", Duration::from_secs(10), frontier_selection),
        ("cost-ablation navigation", Duration::from_secs(30), cost_ablation),
        ("long-horizon scenario", Duration::from_secs(60), long_horizon),
        ("parser fidelity", Duration::from_secs(1), parser_fidelity),
    ];
    let mut failed = 0;
    for (i, (name, bound, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *bound => Err(format!("over the runtime bound")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        failed += usize::from(outcome.is_err());
        println!(
            "{tag} {:>2} {:<26} {:>8.3} s (bound {} s)  {detail}",
            i + 1,
            name,
            elapsed.as_secs_f64(),
            bound.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
