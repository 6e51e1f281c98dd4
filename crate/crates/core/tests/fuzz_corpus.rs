//! Replays the checked-in fuzz corpus through the same entry points and
//! assertions as the fuzz targets.

use std::fs;
use std::path::{Path, PathBuf};

use locomind::config::Config;
use locomind::llm::parse::{parse_cost_json, parse_levels, parse_numeric_params, parse_numeric_values, CostMode};
use locomind::llm::{parse_transcript, transcript_to_jsonl};
use locomind::lss::ManualParams;
use locomind::mapping::{parse_scene, scene_to_jsonl};
use locomind::task::{parse_plan, Scenario};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text_seeds(target: &str) -> Vec<(PathBuf, String)> {
    seeds(target)
        .into_iter()
        .filter_map(|(p, b)| String::from_utf8(b).ok().map(|s| (p, s)))
        .collect()
}

#[test]
fn levels() {
    let results: Vec<bool> = text_seeds("parse_levels").iter().map(|(_, t)| parse_levels(t).is_ok()).collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn numeric_params() {
    let mut ok = 0;
    for (_, t) in text_seeds("parse_numeric_params") {
        ok += usize::from(parse_numeric_params(&t).is_ok());
        ok += usize::from(parse_numeric_values(&t).is_ok());
    }
    assert!(ok > 0);
}

#[test]
fn cost_json() {
    let mut ok = 0;
    for (_, t) in text_seeds("parse_cost_json") {
        for mode in [CostMode::Binary, CostMode::Continuous] {
            if let Ok(a) = parse_cost_json(&t, mode) {
                assert!(a.terrain.iter().all(|t| (0.0..=1.0).contains(&t.cost)));
                ok += 1;
            }
        }
    }
    assert!(ok > 0);
}

#[test]
fn scene() {
    for (path, t) in text_seeds("parse_scene") {
        if let Ok(scene) = parse_scene(&t) {
            assert_eq!(parse_scene(&scene_to_jsonl(&scene)).unwrap(), scene, "{}", path.display());
        }
    }
}

#[test]
fn transcript() {
    for (path, t) in text_seeds("parse_transcript") {
        let records = parse_transcript(&t).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_transcript(&transcript_to_jsonl(&records)).unwrap(), records);
    }
}

#[test]
fn plan() {
    let results: Vec<bool> = text_seeds("parse_plan").iter().map(|(_, t)| parse_plan(t).is_ok()).collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn config() {
    for (_, t) in text_seeds("parse_config") {
        if let Ok(cfg) = Config::parse(&t) {
            assert_eq!(Config::parse(&cfg.to_toml()).unwrap(), cfg);
        }
    }
}

#[test]
fn scenario_and_manual() {
    let mut ok = 0;
    for (_, t) in text_seeds("parse_scenario") {
        ok += usize::from(Scenario::parse(&t).is_ok());
        ok += usize::from(ManualParams::parse(&t).is_ok());
    }
    assert_eq!(ok, 2);
}

#[test]
fn pgm() {
    let results: Vec<bool> = seeds("decode_pgm")
        .iter()
        .map(|(_, b)| match locomind::pgm::decode(b) {
            Ok(img) => {
                assert_eq!(img.pixels.len(), img.width * img.height);
                true
            }
            Err(_) => false,
        })
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}
