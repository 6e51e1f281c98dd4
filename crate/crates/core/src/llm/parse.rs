//! Structured-output parsers for model replies.
//!
//! All parsers accept arbitrary text and never panic; they are the fuzzing
//! entry points of the crate.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::locomotion::{BehaviorParams, Gait, Level, Param};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("missing answer {0}")]
    MissingAnswer(String),
    #[error("answer {index} = {value:?}: {reason}")]
    InvalidAnswer {
        index: String,
        value: String,
        reason: String,
    },
    #[error("no value for {0}")]
    MissingParam(String),
    #[error("gait `{0}` is not one of pronking, trotting, bounding, pacing")]
    InvalidGait(String),
    #[error("no JSON {0} found")]
    NoJson(&'static str),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("schema violations: {}", .0.join("; "))]
    Schema(Vec<String>),
}

/// Answers to the six location questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelAnswers {
    /// Indexed by [`Param::index`].
    pub levels: [Level; 5],
    pub gait: Gait,
}

impl LevelAnswers {
    pub fn level(&self, p: Param) -> Level {
        self.levels[p.index()]
    }
}

fn answer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?im)^[\s*#>-]*A\s*([1-6])\s*\**\s*[:.)]\s*\**\s*([^\n]*)$").expect("valid regex")
    })
}

/// Extracts answers `A1`..`A6` (body height, stepping frequency, swing
/// height, body pitch, stance width, gait). The first occurrence of each
/// index wins.
pub fn parse_levels(text: &str) -> Result<LevelAnswers, ParseError> {
    let mut raw: [Option<String>; 6] = Default::default();
    for cap in answer_re().captures_iter(text) {
        let idx: usize = cap[1].parse().expect("regex digit");
        let slot = &mut raw[idx - 1];
        if slot.is_none() {
            *slot = Some(cap[2].trim().trim_matches('*').trim().to_string());
        }
    }
    let mut levels = [Level::Medium; 5];
    for p in Param::ALL {
        let index = format!("A{}", p.index() + 1);
        let value = raw[p.index()]
            .as_deref()
            .ok_or_else(|| ParseError::MissingAnswer(index.clone()))?;
        levels[p.index()] = Level::parse_for(p, value).map_err(|e| ParseError::InvalidAnswer {
            index,
            value: value.to_string(),
            reason: e.to_string(),
        })?;
    }
    let value = raw[5]
        .as_deref()
        .ok_or_else(|| ParseError::MissingAnswer("A6".into()))?;
    let gait = value.parse::<Gait>().map_err(|e| ParseError::InvalidAnswer {
        index: "A6".into(),
        value: value.to_string(),
        reason: e.to_string(),
    })?;
    Ok(LevelAnswers { levels, gait })
}

fn param_re(p: Param) -> &'static Regex {
    static RES: OnceLock<Vec<Regex>> = OnceLock::new();
    let all = RES.get_or_init(|| {
        let number = r"[^0-9\n]*?([+-]?(?:\d+(?:\.\d*)?|\.\d+))";
        Param::ALL
            .iter()
            .map(|p| {
                let label = match p {
                    Param::BodyHeight => r"body[\s_-]*height",
                    Param::StepFrequency => r"step(?:ping)?[\s_-]*frequency",
                    Param::SwingHeight => r"(?:foot[\s_-]*)?swing[\s_-]*height",
                    Param::BodyPitch => r"(?:body[\s_-]*)?pitch",
                    Param::StanceWidth => r"(?:foot[\s_-]*)?stance[\s_-]*width",
                };
                Regex::new(&format!(r"(?i)\b{label}\b{number}")).expect("valid regex")
            })
            .collect()
    });
    &all[p.index()]
}

fn gait_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\bgait\b(?:\s*type)?[\s*:=\-]*([A-Za-z]+)").expect("valid regex")
    })
}

/// Numeric parameters parsed from free text, clamped into the global ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericParams {
    pub params: BehaviorParams,
    /// One entry per clamped value.
    pub warnings: Vec<String>,
}

/// Reads `label: number` pairs for the five continuous parameters and a gait name.
pub fn parse_numeric_params(text: &str) -> Result<NumericParams, ParseError> {
    let values = parse_numeric_values(text)?;
    let mut warnings = Vec::new();
    let mut clamped = [0.0; 5];
    for p in Param::ALL {
        let v = values[p.index()];
        let c = p.clamp(v);
        if c != v {
            let msg = format!("{p} = {v} clamped to {c}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        clamped[p.index()] = c;
    }
    let gait_word = gait_re()
        .captures(text)
        .map(|c| c[1].to_string())
        .ok_or_else(|| ParseError::MissingParam("gait".into()))?;
    let gait = gait_word
        .parse::<Gait>()
        .map_err(|_| ParseError::InvalidGait(gait_word.clone()))?;
    Ok(NumericParams {
        params: BehaviorParams::from_values(clamped, gait),
        warnings,
    })
}

/// Raw (unclamped) values of the five continuous parameters; no gait needed.
pub fn parse_numeric_values(text: &str) -> Result<[f64; 5], ParseError> {
    let mut out = [0.0; 5];
    for p in Param::ALL {
        let v: f64 = param_re(p)
            .captures(text)
            .and_then(|c| c[1].parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ParseError::MissingParam(p.label().to_string()))?;
        out[p.index()] = v;
    }
    Ok(out)
}

/// Finds the first balanced `open`..`close` span, honouring JSON string
/// literals and escapes. Only the first few candidate openings are tried.
pub fn extract_balanced(text: &str, open: char, close: char) -> Option<&str> {
    const MAX_STARTS: usize = 16;
    let bytes = text.as_bytes();
    let (open, close) = (open as u8, close as u8);
    let starts = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == open)
        .map(|(i, _)| i)
        .take(MAX_STARTS);
    for start in starts {
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_str = false;
                }
            } else if b == b'"' {
                in_str = true;
            } else if b == open {
                depth += 1;
            } else if b == close {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
        }
    }
    None
}

/// Per-category cost domain accepted from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Costs must be exactly 0 or 1.
    #[default]
    Binary,
    /// Any cost in [0, 1].
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainCost {
    #[serde(rename = "type")]
    pub category: String,
    pub cost: f64,
    pub gait: u8,
}

/// Target, obstacles and per-terrain costs for one navigation instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostAssignment {
    pub target_object: String,
    pub obstacles: Vec<String>,
    pub terrain: Vec<TerrainCost>,
}

/// Parses the first JSON object in `text` and validates the cost schema,
/// collecting every violation.
pub fn parse_cost_json(text: &str, mode: CostMode) -> Result<CostAssignment, ParseError> {
    let raw = extract_balanced(text, '{', '}').ok_or(ParseError::NoJson("object"))?;
    let value: Value = serde_json::from_str(raw).map_err(|e| ParseError::Json(e.to_string()))?;
    let obj = value.as_object().ok_or(ParseError::NoJson("object"))?;
    let mut issues = Vec::new();

    let target_object = match obj.get("target_object") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(_) => {
            issues.push("target_object must be a non-empty string".to_string());
            String::new()
        }
        None => {
            issues.push("missing key target_object".to_string());
            String::new()
        }
    };

    let mut obstacles = Vec::new();
    match obj.get("obstacles") {
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match item.as_str() {
                    Some(s) if !s.trim().is_empty() => obstacles.push(s.trim().to_string()),
                    _ => issues.push(format!("obstacles[{i}] must be a non-empty string")),
                }
            }
        }
        Some(_) => issues.push("obstacles must be an array".to_string()),
        None => issues.push("missing key obstacles".to_string()),
    }

    let mut terrain = Vec::new();
    match obj.get("terrain") {
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                match parse_terrain_entry(i, item, mode) {
                    Ok(t) => terrain.push(t),
                    Err(mut errs) => issues.append(&mut errs),
                }
            }
        }
        Some(_) => issues.push("terrain must be an array".to_string()),
        None => issues.push("missing key terrain".to_string()),
    }

    if issues.is_empty() {
        Ok(CostAssignment {
            target_object,
            obstacles,
            terrain,
        })
    } else {
        Err(ParseError::Schema(issues))
    }
}

fn parse_terrain_entry(i: usize, item: &Value, mode: CostMode) -> Result<TerrainCost, Vec<String>> {
    let Some(obj) = item.as_object() else {
        return Err(vec![format!("terrain[{i}] must be an object")]);
    };
    let mut issues = Vec::new();
    let category = match obj.get("type").and_then(Value::as_str) {
        Some(s) if !s.trim().is_empty() => s.trim().to_string(),
        Some(_) => {
            issues.push(format!("terrain[{i}].type must be a non-empty string"));
            String::new()
        }
        None => {
            issues.push(format!("terrain[{i}]: missing or non-string type"));
            String::new()
        }
    };
    let cost = match obj.get("cost").map(|v| (v, v.as_f64())) {
        None => {
            issues.push(format!("terrain[{i}] ({category}): missing cost"));
            0.0
        }
        Some((v, None)) => {
            issues.push(format!("terrain[{i}] ({category}): cost {v} is not a number"));
            0.0
        }
        Some((_, Some(c))) => {
            let ok = match mode {
                CostMode::Binary => c == 0.0 || c == 1.0,
                CostMode::Continuous => (0.0..=1.0).contains(&c),
            };
            if !ok {
                let domain = match mode {
                    CostMode::Binary => "{0, 1}",
                    CostMode::Continuous => "[0, 1]",
                };
                issues.push(format!("terrain[{i}] ({category}): cost {c} outside {domain}"));
            }
            c
        }
    };
    let gait = match obj.get("gait").map(|v| (v, v.as_f64())) {
        None => {
            issues.push(format!("terrain[{i}] ({category}): missing gait"));
            0
        }
        Some((_, Some(g))) if g == 0.0 || g == 1.0 => g as u8,
        Some((v, _)) => {
            issues.push(format!("terrain[{i}] ({category}): gait {v} must be 0 or 1"));
            0
        }
    };
    if issues.is_empty() {
        Ok(TerrainCost {
            category,
            cost,
            gait,
        })
    } else {
        Err(issues)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_insensitive_levels() {
        let text = "A1: LOW.\nA2: high\nA3: Very High.\nA4: neutral\nA5: low\nA6: Pacing.";
        let a = parse_levels(text).unwrap();
        assert_eq!(a.level(Param::BodyHeight), Level::Low);
        assert_eq!(a.level(Param::SwingHeight), Level::VeryHigh);
        assert_eq!(a.level(Param::BodyPitch), Level::Medium);
        assert_eq!(a.gait, Gait::Pacing);
    }

    #[test]
    fn missing_answer_is_named() {
        let text = "A1: Low.\nA2: High.\nA3: High.\nA5: Medium.\nA6: Trotting.";
        assert_eq!(parse_levels(text), Err(ParseError::MissingAnswer("A4".into())));
        let bad = "A1: Low.\nA2: High.\nA3: High.\nA4: high\nA5: Medium.\nA6: Trotting.";
        assert!(matches!(parse_levels(bad), Err(ParseError::InvalidAnswer { index, .. }) if index == "A4"));
    }

    #[test]
    fn numeric_fixture() {
        let text = "body height: 0.25, stepping frequency: 3.0, foot swing height: 0.12, body pitch: 0.1, foot stance width: 0.25, gait: trotting";
        let p = parse_numeric_params(text).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(
            p.params,
            BehaviorParams {
                body_height: 0.25,
                step_frequency: 3.0,
                body_pitch: 0.1,
                stance_width: 0.25,
                swing_height: 0.12,
                gait: Gait::Trotting
            }
        );
    }

    #[test]
    fn numeric_clamps_and_signs() {
        let text = "Body Height (m): 9.9\nStepping frequency: 2\nFoot swing height: .05\nBody pitch: -0.2 rad\nFoot stance width = 0.3\nGait: trot";
        let p = parse_numeric_params(text).unwrap();
        assert_eq!(p.params.body_height, 0.45);
        assert_eq!(p.params.body_pitch, -0.2);
        assert_eq!(p.params.swing_height, 0.05);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn numeric_errors() {
        let text = "body height: 0.25, stepping frequency: 3.0, foot swing height: 0.12, body pitch: 0.1, foot stance width: 0.25, gait: galloping";
        assert_eq!(
            parse_numeric_params(text),
            Err(ParseError::InvalidGait("galloping".into()))
        );
        let text = "body height: 0.25, foot swing height: 0.12, body pitch: 0.1, foot stance width: 0.25, gait: trotting";
        assert_eq!(
            parse_numeric_params(text),
            Err(ParseError::MissingParam("stepping frequency".into()))
        );
    }

    #[test]
    fn cost_json_wrapped_in_prose() {
        let text = "Sure! Here is the plan:\n```json\n{\"target_object\": \"chair {wooden}\", \"obstacles\": [], \"terrain\": [{\"type\": \"rug\", \"cost\": 0, \"gait\": 0}]}\n```\nLet me know.";
        let c = parse_cost_json(text, CostMode::Binary).unwrap();
        assert_eq!(c.target_object, "chair {wooden}");
        assert_eq!(c.terrain[0].category, "rug");
    }

    #[test]
    fn cost_schema_errors_are_itemized() {
        let text = r#"{"target_object": "x", "obstacles": ["a", 3], "terrain": [{"type": "rug", "cost": 2, "gait": 0}, {"type": "mat", "cost": 0}]}"#;
        match parse_cost_json(text, CostMode::Binary) {
            Err(ParseError::Schema(issues)) => {
                assert_eq!(issues.len(), 3, "{issues:?}");
                assert!(issues.iter().any(|i| i.contains("obstacles[1]")));
                assert!(issues.iter().any(|i| i.contains("terrain[0] (rug): cost 2")));
                assert!(issues.iter().any(|i| i.contains("terrain[1] (mat): missing gait")));
            }
            other => panic!("unexpected {other:?}"),
        }
        let cont = r#"{"target_object": "x", "obstacles": [], "terrain": [{"type": "rug", "cost": 0.4, "gait": 1}]}"#;
        assert!(parse_cost_json(cont, CostMode::Binary).is_err());
        assert_eq!(parse_cost_json(cont, CostMode::Continuous).unwrap().terrain[0].cost, 0.4);
    }

    #[test]
    fn balanced_scan() {
        assert_eq!(extract_balanced("a {\"b\": \"}\"} c", '{', '}'), Some("{\"b\": \"}\"}"));
        assert_eq!(extract_balanced("x [1, [2]] y", '[', ']'), Some("[1, [2]]"));
        assert_eq!(extract_balanced("{ unterminated", '{', '}'), None);
        assert_eq!(extract_balanced("{ open {\"a\": 1}", '{', '}'), Some("{\"a\": 1}"));
        assert_eq!(extract_balanced("no braces", '{', '}'), None);
    }

    proptest! {
        #[test]
        fn parsers_never_panic(s in "\\PC{0,200}") {
            let _ = parse_levels(&s);
            let _ = parse_numeric_params(&s);
            let _ = parse_cost_json(&s, CostMode::Binary);
            let _ = extract_balanced(&s, '[', ']');
        }

        #[test]
        fn level_answers_roundtrip(levels in prop::array::uniform5(0usize..5), g in 0usize..4) {
            let mut text = String::new();
            for p in Param::ALL {
                let l = Level::from_ordinal(levels[p.index()]).unwrap();
                text.push_str(&format!("A{}: {}.\n", p.index() + 1, l.name_for(p).replace('_', " ")));
            }
            text.push_str(&format!("A6: {}.\n", Gait::ALL[g]));
            let a = parse_levels(&text).unwrap();
            prop_assert_eq!(a.levels.map(|l| l.ordinal()), levels);
            prop_assert_eq!(a.gait, Gait::ALL[g]);
        }
    }
}
