//! Prompt templates shipped as text assets.
//!
//! Placeholders are `{name}` tokens replaced verbatim; any other braces in a
//! template (the JSON example in the cost prompt) are left alone.

pub const AUTO: &str = include_str!("../../assets/prompts/auto.txt");
pub const AUTO_PRIOR: &str = include_str!("../../assets/prompts/auto_prior.txt");
pub const LSS_LOCATION: &str = include_str!("../../assets/prompts/lss_location.txt");
pub const LSS_DETERMINING: &str = include_str!("../../assets/prompts/lss_determining.txt");
pub const COST_MAP: &str = include_str!("../../assets/prompts/cost_map.txt");
pub const DECOMPOSE: &str = include_str!("../../assets/prompts/decompose.txt");
pub const EVALUATE: &str = include_str!("../../assets/prompts/evaluate.txt");

/// Template ids used as transcript keys.
pub mod ids {
    pub const AUTO: &str = "auto";
    pub const AUTO_PRIOR: &str = "auto_prior";
    pub const LSS_LOCATION: &str = "lss_location";
    pub const LSS_DETERMINING: &str = "lss_determining";
    pub const COST_MAP: &str = "cost_map";
    pub const DECOMPOSE: &str = "decompose";
    pub const EVALUATE: &str = "evaluate";
}

/// Substitutes each `{key}` in `template`.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// Appends a correction note after a response failed to parse.
pub fn reprompt(original: &str, problem: &str) -> String {
    format!(
        "{original}\n\n# Correction\nYour previous answer could not be used: {problem}\nAnswer again, following the required format exactly.\n"
    )
}

/// `template/scope` transcript key.
pub fn scoped(id: &str, scope: &str) -> String {
    if scope.is_empty() {
        id.to_string()
    } else {
        format!("{id}/{scope}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_present() {
        for t in [AUTO, AUTO_PRIOR, LSS_LOCATION, LSS_DETERMINING] {
            assert!(t.contains("{terrain_description}"));
        }
        assert!(COST_MAP.contains("{instruction}"));
        assert!(DECOMPOSE.contains("{skills}") && DECOMPOSE.contains("{instruction}"));
    }

    #[test]
    fn render_keeps_json_braces() {
        let out = render(COST_MAP, &[("instruction", "Go to the chair"), ("categories", "chair")]);
        assert!(out.contains("Instruction: Go to the chair"));
        assert!(out.contains("\"target_object\": \"red cabinet\""));
        assert!(!out.contains("{instruction}"));
    }

    #[test]
    fn prior_prompt_extends_auto() {
        assert!(AUTO_PRIOR.len() > AUTO.len());
        assert!(AUTO_PRIOR.starts_with("# Task Description"));
        assert!(AUTO_PRIOR.contains("You should give an exact number"));
        assert!(AUTO_PRIOR.contains("lower its center of gravity"));
    }
}
