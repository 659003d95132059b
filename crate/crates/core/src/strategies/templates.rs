use std::path::Path;

use serde::Deserialize;

use super::StrategyError;

const BUILTIN: &str = include_str!("../../data/templates/prompts.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtTemplates {
    pub intro: String,
    pub instruction: String,
    pub input: String,
    pub exemplars_intro: String,
    pub exemplar: String,
    pub word_meanings_intro: String,
    pub word_meaning: String,
    pub morphology_intro: String,
    pub morphology_line: String,
    pub syntax_intro: String,
    pub inflection_intro: String,
    #[serde(rename = "final")]
    pub final_block: String,
    pub plain_final: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskTemplates {
    pub mmlu: String,
    pub nli: String,
    pub storycloze: String,
    pub option: String,
    pub premise: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeTemplates {
    pub instruction: String,
}

/// Prompt wording loaded from a versioned TOML file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Templates {
    pub version: u32,
    pub mt: MtTemplates,
    pub task: TaskTemplates,
    pub probe: ProbeTemplates,
}

impl Templates {
    pub fn builtin() -> Templates {
        Self::from_toml(BUILTIN).expect("shipped templates parse")
    }

    pub fn from_toml(text: &str) -> Result<Templates, StrategyError> {
        toml::from_str(text).map_err(|e| StrategyError::Template(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Templates, StrategyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| StrategyError::Template(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }
}

/// Replaces each `{slot}` with its value. Braces that do not enclose an
/// identifier are literal. A slot without a value is an error.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> Result<String, StrategyError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}');
        let name = close.map(|c| &after[..c]);
        match name {
            Some(name) if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                let value = slots
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| StrategyError::Template(format!("no value for slot `{{{name}}}`")))?;
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parses() {
        let t = Templates::builtin();
        assert_eq!(t.version, 1);
        assert!(t.mt.final_block.contains("Respond with **only** the output."));
        assert!(t.task.nli.contains("For entailment return `0`"));
    }

    #[test]
    fn slots_fill_and_missing_ones_fail() {
        assert_eq!(fill("{a} and {b}", &[("a", "x"), ("b", "y")]).unwrap(), "x and y");
        assert_eq!(fill("{ not a slot }", &[]).unwrap(), "{ not a slot }");
        assert!(fill("{missing}", &[]).is_err());
        // Values are not re-scanned.
        assert_eq!(fill("{a}", &[("a", "{b}")]).unwrap(), "{b}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = BUILTIN.to_string();
        text.push_str("\n[extra]\nx = \"y\"\n");
        assert!(Templates::from_toml(&text).is_err());
    }
}
