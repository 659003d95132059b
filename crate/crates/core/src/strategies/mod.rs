//! The strategy ladder, prompt rendering, and the word-for-word baseline.

mod assemble;
mod profile;
mod render;
mod task;
mod templates;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{Assembler, TaskPrompt};
pub use profile::{SyntaxProfile, WordOrder, WORD_ORDER_FEATURES};
pub use render::{
    pivot_plan, render_prompt, render_task_prompt, word_for_word, word_for_word_tokens, LanguageNames,
    PivotPlan, PromptMaterials,
};
pub use task::{TaskContent, TaskItem, TaskKind};
pub use templates::{fill, Templates};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("missing material for the {0} section")]
    MissingMaterial(String),
    #[error("invalid strategy config: {0}")]
    InvalidConfig(String),
    #[error("template: {0}")]
    Template(String),
    #[error("syntax profile: {0}")]
    Profile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyName {
    #[serde(rename = "topline")]
    Topline,
    #[serde(rename = "only-input")]
    OnlyInput,
    #[serde(rename = "L-str")]
    LStr,
    L,
    LE,
    LELem,
    LELemM,
    LELemMS,
    LELemMSI,
    #[serde(rename = "Lcov-ELemMS")]
    LcovELemMS,
    #[serde(rename = "CLcov-ELemMS")]
    CLcovELemMS,
    #[serde(rename = "task-direct")]
    TaskDirect,
    #[serde(rename = "task-cascade")]
    TaskCascade,
}

impl StrategyName {
    pub const ALL: [StrategyName; 13] = [
        StrategyName::Topline,
        StrategyName::OnlyInput,
        StrategyName::LStr,
        StrategyName::L,
        StrategyName::LE,
        StrategyName::LELem,
        StrategyName::LELemM,
        StrategyName::LELemMS,
        StrategyName::LELemMSI,
        StrategyName::LcovELemMS,
        StrategyName::CLcovELemMS,
        StrategyName::TaskDirect,
        StrategyName::TaskCascade,
    ];

    /// Strategies that render a translation prompt.
    pub const MT: [StrategyName; 11] = [
        StrategyName::Topline,
        StrategyName::OnlyInput,
        StrategyName::LStr,
        StrategyName::L,
        StrategyName::LE,
        StrategyName::LELem,
        StrategyName::LELemM,
        StrategyName::LELemMS,
        StrategyName::LELemMSI,
        StrategyName::LcovELemMS,
        StrategyName::CLcovELemMS,
    ];

    /// The incremental ladder, lowest first.
    pub const LADDER: [StrategyName; 6] = [
        StrategyName::L,
        StrategyName::LE,
        StrategyName::LELem,
        StrategyName::LELemM,
        StrategyName::LELemMS,
        StrategyName::LELemMSI,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Topline => "topline",
            StrategyName::OnlyInput => "only-input",
            StrategyName::LStr => "L-str",
            StrategyName::L => "L",
            StrategyName::LE => "LE",
            StrategyName::LELem => "LELem",
            StrategyName::LELemM => "LELemM",
            StrategyName::LELemMS => "LELemMS",
            StrategyName::LELemMSI => "LELemMSI",
            StrategyName::LcovELemMS => "Lcov-ELemMS",
            StrategyName::CLcovELemMS => "CLcov-ELemMS",
            StrategyName::TaskDirect => "task-direct",
            StrategyName::TaskCascade => "task-cascade",
        }
    }

    pub fn is_task(self) -> bool {
        matches!(self, StrategyName::TaskDirect | StrategyName::TaskCascade)
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrategyError::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Ciphered language into English.
    ToEnglish,
    /// English into the ciphered language.
    FromEnglish,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ToEnglish => "to-english",
            Direction::FromEnglish => "from-english",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "to-english" | "to_english" => Ok(Direction::ToEnglish),
            "from-english" | "from_english" => Ok(Direction::FromEnglish),
            _ => Err(StrategyError::InvalidConfig(format!("unknown direction `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconSource {
    Curated,
    Oracle,
}

/// A point on the ladder. `preset` gives the published settings; fields can be
/// adjusted afterwards and re-checked with `validate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: StrategyName,
    pub k: usize,
    pub e: usize,
    pub per_match_cap: usize,
    pub use_lexicon: bool,
    pub use_exemplars: bool,
    pub use_lemmas: bool,
    pub use_morph: bool,
    pub use_syntax: bool,
    pub use_inflection: bool,
    pub lexicon_source: LexiconSource,
    pub pivot_language: Option<String>,
    pub direction: Direction,
}

impl StrategyConfig {
    pub fn preset(name: StrategyName, direction: Direction) -> StrategyConfig {
        use StrategyName::*;
        let rung = match name {
            Topline | OnlyInput => 0,
            LStr | L => 1,
            LE | TaskDirect => 2,
            LELem => 3,
            LELemM => 4,
            LELemMS | LcovELemMS | CLcovELemMS | TaskCascade => 5,
            LELemMSI => 6,
        };
        StrategyConfig {
            name,
            k: 2,
            e: 3,
            per_match_cap: 2,
            use_lexicon: rung >= 1,
            use_exemplars: rung >= 2,
            use_lemmas: rung >= 3,
            use_morph: rung >= 4,
            use_syntax: rung >= 5,
            use_inflection: rung >= 6,
            lexicon_source: if matches!(name, LcovELemMS | CLcovELemMS) {
                LexiconSource::Oracle
            } else {
                LexiconSource::Curated
            },
            pivot_language: None,
            direction,
        }
    }

    pub fn with_pivot(mut self, language: &str) -> StrategyConfig {
        self.pivot_language = Some(language.to_string());
        self
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let bad = |m: &str| Err(StrategyError::InvalidConfig(format!("{}: {m}", self.name)));
        let chain = [
            (self.use_inflection, self.use_syntax, "inflection requires syntax"),
            (self.use_syntax, self.use_morph, "syntax requires morphology"),
            (self.use_morph, self.use_lemmas, "morphology requires lemmas"),
            (self.use_lemmas, self.use_exemplars, "lemmas require exemplars"),
            (self.use_exemplars, self.use_lexicon, "exemplars require a lexicon"),
        ];
        for (upper, lower, msg) in chain {
            if upper && !lower {
                return bad(msg);
            }
        }
        if (self.name == StrategyName::CLcovELemMS) != self.pivot_language.is_some() {
            return bad("a pivot language is set exactly when the strategy is CLcov-ELemMS");
        }
        if self.use_lexicon && (self.k == 0 || self.per_match_cap == 0) {
            return bad("k and per_match_cap must be at least 1");
        }
        if self.use_exemplars && self.e == 0 {
            return bad("e must be at least 1");
        }
        if self.name == StrategyName::CLcovELemMS && self.direction != Direction::FromEnglish {
            return bad("the pivot cascade translates from English");
        }
        Ok(())
    }

    /// Off-ladder baselines render without ciphered materials or skip the model.
    pub fn calls_model(&self) -> bool {
        self.name != StrategyName::LStr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionName {
    Header,
    InputPreview,
    Exemplars,
    WordMeanings,
    Morphology,
    Syntax,
    Inflection,
    Final,
}

impl SectionName {
    pub const ORDER: [SectionName; 8] = [
        SectionName::Header,
        SectionName::InputPreview,
        SectionName::Exemplars,
        SectionName::WordMeanings,
        SectionName::Morphology,
        SectionName::Syntax,
        SectionName::Inflection,
        SectionName::Final,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionName::Header => "header",
            SectionName::InputPreview => "input preview",
            SectionName::Exemplars => "exemplars",
            SectionName::WordMeanings => "word meanings",
            SectionName::Morphology => "morphology",
            SectionName::Syntax => "syntax",
            SectionName::Inflection => "inflection",
            SectionName::Final => "final",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMeta {
    pub sample_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub cl_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub strategy: StrategyName,
    pub input_text: String,
    pub sections: Vec<(SectionName, String)>,
    pub full_prompt: String,
    pub meta: PromptMeta,
}

impl PromptBundle {
    pub(crate) fn assemble(
        strategy: StrategyName,
        input_text: &str,
        sections: Vec<(SectionName, String)>,
        meta: PromptMeta,
    ) -> PromptBundle {
        debug_assert!(sections.windows(2).all(|w| w[0].0 < w[1].0));
        let full_prompt = sections.iter().map(|(_, s)| s.as_str()).collect::<Vec<_>>().join("\n\n");
        PromptBundle { strategy, input_text: input_text.to_string(), sections, full_prompt, meta }
    }

    pub fn section_names(&self) -> Vec<SectionName> {
        self.sections.iter().map(|(n, _)| *n).collect()
    }

    pub fn section(&self, name: SectionName) -> Option<&str> {
        self.sections.iter().find(|(n, _)| *n == name).map(|(_, s)| s.as_str())
    }

    pub fn hash(&self) -> String {
        crate::text::sha256_hex(&self.full_prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in StrategyName::ALL {
            assert_eq!(n.as_str().parse::<StrategyName>().unwrap(), n);
            let json = serde_json::to_string(&n).unwrap();
            assert_eq!(json, format!("\"{}\"", n.as_str()));
        }
        assert!("LXYZ".parse::<StrategyName>().is_err());
    }

    #[test]
    fn presets_are_valid_and_monotone() {
        for n in StrategyName::ALL {
            let mut cfg = StrategyConfig::preset(n, Direction::FromEnglish);
            if n == StrategyName::CLcovELemMS {
                cfg = cfg.with_pivot("fra");
            }
            cfg.validate().unwrap();
        }
        let cfg = StrategyConfig::preset(StrategyName::LELemM, Direction::ToEnglish);
        assert!(cfg.use_lemmas && cfg.use_exemplars && cfg.use_lexicon && !cfg.use_syntax);
    }

    #[test]
    fn non_monotone_toggles_rejected() {
        let mut cfg = StrategyConfig::preset(StrategyName::LE, Direction::ToEnglish);
        cfg.use_morph = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pivot_only_with_cascade() {
        let cfg = StrategyConfig::preset(StrategyName::LELemMS, Direction::ToEnglish).with_pivot("fra");
        assert!(cfg.validate().is_err());
        let cfg = StrategyConfig::preset(StrategyName::CLcovELemMS, Direction::FromEnglish);
        assert!(cfg.validate().is_err());
    }
}
