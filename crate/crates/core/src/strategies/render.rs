use serde::{Deserialize, Serialize};

use super::templates::{fill, Templates};
use super::{
    Direction, PromptBundle, PromptMeta, SectionName, StrategyConfig, StrategyError, StrategyName, SyntaxProfile,
    TaskKind,
};
use crate::annotations::AnnotatedSentence;
use crate::cipher::MaterialBundle;
use crate::lexicon::{LexMatch, Lexicon, LookupParams};
use crate::retrieval::Exemplar;
use crate::scripts::Registry;
use crate::text::split_affixes;

/// Display names used in the prompt text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageNames {
    /// Name of the input language as the model is told it.
    pub source: String,
    pub target: String,
    pub cl_name: String,
    pub family: String,
}

/// Materials already selected for one input.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptMaterials<'a> {
    pub exemplars: &'a [Exemplar],
    pub word_meanings: &'a [LexMatch],
    pub glossary: &'a [(String, String)],
    pub morph: Option<&'a AnnotatedSentence>,
    pub profile: Option<&'a SyntaxProfile>,
    pub paradigms: Option<&'a str>,
}

fn exemplar_section(t: &Templates, exemplars: &[Exemplar]) -> Result<String, StrategyError> {
    if exemplars.is_empty() {
        return Err(StrategyError::MissingMaterial(SectionName::Exemplars.as_str().into()));
    }
    let mut parts = vec![t.mt.exemplars_intro.clone()];
    for (i, ex) in exemplars.iter().enumerate() {
        let n = (i + 1).to_string();
        parts.push(fill(&t.mt.exemplar, &[("n", &n), ("source", &ex.source), ("target", &ex.target)])?);
    }
    Ok(parts.join("\n\n"))
}

fn word_meaning_section(
    t: &Templates,
    matches: &[LexMatch],
    glossary: &[(String, String)],
) -> Result<String, StrategyError> {
    let mut lines: Vec<String> = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for m in matches {
        if seen.contains(&m.matched_key.as_str()) || m.targets.is_empty() {
            continue;
        }
        seen.push(&m.matched_key);
        lines.push(fill(&t.mt.word_meaning, &[("word", &m.matched_key), ("targets", &m.targets.join(","))])?);
    }
    for (entity, out) in glossary {
        lines.push(fill(&t.mt.word_meaning, &[("word", entity), ("targets", out)])?);
    }
    let mut text = t.mt.word_meanings_intro.clone();
    if !lines.is_empty() {
        text.push_str("\n\n");
        text.push_str(&lines.join("\n"));
    }
    Ok(text)
}

fn morphology_section(t: &Templates, morph: Option<&AnnotatedSentence>) -> Result<String, StrategyError> {
    let morph = morph.ok_or_else(|| StrategyError::MissingMaterial(SectionName::Morphology.as_str().into()))?;
    let mut lines = vec![t.mt.morphology_intro.clone(), String::new()];
    let mut body = Vec::new();
    for tok in morph.tokens.iter().filter(|tok| tok.surface.chars().any(char::is_alphanumeric)) {
        body.push(fill(
            &t.mt.morphology_line,
            &[("surface", &tok.surface), ("upos", &tok.upos), ("lemma", &tok.lemma), ("feats", &tok.feats_string())],
        )?);
    }
    lines.push(body.join("\n"));
    Ok(lines.join("\n").trim_end().to_string())
}

/// Sections after the input preview and before the final block, as the
/// config's toggles select them.
fn material_sections(
    cfg: &StrategyConfig,
    t: &Templates,
    names: &LanguageNames,
    m: &PromptMaterials<'_>,
) -> Result<Vec<(SectionName, String)>, StrategyError> {
    let mut sections = Vec::new();
    if cfg.use_exemplars {
        sections.push((SectionName::Exemplars, exemplar_section(t, m.exemplars)?));
    }
    if cfg.use_lexicon {
        sections.push((SectionName::WordMeanings, word_meaning_section(t, m.word_meanings, m.glossary)?));
    }
    if cfg.use_morph {
        sections.push((SectionName::Morphology, morphology_section(t, m.morph)?));
    }
    if cfg.use_syntax {
        let profile = m.profile.ok_or_else(|| StrategyError::MissingMaterial(SectionName::Syntax.as_str().into()))?;
        let intro = fill(&t.mt.syntax_intro, &[("cl_name", &names.cl_name)])?;
        sections.push((SectionName::Syntax, format!("{intro}\n\n{}", profile.render(&names.cl_name))));
    }
    if cfg.use_inflection {
        let doc = m.paradigms.ok_or_else(|| StrategyError::MissingMaterial(SectionName::Inflection.as_str().into()))?;
        let intro = fill(&t.mt.inflection_intro, &[("cl_name", &names.cl_name)])?;
        sections.push((SectionName::Inflection, format!("{intro}\n\n{}", doc.trim_end())));
    }
    Ok(sections)
}

/// Renders a translation prompt. Sections always appear in the canonical
/// order; only those the config enables are present.
pub fn render_prompt(
    cfg: &StrategyConfig,
    t: &Templates,
    names: &LanguageNames,
    input: &str,
    materials: &PromptMaterials<'_>,
    meta: PromptMeta,
) -> Result<PromptBundle, StrategyError> {
    let instruction = fill(&t.mt.instruction, &[("source", &names.source), ("target", &names.target)])?;
    let plain_final = || fill(&t.mt.plain_final, &[("input", input)]);
    let sections = match cfg.name {
        StrategyName::LStr => {
            return Err(StrategyError::InvalidConfig("L-str translates without a prompt".into()));
        }
        StrategyName::Topline => vec![(SectionName::Header, instruction), (SectionName::Final, plain_final()?)],
        StrategyName::OnlyInput => {
            let intro = fill(&t.mt.intro, &[("cl_name", &names.cl_name), ("family", &names.family)])?;
            vec![(SectionName::Header, format!("{intro}\n\n{instruction}")), (SectionName::Final, plain_final()?)]
        }
        _ => {
            let intro = fill(&t.mt.intro, &[("cl_name", &names.cl_name), ("family", &names.family)])?;
            let mut s = vec![
                (SectionName::Header, format!("{intro}\n\n{instruction}")),
                (SectionName::InputPreview, fill(&t.mt.input, &[("input", input)])?),
            ];
            s.extend(material_sections(cfg, t, names, materials)?);
            s.push((SectionName::Final, fill(&t.mt.final_block, &[("input", input)])?));
            s
        }
    };
    Ok(PromptBundle::assemble(cfg.name, input, sections, meta))
}

/// Renders a task prompt. `item_text` is the item as laid out by
/// [`super::TaskItem::render`]; `names.source` is the language it is written in.
pub fn render_task_prompt(
    cfg: &StrategyConfig,
    t: &Templates,
    names: &LanguageNames,
    task: TaskKind,
    item_text: &str,
    materials: &PromptMaterials<'_>,
    meta: PromptMeta,
) -> Result<PromptBundle, StrategyError> {
    let template = match task {
        TaskKind::Mmlu => &t.task.mmlu,
        TaskKind::Nli => &t.task.nli,
        TaskKind::Storycloze => &t.task.storycloze,
    };
    let header = fill(template, &[("language", &names.source)])?;
    let bare = !cfg.use_lexicon || cfg.name == StrategyName::LStr;
    let sections = if bare {
        vec![(SectionName::Header, header), (SectionName::Final, fill(&t.mt.plain_final, &[("input", item_text)])?)]
    } else {
        let mut s = vec![
            (SectionName::Header, header),
            (SectionName::InputPreview, fill(&t.mt.input, &[("input", item_text)])?),
        ];
        s.extend(material_sections(cfg, t, names, materials)?);
        s.push((SectionName::Final, fill(&t.mt.final_block, &[("input", item_text)])?));
        s
    };
    Ok(PromptBundle::assemble(cfg.name, item_text, sections, meta))
}

/// One output token per whitespace token of `input`: the first target of the
/// closest lexicon match, with surrounding punctuation kept; tokens without a
/// match (or without letters) are copied.
pub fn word_for_word_tokens(lexicon: &Lexicon, input: &str, params: &LookupParams) -> Vec<String> {
    let params = LookupParams { k: 1, ..*params };
    input
        .split_whitespace()
        .map(|token| {
            let (pre, core, post) = split_affixes(token);
            if !core.chars().any(char::is_alphabetic) {
                return token.to_string();
            }
            match lexicon.lookup(core, &params).first().and_then(|m| m.targets.first()) {
                Some(target) => format!("{pre}{target}{post}"),
                None => token.to_string(),
            }
        })
        .collect()
}

/// The non-model baseline: [`word_for_word_tokens`] joined with single spaces.
pub fn word_for_word(lexicon: &Lexicon, input: &str) -> String {
    word_for_word_tokens(lexicon, input, &LookupParams::default()).join(" ")
}

/// Two-stage cascade through a related language: a plain translation request
/// from English, then a prompt whose input is that translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotPlan {
    pub pivot_language: String,
    pub stage1_prompt: String,
    pub stage2: StrategyConfig,
}

pub fn pivot_plan(
    cfg: &StrategyConfig,
    t: &Templates,
    bundle: &MaterialBundle,
    english_input: &str,
) -> Result<PivotPlan, StrategyError> {
    if cfg.name != StrategyName::CLcovELemMS || cfg.direction != Direction::FromEnglish {
        return Err(StrategyError::InvalidConfig(format!("{} is not the pivot cascade", cfg.name)));
    }
    let pivot = cfg
        .pivot_language
        .clone()
        .ok_or_else(|| StrategyError::InvalidConfig("pivot cascade needs a pivot language".into()))?;
    match &bundle.pivot_oracle {
        Some(o) if o.lexicon().source_lang() == pivot => {}
        _ => return Err(StrategyError::MissingMaterial(format!("{pivot} word meanings"))),
    }
    let pivot_name = Registry::builtin().language(&pivot).map(|l| l.name.clone()).unwrap_or_else(|_| pivot.clone());
    let instruction = fill(&t.mt.instruction, &[("source", "English"), ("target", &pivot_name)])?;
    let stage1_prompt = format!("{instruction}\n\n{}", fill(&t.mt.plain_final, &[("input", english_input)])?);
    Ok(PivotPlan { pivot_language: pivot, stage1_prompt, stage2: cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::parse_conllu_str;

    fn names() -> LanguageNames {
        LanguageNames {
            source: "Serra".into(),
            target: "English".into(),
            cl_name: "Serra".into(),
            family: "Romance".into(),
        }
    }

    fn meta() -> PromptMeta {
        PromptMeta { sample_id: "t1".into(), source_lang: "spa".into(), target_lang: "eng".into(), cl_name: "Serra".into() }
    }

    fn cfg(name: StrategyName) -> StrategyConfig {
        StrategyConfig::preset(name, Direction::ToEnglish)
    }

    #[test]
    fn word_for_word_examples() {
        let lex = Lexicon::from_pairs("spa", "eng", [("perro", "dog"), ("come", "eats")]);
        assert_eq!(word_for_word(&lex, "perro come"), "dog eats");
        assert_eq!(word_for_word(&lex, "perro zzz"), "dog zzz");
        assert_eq!(word_for_word(&lex, "¡Perro, come!"), "¡dog, eats!");
        assert_eq!(word_for_word(&lex, "  perro   12 "), "dog 12");
    }

    #[test]
    fn only_input_has_header_and_input() {
        let t = Templates::builtin();
        let p = render_prompt(&cfg(StrategyName::OnlyInput), &t, &names(), "Okjí", &PromptMaterials::default(), meta()).unwrap();
        assert_eq!(p.section_names(), vec![SectionName::Header, SectionName::Final]);
        assert!(p.full_prompt.starts_with("Serra is a newly discovered Romance language."));
        assert!(p.full_prompt.ends_with("Input:\n\nOkjí\n\nOutput:"));
    }

    #[test]
    fn word_meaning_lines_use_capped_targets() {
        let t = Templates::builtin();
        let matches = vec![LexMatch {
            source_query: "ñi".into(),
            matched_key: "ñi".into(),
            distance: 0.0,
            targets: vec!["my".into(), "e".into()],
            via_lemma: false,
        }];
        let m = PromptMaterials { word_meanings: &matches, ..Default::default() };
        let p = render_prompt(&cfg(StrategyName::L), &t, &names(), "ñi", &m, meta()).unwrap();
        assert!(p.section(SectionName::WordMeanings).unwrap().ends_with("\n\nñi - my,e"));
    }

    #[test]
    fn syntax_section_opens_with_family_line() {
        let t = Templates::builtin();
        let profile = SyntaxProfile::from_toml(include_str!("../../fixtures/profiles/spa.toml")).unwrap();
        let morph = parse_conllu_str("1\tñi\tñi\tDET\t_\t_\t0\troot\t_\t_\n").unwrap().remove(0);
        let ex = vec![Exemplar { id: "p1".into(), source: "a".into(), target: "b".into(), domain: None }];
        let m = PromptMaterials { exemplars: &ex, morph: Some(&morph), profile: Some(&profile), ..Default::default() };
        let p = render_prompt(&cfg(StrategyName::LELemMS), &t, &names(), "ñi", &m, meta()).unwrap();
        let syntax = p.section(SectionName::Syntax).unwrap();
        assert!(syntax.starts_with("Here is a general description of the syntax of the language Serra:\n\nSerra is a Romance language."));
        assert!(p.section(SectionName::Morphology).unwrap().ends_with("ñi: POS: DET, Lemma: ñi, Features: -"));
    }

    #[test]
    fn missing_material_names_the_section() {
        let t = Templates::builtin();
        let err = render_prompt(&cfg(StrategyName::LE), &t, &names(), "x", &PromptMaterials::default(), meta());
        assert!(matches!(err, Err(StrategyError::MissingMaterial(s)) if s == "exemplars"));
    }

    #[test]
    fn task_prompts() {
        let t = Templates::builtin();
        let ex = vec![Exemplar { id: "p1".into(), source: "a".into(), target: "0".into(), domain: None }];
        let m = PromptMaterials { exemplars: &ex, ..Default::default() };
        let nli = render_task_prompt(&cfg(StrategyName::TaskDirect), &t, &names(), TaskKind::Nli, "Premise: x\nHypothesis: y", &m, meta()).unwrap();
        assert!(nli.full_prompt.contains("For entailment return `0`; for neutral return `1`; for contradiction return `2`."));
        let top = render_task_prompt(&cfg(StrategyName::Topline), &t, &names(), TaskKind::Storycloze, "s\n0. a\n1. b", &m, meta()).unwrap();
        assert!(top.full_prompt.contains("two possible continuations"));
        assert!(top.section(SectionName::WordMeanings).is_none());
    }

    #[test]
    fn pivot_plan_targets_the_pivot() {
        let t = Templates::builtin();
        let mut bundle = MaterialBundle::new("spa");
        let c = cfg(StrategyName::CLcovELemMS);
        assert!(pivot_plan(&c, &t, &bundle, "x").is_err());
        let c = StrategyConfig::preset(StrategyName::CLcovELemMS, Direction::FromEnglish).with_pivot("fra");
        assert!(matches!(pivot_plan(&c, &t, &bundle, "x"), Err(StrategyError::MissingMaterial(_))));
        bundle.pivot_oracle = Some(crate::lexicon::OracleStore::new(Lexicon::from_pairs("fra", "spa", [("mon", "mi")])));
        let plan = pivot_plan(&c, &t, &bundle, "My brother").unwrap();
        assert_eq!(plan.pivot_language, "fra");
        assert!(plan.stage1_prompt.starts_with("Translate the following text from English to French."));
        let unset = StrategyConfig { pivot_language: None, ..c };
        assert!(pivot_plan(&unset, &t, &bundle, "x").is_err());
    }
}
