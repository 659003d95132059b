//! Decipher-then-translate check: the usual translation prompt is wrapped in
//! explicit step-by-step decipherment instructions, and the model's attempt
//! is scored against the plain source it never saw.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cipher::CipherMap;
use crate::gateway::{parallel_map, Gateway};
use crate::metrics::{bleu, chrf};
use crate::retrieval::Exemplar;
use crate::strategies::{Assembler, PromptBundle, SectionName, StrategyConfig, StrategyError, Templates};
use crate::text::word_spans;

/// Shortest letter run that counts as a leak of the plain source.
pub const LEAK_WINDOW: usize = 5;

const LABELS: [&str; 4] = ["language", "method", "deciphered", "translation"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeAnswer {
    pub language: Option<String>,
    pub method: Option<String>,
    pub deciphered: Option<String>,
    pub translation: Option<String>,
}

impl ProbeAnswer {
    pub fn missing(&self) -> Vec<&'static str> {
        let fields = [&self.language, &self.method, &self.deciphered, &self.translation];
        LABELS.iter().zip(fields).filter(|(_, v)| v.is_none()).map(|(l, _)| *l).collect()
    }
}

/// Recognizes `Language:`, `**Method:**`, `3. Deciphered:` and the like.
fn label_of(line: &str) -> Option<(usize, &str)> {
    let stripped = line.trim_start_matches(|c: char| c.is_whitespace() || "#*->.".contains(c) || c.is_ascii_digit());
    let (head, rest) = stripped.split_once(':')?;
    let head = head.trim().trim_matches('*').trim().to_ascii_lowercase();
    let idx = LABELS.iter().position(|l| *l == head)?;
    Some((idx, rest.trim_start_matches('*').trim()))
}

fn strip_fences(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n").trim().to_string()
}

/// Contents of the last ```-fenced block, if any.
pub fn last_fenced_block(text: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(lines) => blocks.push(lines.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(lines) = current.as_mut() {
            lines.push(line);
        }
    }
    blocks.pop().map(|b| b.trim().to_string())
}

/// Labeled-section extraction. A label's value runs until the next label.
pub fn parse_probe_answer(response: &str) -> ProbeAnswer {
    let mut values: [Option<Vec<&str>>; 4] = Default::default();
    let mut current: Option<usize> = None;
    for line in response.lines() {
        if let Some((idx, rest)) = label_of(line) {
            let v = values[idx].get_or_insert_with(Vec::new);
            v.clear();
            if !rest.is_empty() {
                v.push(rest);
            }
            current = Some(idx);
        } else if let Some(idx) = current {
            values[idx].as_mut().expect("current label has a value").push(line);
        }
    }
    let [language, method, deciphered, translation] =
        values.map(|v| v.map(|lines| strip_fences(&lines.join("\n"))).filter(|s| !s.is_empty()));
    ProbeAnswer { language, method, deciphered, translation }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub sample_id: String,
    pub guessed_language: String,
    pub guessed_method: String,
    pub deciphered_hypothesis: String,
    pub decipher_bleu: f64,
    pub translation: String,
    pub translation_chrf: f64,
    /// Missing labels or the gateway error, when the answer was incomplete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_failure: Option<String>,
    pub leaks: Vec<String>,
    pub prompt_hash: String,
    pub prompt: String,
}

/// Wraps a translation prompt with the staged decipherment instruction.
pub fn probe_prompt(templates: &Templates, mt: &PromptBundle) -> String {
    format!("{}\n\n{}", templates.probe.instruction.trim_end(), mt.full_prompt)
}

/// Prompt text that is legitimately not in the ciphered language: authored
/// instructions, English sides of exemplars and word meanings, and
/// grammatical tags.
pub fn authored_text(templates: &Templates, mt: &PromptBundle) -> String {
    let mut out = vec![templates.probe.instruction.clone()];
    for (name, text) in &mt.sections {
        match name {
            SectionName::Header | SectionName::Syntax | SectionName::Inflection => out.push(text.clone()),
            SectionName::InputPreview | SectionName::Final => out.push(text.replace(&mt.input_text, " ")),
            SectionName::Exemplars => {
                out.extend(text.lines().filter(|l| !l.starts_with("Input")).map(str::to_string));
            }
            SectionName::WordMeanings => {
                out.extend(text.lines().map(|l| l.split_once(" - ").map_or(l, |(_, rhs)| rhs).to_string()));
            }
            SectionName::Morphology => {
                out.extend(text.lines().map(|l| match (l.find(": POS:"), l.find(", Lemma:"), l.find(", Features:")) {
                    (Some(p), Some(lem), Some(f)) => format!("{} {}", &l[p..lem], &l[f..]),
                    _ => l.to_string(),
                }));
            }
        }
    }
    out.join("\n")
}

/// Letter windows of the plain source that show up in the prompt. Windows
/// the cipher maps to themselves, and windows also found in `authored`,
/// are not leaks. Comparison is case-insensitive.
pub fn leak_scan(prompt: &str, plain_source: &str, map: &CipherMap, authored: &str) -> Vec<String> {
    let prompt = prompt.to_lowercase();
    let authored = authored.to_lowercase();
    let mut leaks = BTreeSet::new();
    for word in word_spans(plain_source) {
        let chars: Vec<char> = word.chars().collect();
        for w in chars.windows(LEAK_WINDOW) {
            let window: String = w.iter().collect();
            if map.apply(&window) == window {
                continue;
            }
            let lower = window.to_lowercase();
            if prompt.contains(&lower) && !authored.contains(&lower) {
                leaks.insert(lower);
            }
        }
    }
    leaks.into_iter().collect()
}

fn score(sample: &Exemplar, prompt: &str, hash: String, leaks: Vec<String>, response: Result<String, String>) -> ProbeResult {
    let (answer, failure, raw) = match response {
        Ok(text) => {
            let answer = parse_probe_answer(&text);
            let missing = answer.missing();
            let failure = (!missing.is_empty()).then(|| format!("missing {}", missing.join(", ")));
            (answer, failure, text)
        }
        Err(e) => (ProbeAnswer::default(), Some(e), String::new()),
    };
    let deciphered = answer.deciphered.unwrap_or_else(|| raw.trim().to_string());
    let translation = answer.translation.or_else(|| last_fenced_block(&raw)).unwrap_or_else(|| raw.trim().to_string());
    ProbeResult {
        sample_id: sample.id.clone(),
        guessed_language: answer.language.unwrap_or_default(),
        guessed_method: answer.method.unwrap_or_default(),
        decipher_bleu: bleu(&deciphered, &sample.source),
        deciphered_hypothesis: deciphered,
        translation_chrf: chrf(&translation, &sample.target),
        translation,
        parse_failure: failure,
        leaks,
        prompt_hash: hash,
        prompt: prompt.to_string(),
    }
}

/// Runs the probe over plain samples (source in the ciphered language,
/// English target). `cfg` picks the wrapped translation prompt and must
/// translate into English.
pub fn run_probe(
    assembler: &Assembler<'_>,
    templates: &Templates,
    cfg: &StrategyConfig,
    samples: &[Exemplar],
    gateway: &Gateway,
) -> Result<Vec<ProbeResult>, StrategyError> {
    if cfg.direction != crate::strategies::Direction::ToEnglish || !cfg.calls_model() {
        return Err(StrategyError::InvalidConfig("the probe wraps a model-based translation into English".into()));
    }
    let prompts = samples
        .iter()
        .map(|s| {
            let mt = assembler.mt_prompt(cfg, &s.id, &s.source)?;
            let prompt = probe_prompt(templates, &mt);
            let leaks = leak_scan(&prompt, &s.source, assembler.map(), &authored_text(templates, &mt));
            Ok((prompt, leaks))
        })
        .collect::<Result<Vec<_>, StrategyError>>()?;
    let jobs: Vec<(&Exemplar, &(String, Vec<String>))> = samples.iter().zip(&prompts).collect();
    Ok(parallel_map(&jobs, gateway.parallelism(), |(sample, (prompt, leaks))| {
        let response = gateway.complete_prompt(prompt).map(|r| r.response_text).map_err(|e| e.to_string());
        score(sample, prompt, crate::text::sha256_hex(prompt), leaks.clone(), response)
    }))
}

pub fn write_probe_report(results: &[ProbeResult], path: impl AsRef<Path>) -> std::io::Result<()> {
    let text: String = results.iter().map(|r| serde_json::to_string(r).expect("probe results serialize") + "\n").collect();
    std::fs::write(path, text)
}
