use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendKind, CompletionRequest, GatewayError};
use crate::lexicon::Lexicon;
use crate::strategies::word_for_word;
use crate::text::{split_affixes, word_spans};

/// The text after the last `Input:` label, up to a following
/// `Output:` label. Falls back to the whole prompt.
pub fn final_input_block(prompt: &str) -> &str {
    let start = prompt
        .match_indices("Input:")
        .filter(|(i, _)| *i == 0 || prompt[..*i].ends_with('\n'))
        .last()
        .map_or(0, |(i, m)| i + m.len());
    let rest = &prompt[start..];
    let end = rest.find("\nOutput:").unwrap_or(rest.len());
    rest[..end].trim()
}

pub type Responder = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Offline answer policies, applied to the prompt text.
#[derive(Clone)]
pub enum MockPolicy {
    /// Repeats the final input block.
    Echo,
    /// Capitalized words of the input block after its first word.
    CopyNamedEntities,
    Fixed(String),
    /// Word-for-word gloss of the input block.
    LexiconGloss(Arc<Lexicon>),
    Custom(Responder),
}

impl fmt::Debug for MockPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockPolicy::Echo => f.write_str("Echo"),
            MockPolicy::CopyNamedEntities => f.write_str("CopyNamedEntities"),
            MockPolicy::Fixed(s) => f.debug_tuple("Fixed").field(s).finish(),
            MockPolicy::LexiconGloss(_) => f.write_str("LexiconGloss"),
            MockPolicy::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl MockPolicy {
    pub fn custom(f: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        MockPolicy::Custom(Arc::new(f))
    }

    pub fn respond(&self, prompt: &str) -> String {
        match self {
            MockPolicy::Echo => final_input_block(prompt).to_string(),
            MockPolicy::CopyNamedEntities => {
                let block = final_input_block(prompt);
                word_spans(block)
                    .into_iter()
                    .skip(1)
                    .map(|w| split_affixes(w).1)
                    .filter(|w| w.chars().next().is_some_and(char::is_uppercase))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            MockPolicy::Fixed(s) => s.clone(),
            MockPolicy::LexiconGloss(lex) => word_for_word(lex, final_input_block(prompt)),
            MockPolicy::Custom(f) => f(prompt),
        }
    }
}

pub struct MockBackend {
    policy: MockPolicy,
}

impl MockBackend {
    pub fn new(policy: MockPolicy) -> Self {
        MockBackend { policy }
    }
}

impl Backend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        Ok(self.policy.respond(&request.prompt))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub cache_key: String,
    pub prompt: String,
    pub response: String,
}

/// Answers from a recorded transcript; anything unrecorded is a miss.
pub struct ReplayBackend {
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn new(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        ReplayBackend { responses: entries.into_iter().map(|e| (e.cache_key, e.response)).collect() }
    }

    pub fn parse(text: &str) -> Result<Self, GatewayError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| GatewayError::Config(format!("transcript line {}: {e}", i + 1)))?;
            entries.push(entry);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        self.responses.get(&request.cache_key).cloned().ok_or_else(|| GatewayError::ReplayMiss(request.cache_key.clone()))
    }
}

pub fn write_transcript(entries: &[TranscriptEntry], path: impl AsRef<Path>) -> std::io::Result<()> {
    let text: String =
        entries.iter().map(|e| serde_json::to_string(e).expect("transcript entries serialize") + "\n").collect();
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::super::{Gateway, Sampling};
    use super::*;

    #[test]
    fn echo_takes_the_last_input_block() {
        let prompt = "Intro\n\nInput1: a\n\nOutput1: b\n\nInput:\n\nqué tal\n\nOutput:";
        assert_eq!(MockPolicy::Echo.respond(prompt), "qué tal");
        assert_eq!(final_input_block("Input:\n\nx y"), "x y");
        assert_eq!(final_input_block("no label"), "no label");
    }

    #[test]
    fn named_entities_skip_the_first_word() {
        let prompt = "Input:\n\nYesterday Ana met Luis in Madrid.\n\nOutput:";
        assert_eq!(MockPolicy::CopyNamedEntities.respond(prompt), "Ana Luis Madrid");
    }

    #[test]
    fn replay_returns_recorded_text_verbatim_and_misses_otherwise() {
        let req = CompletionRequest::new("m", "p", Sampling::ProviderDefault);
        let entry = TranscriptEntry { cache_key: req.cache_key.clone(), prompt: "p".into(), response: " exact\n".into() };
        let text = serde_json::to_string(&entry).unwrap();
        let gw = Gateway::new(Box::new(ReplayBackend::parse(&text).unwrap()), "m");
        let rec = gw.complete(&req).unwrap();
        assert_eq!(rec.response_text, " exact\n");
        assert_eq!(rec.latency_ms, 0);
        assert_eq!(rec.backend, BackendKind::Replay);
        assert!(matches!(gw.complete_prompt("other"), Err(GatewayError::ReplayMiss(_))));
    }

    #[test]
    fn gloss_uses_the_lexicon() {
        let lex = Lexicon::from_pairs("spa", "eng", [("perro", "dog")]);
        let policy = MockPolicy::LexiconGloss(Arc::new(lex));
        assert_eq!(policy.respond("Input:\n\nperro\n\nOutput:"), "dog");
    }
}
