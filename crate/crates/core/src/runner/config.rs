use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::gateway::{
    Backend, Gateway, LiveBackend, MockBackend, MockPolicy, ReplayBackend, RetryPolicy, Sampling, DEFAULT_BASE_URL,
    DEFAULT_KEY_VAR,
};
use crate::lexicon::Lexicon;
use crate::strategies::{Direction, StrategyName, TaskKind};

/// Experiment description. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub language: String,
    pub seed: u64,
    /// Name the ciphered language is presented under; derived from the seed
    /// when absent.
    #[serde(default)]
    pub cl_name: Option<String>,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default)]
    pub strategies: Vec<StrategyName>,
    #[serde(default = "default_limit")]
    pub limit: usize,
    #[serde(default = "default_true")]
    pub balance_domains: bool,
    pub output_dir: PathBuf,
    pub data: DataPaths,
    #[serde(default)]
    pub strategy: StrategyOverrides,
    #[serde(default)]
    pub backend: BackendSettings,
    #[serde(default)]
    pub judge: Option<JudgeSettings>,
    #[serde(default)]
    pub task: Option<TaskSettings>,
    #[serde(default)]
    pub probe: Option<ProbeSettings>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_direction() -> Direction {
    Direction::ToEnglish
}

fn default_limit() -> usize {
    100
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// JSONL `{id, source, target, domain}`; `source` is in `language`,
    /// `target` in English.
    pub test_set: PathBuf,
    #[serde(default)]
    pub exemplars: Option<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub oracle: Option<PathBuf>,
    /// CoNLL-U files keyed by the language of their text.
    #[serde(default)]
    pub annotations: Vec<AnnotationPaths>,
    #[serde(default)]
    pub syntax_profile: Option<PathBuf>,
    #[serde(default)]
    pub paradigms: Option<PathBuf>,
    #[serde(default)]
    pub transliterations: Option<PathBuf>,
    #[serde(default)]
    pub pivot_language: Option<String>,
    /// Word translations from the pivot language into `language`.
    #[serde(default)]
    pub pivot_oracle: Option<PathBuf>,
    /// Parallel pivot/`language` examples.
    #[serde(default)]
    pub pivot_exemplars: Option<PathBuf>,
    /// Prompt wording; the built-in templates when absent.
    #[serde(default)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationPaths {
    pub language: String,
    pub conllu: PathBuf,
    /// Entity span sidecar for the same sentences.
    #[serde(default)]
    pub ne_spans: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyOverrides {
    pub k: Option<usize>,
    pub e: Option<usize>,
    pub per_match_cap: Option<usize>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKindSetting {
    Live,
    Replay,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockPolicySetting {
    Echo,
    Fixed,
    CopyEntities,
    /// Word-for-word gloss with the run's (ciphered) lexicon.
    Gloss,
    /// Answers task items with their gold label.
    GoldLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSettings {
    #[serde(default = "default_kind")]
    pub kind: BackendKindSetting,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub policy: Option<MockPolicySetting>,
    /// Reply for the `fixed` policy.
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub retry: Option<RetryPolicy>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    /// Response cache, relative to the output directory.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Writes every completion of the run as a replay transcript.
    #[serde(default)]
    pub record_transcript: Option<PathBuf>,
}

fn default_kind() -> BackendKindSetting {
    BackendKindSetting::Mock
}

fn default_model() -> String {
    "mock".into()
}

fn default_parallelism() -> usize {
    4
}

fn default_timeout() -> u64 {
    120
}

impl Default for BackendSettings {
    fn default() -> Self {
        BackendSettings {
            kind: default_kind(),
            model: default_model(),
            policy: Some(MockPolicySetting::Echo),
            text: None,
            transcript: None,
            base_url: None,
            api_key_env: None,
            parallelism: default_parallelism(),
            retry: None,
            timeout_secs: default_timeout(),
            temperature: None,
            max_tokens: None,
            cache: None,
            record_transcript: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSettings {
    /// Prompt with `{source_lang}`, `{target_lang}`, `{source}` and
    /// `{hypothesis}` slots; the reply is read as GEMBA-style MQM.
    pub prompt: PathBuf,
    #[serde(default)]
    pub backend: BackendSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSettings {
    pub kind: TaskKind,
    pub items: PathBuf,
    /// Labelled items used as exemplars.
    #[serde(default)]
    pub pool: Option<PathBuf>,
    #[serde(default = "default_task_strategies")]
    pub strategies: Vec<StrategyName>,
    /// Translation step of the cascade.
    #[serde(default = "default_cascade")]
    pub cascade_strategy: StrategyName,
    #[serde(default = "default_task_limit")]
    pub limit: usize,
}

fn default_task_strategies() -> Vec<StrategyName> {
    vec![StrategyName::TaskDirect, StrategyName::TaskCascade]
}

fn default_cascade() -> StrategyName {
    StrategyName::LELemMS
}

fn default_task_limit() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    #[serde(default = "default_probe_strategy")]
    pub strategy: StrategyName,
    #[serde(default)]
    pub limit: Option<usize>,
}

fn default_probe_strategy() -> StrategyName {
    StrategyName::LELemMS
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, RunError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.resolve(&self.output_dir).join(rel)
    }

    fn input_paths(&self) -> Vec<&Path> {
        let d = &self.data;
        let mut paths: Vec<&Path> = vec![&d.test_set];
        paths.extend(
            [
                &d.exemplars,
                &d.lexicon,
                &d.oracle,
                &d.syntax_profile,
                &d.paradigms,
                &d.transliterations,
                &d.pivot_oracle,
                &d.pivot_exemplars,
                &d.templates,
            ]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path),
        );
        for a in &d.annotations {
            paths.push(&a.conllu);
            paths.extend(a.ne_spans.as_deref());
        }
        if let Some(t) = &self.task {
            paths.push(&t.items);
            paths.extend(t.pool.as_deref());
        }
        if let Some(j) = &self.judge {
            paths.push(&j.prompt);
        }
        if let (BackendKindSetting::Replay, Some(t)) = (self.backend.kind, &self.backend.transcript) {
            paths.push(t);
        }
        paths
    }

    /// Fails fast on anything that would break a run part-way.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.limit == 0 {
            return bad("limit must be at least 1".into());
        }
        crate::scripts::Registry::builtin().language(&self.language).map_err(|e| RunError::Config(e.to_string()))?;
        for p in self.input_paths() {
            let full = self.resolve(p);
            if !full.is_file() {
                return bad(format!("{} does not exist", full.display()));
            }
        }
        if self.strategies.iter().any(|s| s.is_task()) {
            return bad("task strategies belong in [task].strategies".into());
        }
        if self.strategies.contains(&StrategyName::CLcovELemMS) && self.data.pivot_language.is_none() {
            return bad("CLcov-ELemMS needs data.pivot_language".into());
        }
        if let Some(t) = &self.task {
            if t.limit == 0 {
                return bad("task.limit must be at least 1".into());
            }
            if let Some(s) = t.strategies.iter().find(|s| !s.is_task() && **s != StrategyName::Topline) {
                return bad(format!("{s} is not a task strategy"));
            }
        }
        match self.backend.kind {
            BackendKindSetting::Replay if self.backend.transcript.is_none() => {
                bad("the replay backend needs backend.transcript".into())
            }
            BackendKindSetting::Mock
                if self.backend.policy == Some(MockPolicySetting::Fixed) && self.backend.text.is_none() =>
            {
                bad("the fixed mock policy needs backend.text".into())
            }
            _ => Ok(()),
        }
    }

    /// Applies `--backend kind[:policy]`.
    pub fn override_backend(&mut self, spec: &str) -> Result<(), RunError> {
        let (kind, policy) = match spec.split_once(':') {
            Some((k, p)) => (k, Some(p)),
            None => (spec, None),
        };
        self.backend.kind = serde_json::from_value(serde_json::Value::String(kind.into()))
            .map_err(|_| RunError::Config(format!("unknown backend `{kind}`")))?;
        if let Some(p) = policy {
            self.backend.policy = Some(
                serde_json::from_value(serde_json::Value::String(p.into()))
                    .map_err(|_| RunError::Config(format!("unknown mock policy `{p}`")))?,
            );
        }
        Ok(())
    }
}

/// Answers for the gold-label policy, keyed by the input block the model sees.
pub type GoldLabels = std::collections::HashMap<String, usize>;

impl BackendSettings {
    pub fn sampling(&self) -> Sampling {
        match (self.temperature, self.max_tokens) {
            (None, None) => Sampling::ProviderDefault,
            (temperature, max_tokens) => Sampling::Explicit { temperature, max_tokens },
        }
    }

    /// Builds the gateway. `lexicon` feeds the gloss policy and `gold` the
    /// gold-label policy.
    pub fn gateway(
        &self,
        cfg: &ExperimentConfig,
        lexicon: Option<&Lexicon>,
        gold: Option<GoldLabels>,
    ) -> Result<Gateway, RunError> {
        let backend: Box<dyn Backend> = match self.kind {
            BackendKindSetting::Live => Box::new(LiveBackend::from_env(
                self.base_url.as_deref().unwrap_or(DEFAULT_BASE_URL),
                self.api_key_env.as_deref().unwrap_or(DEFAULT_KEY_VAR),
                Duration::from_secs(self.timeout_secs),
            )?),
            BackendKindSetting::Replay => {
                let path = self.transcript.as_ref().ok_or_else(|| RunError::Config("missing transcript".into()))?;
                Box::new(ReplayBackend::load(cfg.resolve(path))?)
            }
            BackendKindSetting::Mock => {
                let policy = match self.policy.clone().unwrap_or(MockPolicySetting::Echo) {
                    MockPolicySetting::Echo => MockPolicy::Echo,
                    MockPolicySetting::CopyEntities => MockPolicy::CopyNamedEntities,
                    MockPolicySetting::Fixed => MockPolicy::Fixed(
                        self.text.clone().ok_or_else(|| RunError::Config("fixed policy needs text".into()))?,
                    ),
                    MockPolicySetting::Gloss => MockPolicy::LexiconGloss(Arc::new(
                        lexicon.cloned().ok_or_else(|| RunError::Config("gloss policy needs a lexicon".into()))?,
                    )),
                    MockPolicySetting::GoldLabel => {
                        let gold = gold.ok_or_else(|| RunError::Config("gold-label policy is for task runs".into()))?;
                        MockPolicy::custom(move |prompt| {
                            let block = crate::gateway::final_input_block(prompt);
                            gold.get(block).map_or_else(|| "unknown".to_string(), |l| l.to_string())
                        })
                    }
                };
                Box::new(MockBackend::new(policy))
            }
        };
        let mut gw = Gateway::new(backend, &self.model)
            .with_sampling(self.sampling())
            .with_parallelism(self.parallelism)
            .with_retry(self.retry.unwrap_or_default());
        if let Some(cache) = &self.cache {
            gw = gw.with_cache_file(cfg.output_path(cache))?;
        }
        Ok(gw)
    }
}
