//! Experiment orchestration: configs, material preparation, MT and task
//! runs, scoring and reports.

mod config;
mod materials;
mod mt;
mod task;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{
    AnnotationPaths, BackendKindSetting, BackendSettings, DataPaths, ExperimentConfig, GoldLabels, JudgeSettings,
    MockPolicySetting, ProbeSettings, StrategyOverrides, TaskSettings,
};
pub use materials::{
    build_run_map, load_materials, load_plain_bundle, load_task_items, load_templates, prepare_materials, Manifest,
    Materials, PrepareOutcome,
};
pub use mt::{record_file_name, run_mt, strategy_config, RunRecord};
pub use task::{parse_label, run_task, TaskRecord, TaskReport, TaskRun};

use crate::annotations::AnnotationError;
use crate::cipher::CipherError;
use crate::gateway::GatewayError;
use crate::lexicon::LexiconError;
use crate::metrics::{aggregate, ingest_external_file, IngestReport, MetricsError, Report, ScoredSample};
use crate::probe::{run_probe, write_probe_report, ProbeResult};
use crate::retrieval::{Exemplar, RetrievalError};
use crate::scripts::InventoryError;
use crate::strategies::{Assembler, Direction, StrategyError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Cipher(#[from] CipherError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

impl RunError {
    /// Bad configuration or unreadable inputs map to [`EXIT_CONFIG`].
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_)
            | RunError::Inventory(_)
            | RunError::Lexicon(_)
            | RunError::Annotation(_)
            | RunError::Retrieval(_)
            | RunError::Cipher(_) => EXIT_CONFIG,
            RunError::Strategy(StrategyError::InvalidConfig(_)) => EXIT_CONFIG,
            RunError::Gateway(GatewayError::Config(_) | GatewayError::Auth(_)) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub written: usize,
    pub failures: usize,
    pub files: Vec<PathBuf>,
    pub report: Option<Report>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            EXIT_PARTIAL
        } else {
            EXIT_OK
        }
    }
}

/// Up to `limit` samples. With `balance`, each domain is shuffled with the
/// seed and the domains (in name order) are then taken round-robin; without
/// it, the whole set is shuffled. The same (set, limit, seed) always gives
/// the same selection in the same order.
pub fn select_samples(samples: &[Exemplar], limit: usize, seed: u64, balance: bool) -> Vec<Exemplar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !balance {
        let mut all = samples.to_vec();
        all.shuffle(&mut rng);
        all.truncate(limit);
        return all;
    }
    let mut by_domain: BTreeMap<&str, Vec<&Exemplar>> = BTreeMap::new();
    for s in samples {
        by_domain.entry(s.domain.as_deref().unwrap_or("")).or_default().push(s);
    }
    let mut queues: Vec<std::vec::IntoIter<&Exemplar>> = by_domain
        .into_values()
        .map(|mut v| {
            v.shuffle(&mut rng);
            v.into_iter()
        })
        .collect();
    let mut out = Vec::new();
    while out.len() < limit {
        let before = out.len();
        for q in &mut queues {
            if out.len() == limit {
                break;
            }
            if let Some(s) = q.next() {
                out.push(s.clone());
            }
        }
        if out.len() == before {
            break;
        }
    }
    out
}

/// Writes JSONL lines in index order as results arrive out of order.
pub(crate) struct OrderedWriter {
    out: BufWriter<File>,
    next: usize,
    pending: BTreeMap<usize, String>,
}

impl OrderedWriter {
    pub(crate) fn create(path: &Path) -> std::io::Result<Mutex<Self>> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Mutex::new(OrderedWriter { out: BufWriter::new(File::create(path)?), next: 0, pending: BTreeMap::new() }))
    }

    pub(crate) fn push(&mut self, index: usize, value: &impl Serialize) -> std::io::Result<()> {
        self.pending.insert(index, serde_json::to_string(value).expect("records serialize"));
        while let Some(line) = self.pending.remove(&self.next) {
            writeln!(self.out, "{line}")?;
            self.next += 1;
        }
        self.out.flush()
    }
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text: String = items.iter().map(|i| serde_json::to_string(i).expect("records serialize") + "\n").collect();
    std::fs::write(path, text)
}

pub const SAMPLES_FILE: &str = "samples.jsonl";

pub fn load_scored_samples(path: &Path) -> Result<Vec<ScoredSample>, RunError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| RunError::Metrics(MetricsError::Parse { line: i + 1, message: e.to_string() }))
        })
        .collect()
}

/// Aggregates `samples` and writes `report.jsonl` and `report.txt`.
pub fn write_report(cfg: &ExperimentConfig, samples: &[ScoredSample]) -> Result<Report, RunError> {
    let report = aggregate(samples)?;
    std::fs::create_dir_all(cfg.output_path(""))?;
    std::fs::write(cfg.output_path("report.jsonl"), report.to_jsonl())?;
    std::fs::write(cfg.output_path("report.txt"), report.to_table())?;
    Ok(report)
}

/// Attaches sidecar scores to the run's scored samples and rewrites them.
pub fn score(cfg: &ExperimentConfig, external: &Path) -> Result<IngestReport, RunError> {
    let path = cfg.output_path(SAMPLES_FILE);
    let mut samples = load_scored_samples(&path)?;
    let report = ingest_external_file(&mut samples, external)?;
    write_jsonl(&path, &samples)?;
    Ok(report)
}

pub fn report(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let samples = load_scored_samples(&cfg.output_path(SAMPLES_FILE))?;
    write_report(cfg, &samples)
}

/// Decipher-then-translate probe over the sampled test set.
pub fn probe(cfg: &ExperimentConfig) -> Result<Vec<ProbeResult>, RunError> {
    cfg.validate()?;
    let m = load_materials(cfg)?;
    let settings = cfg.probe.clone().unwrap_or(ProbeSettings { strategy: crate::strategies::StrategyName::LELemMS, limit: None });
    let samples = select_samples(&m.test_set.exemplars, settings.limit.unwrap_or(cfg.limit), cfg.seed, cfg.balance_domains);
    let scfg = strategy_config(cfg, settings.strategy, Direction::ToEnglish);
    let gateway = cfg.backend.gateway(cfg, m.ciphered.lexicon.as_ref(), None)?;
    let assembler = Assembler::new(&m.ciphered, &m.map, &m.templates)
        .with_threshold(cfg.strategy.threshold.unwrap_or(crate::lexicon::LookupParams::default().threshold));
    let results = run_probe(&assembler, &m.templates, &scfg, &samples, &gateway)?;
    let path = cfg.output_path(format!("probe/{}.{}.jsonl", cfg.language, settings.strategy));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_probe_report(&results, path)?;
    Ok(results)
}
