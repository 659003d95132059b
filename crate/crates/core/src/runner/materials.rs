use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::RunError;
use crate::annotations::{attach_ne_spans, build_ne_glossary, dump_conllu, AnnotationSet, Transliterations};
use crate::cipher::{build_map, cipher_bundle, CipherMap, MaterialBundle};
use crate::lexicon::{Lexicon, OracleStore, Provenance};
use crate::retrieval::ExemplarPool;
use crate::strategies::{SyntaxProfile, TaskItem, Templates};
use crate::text::sha256_hex;

const ENGLISH: &str = "eng";

/// Everything a run needs, loaded once.
pub struct Materials {
    pub plain: MaterialBundle,
    pub ciphered: MaterialBundle,
    pub map: CipherMap,
    pub templates: Templates,
    /// Plain test samples: `source` in the experiment language, `target` in English.
    pub test_set: ExemplarPool,
}

fn load_annotations(cfg: &ExperimentConfig) -> Result<Vec<AnnotationSet>, RunError> {
    let mut sets = Vec::new();
    for a in &cfg.data.annotations {
        let mut set = AnnotationSet::load(cfg.resolve(&a.conllu), &a.language)?;
        if let Some(spans) = &a.ne_spans {
            let text = std::fs::read_to_string(cfg.resolve(spans))?;
            let unmatched = attach_ne_spans(&mut set.sentences, &text)?;
            if !unmatched.is_empty() {
                log::warn!("entity spans for unknown sentences: {}", unmatched.join(", "));
            }
        }
        sets.push(set);
    }
    Ok(sets)
}

/// The plain bundle described by the config.
pub fn load_plain_bundle(cfg: &ExperimentConfig) -> Result<MaterialBundle, RunError> {
    let lang = cfg.language.as_str();
    let d = &cfg.data;
    let mut b = MaterialBundle::new(lang);
    if let Some(p) = &d.lexicon {
        b.lexicon = Some(Lexicon::load_tsv(cfg.resolve(p), lang, ENGLISH, Provenance::Curated)?);
    }
    if let Some(p) = &d.oracle {
        b.oracle = Some(OracleStore::load(cfg.resolve(p), lang, ENGLISH)?);
    }
    if let Some(p) = &d.exemplars {
        b.exemplars = Some(ExemplarPool::load(cfg.resolve(p), lang, ENGLISH)?);
    }
    if let Some(pivot) = &d.pivot_language {
        if let Some(p) = &d.pivot_oracle {
            b.pivot_oracle = Some(OracleStore::load(cfg.resolve(p), pivot, lang)?);
        }
        if let Some(p) = &d.pivot_exemplars {
            b.pivot_exemplars = Some(ExemplarPool::load(cfg.resolve(p), pivot, lang)?);
        }
    }
    b.annotations = load_annotations(cfg)?;
    let translit = d.transliterations.as_ref().map(|p| Transliterations::load(cfg.resolve(p))).transpose()?;
    for set in &b.annotations {
        if set.sentences.iter().all(|s| s.ne_spans.is_empty()) {
            continue;
        }
        let other = if set.language == lang { ENGLISH } else { lang };
        b.ne_glossaries.push(build_ne_glossary(&set.sentences, &set.language, other, translit.as_ref()));
    }
    if let Some(p) = &d.syntax_profile {
        b.syntax_profile = Some(SyntaxProfile::load(cfg.resolve(p))?);
    }
    if let Some(p) = &d.paradigms {
        b.paradigms = Some(crate::text::normalize(&std::fs::read_to_string(cfg.resolve(p))?));
    }
    Ok(b)
}

pub fn load_templates(cfg: &ExperimentConfig) -> Result<Templates, RunError> {
    Ok(match &cfg.data.templates {
        Some(p) => Templates::load(cfg.resolve(p))?,
        None => Templates::builtin(),
    })
}

pub fn build_run_map(cfg: &ExperimentConfig) -> Result<CipherMap, RunError> {
    Ok(build_map(&cfg.language, cfg.seed, cfg.cl_name.as_deref())?)
}

pub fn load_materials(cfg: &ExperimentConfig) -> Result<Materials, RunError> {
    let plain = load_plain_bundle(cfg)?;
    let map = build_run_map(cfg)?;
    let ciphered = cipher_bundle(&map, &plain)?;
    let test_set = ExemplarPool::load(cfg.resolve(&cfg.data.test_set), &cfg.language, ENGLISH)?;
    if let Some(pool) = &plain.exemplars {
        pool.check_disjoint(test_set.exemplars.iter().map(|e| e.id.as_str()))?;
    }
    Ok(Materials { plain, ciphered, map, templates: load_templates(cfg)?, test_set })
}

pub fn load_task_items(cfg: &ExperimentConfig) -> Result<(Vec<TaskItem>, Vec<TaskItem>), RunError> {
    let t = cfg.task.as_ref().ok_or_else(|| RunError::Config("no [task] section".into()))?;
    let items = TaskItem::load(cfg.resolve(&t.items))?;
    let pool = t.pool.as_ref().map(|p| TaskItem::load(cfg.resolve(p))).transpose()?.unwrap_or_default();
    if let Some(bad) = items.iter().find(|i| i.kind() != t.kind) {
        return Err(RunError::Config(format!("item {} is {}, not {}", bad.id, bad.kind(), t.kind)));
    }
    Ok((items, pool))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub language: String,
    pub seed: u64,
    pub cl_name: String,
    /// Hash over the seed, the cipher name and every input file.
    pub input_hash: String,
    /// Written files and their content hashes.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepareOutcome {
    Written(Manifest),
    UpToDate(Manifest),
}

impl PrepareOutcome {
    pub fn manifest(&self) -> &Manifest {
        match self {
            PrepareOutcome::Written(m) | PrepareOutcome::UpToDate(m) => m,
        }
    }
}

fn input_hash(cfg: &ExperimentConfig) -> Result<String, RunError> {
    let mut parts = vec![format!("language={}", cfg.language), format!("seed={}", cfg.seed)];
    parts.push(format!("cl_name={}", cfg.cl_name.as_deref().unwrap_or("")));
    let d = &cfg.data;
    let mut inputs: Vec<(&str, &Path)> = vec![("test_set", &d.test_set)];
    let optional = [
        ("exemplars", &d.exemplars),
        ("lexicon", &d.lexicon),
        ("oracle", &d.oracle),
        ("syntax_profile", &d.syntax_profile),
        ("paradigms", &d.paradigms),
        ("transliterations", &d.transliterations),
        ("pivot_oracle", &d.pivot_oracle),
        ("pivot_exemplars", &d.pivot_exemplars),
    ];
    inputs.extend(optional.iter().filter_map(|(k, p)| p.as_deref().map(|p| (*k, p))));
    for a in &d.annotations {
        inputs.push(("conllu", &a.conllu));
        inputs.extend(a.ne_spans.as_deref().map(|p| ("ne_spans", p)));
    }
    parts.push(format!("pivot={}", d.pivot_language.as_deref().unwrap_or("")));
    for (role, p) in inputs {
        parts.push(format!("{role}={}", sha256_hex(std::fs::read(cfg.resolve(p))?)));
    }
    Ok(sha256_hex(parts.join("\n")))
}

fn materials_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_path("materials")
}

/// Writes the map and every ciphered artifact under `<output>/materials`.
/// Re-running with unchanged inputs leaves the files alone.
pub fn prepare_materials(cfg: &ExperimentConfig) -> Result<PrepareOutcome, RunError> {
    let dir = materials_dir(cfg);
    let manifest_path = dir.join("manifest.json");
    let hash = input_hash(cfg)?;
    if let Ok(text) = std::fs::read_to_string(&manifest_path) {
        if let Ok(m) = serde_json::from_str::<Manifest>(&text) {
            let intact = m.files.iter().all(|(name, h)| {
                std::fs::read(dir.join(name)).map(|bytes| sha256_hex(bytes) == *h).unwrap_or(false)
            });
            if m.input_hash == hash && intact {
                return Ok(PrepareOutcome::UpToDate(m));
            }
        }
    }
    let plain = load_plain_bundle(cfg)?;
    let map = build_run_map(cfg)?;
    let c = cipher_bundle(&map, &plain)?;
    let mut files: Vec<(String, String)> = vec![(CipherMap::file_name(&cfg.language, cfg.seed), map.to_text())];
    if let Some(l) = &c.lexicon {
        files.push(("lexicon.tsv".into(), l.to_tsv()));
    }
    if let Some(o) = &c.oracle {
        files.push(("oracle.tsv".into(), o.to_text()));
    }
    if let Some(p) = &c.exemplars {
        files.push(("exemplars.jsonl".into(), p.to_jsonl()));
    }
    if let Some(o) = &c.pivot_oracle {
        files.push(("pivot_oracle.tsv".into(), o.to_text()));
    }
    if let Some(p) = &c.pivot_exemplars {
        files.push(("pivot_exemplars.jsonl".into(), p.to_jsonl()));
    }
    for a in &c.annotations {
        files.push((format!("annotations.{}.conllu", a.language), dump_conllu(&a.sentences)));
    }
    for g in &c.ne_glossaries {
        let text: String = g.entries.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
        files.push((format!("glossary.{}-{}.tsv", g.source_lang, g.target_lang), text));
    }
    if let Some(p) = &c.paradigms {
        files.push(("paradigms.txt".into(), p.clone()));
    }
    std::fs::create_dir_all(&dir)?;
    let mut manifest = Manifest {
        language: cfg.language.clone(),
        seed: cfg.seed,
        cl_name: map.cl_name().to_string(),
        input_hash: hash,
        files: BTreeMap::new(),
    };
    for (name, text) in files {
        std::fs::write(dir.join(&name), &text)?;
        manifest.files.insert(name, sha256_hex(&text));
    }
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    Ok(PrepareOutcome::Written(manifest))
}
