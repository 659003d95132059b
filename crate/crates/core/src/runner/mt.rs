use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::materials::{load_materials, Materials};
use super::{select_samples, write_jsonl, write_report, OrderedWriter, RunError, RunSummary, SAMPLES_FILE};
use crate::gateway::{parallel_map, write_transcript, BackendKind, Gateway};
use crate::lexicon::LookupParams;
use crate::metrics::{bleu, chrf, mqm_score, parse_gemba, MqmScore, ScoredSample};
use crate::retrieval::Exemplar;
use crate::scripts::Registry;
use crate::strategies::{fill, pivot_plan, Assembler, Direction, StrategyConfig, StrategyName};

/// One sample under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sample_id: String,
    pub language: String,
    pub strategy: StrategyName,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    /// Plain input text.
    pub source: String,
    pub reference: String,
    /// Hash of the final prompt; absent for the non-model baseline.
    pub prompt_hash: Option<String>,
    /// Pivot cascade only: the first-stage prompt hash and its output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_prompt_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_output: Option<String>,
    pub raw_completion: Option<String>,
    /// Present exactly when the output had to be deciphered.
    pub deciphered: Option<String>,
    pub hypothesis: String,
    pub chrf: Option<f64>,
    pub bleu: Option<f64>,
    pub mqm: Option<MqmScore>,
    pub latency_ms: u64,
    pub attempts: u32,
    pub backend: Option<BackendKind>,
    pub error: Option<String>,
}

pub fn record_file_name(language: &str, strategy: StrategyName, direction: Direction) -> String {
    format!("{language}.{strategy}.{direction}.jsonl")
}

/// Preset for `name` with the config's overrides applied.
pub fn strategy_config(cfg: &ExperimentConfig, name: StrategyName, direction: Direction) -> StrategyConfig {
    let mut s = StrategyConfig::preset(name, direction);
    let o = &cfg.strategy;
    s.k = o.k.unwrap_or(s.k);
    s.e = o.e.unwrap_or(s.e);
    s.per_match_cap = o.per_match_cap.unwrap_or(s.per_match_cap);
    if name == StrategyName::CLcovELemMS {
        if let Some(p) = &cfg.data.pivot_language {
            s = s.with_pivot(p);
        }
    }
    s
}

fn is_baseline(name: StrategyName) -> bool {
    matches!(name, StrategyName::Topline | StrategyName::OnlyInput | StrategyName::LStr)
}

fn language_name(code: &str) -> String {
    Registry::builtin().language(code).map(|l| l.name.clone()).unwrap_or_else(|_| code.to_string())
}

struct Judge {
    gateway: Gateway,
    template: String,
}

impl Judge {
    fn score(&self, source_lang: &str, target_lang: &str, source: &str, hypothesis: &str) -> Option<MqmScore> {
        let prompt = fill(
            &self.template,
            &[
                ("source_lang", &language_name(source_lang)),
                ("target_lang", &language_name(target_lang)),
                ("source", source),
                ("hypothesis", hypothesis),
            ],
        );
        let result = prompt
            .map_err(|e| e.to_string())
            .and_then(|p| self.gateway.complete_prompt(&p).map_err(|e| e.to_string()))
            .and_then(|r| parse_gemba(&r.response_text).map_err(|e| e.to_string()));
        match result {
            Ok(ann) => Some(mqm_score(&ann)),
            Err(e) => {
                log::warn!("judge failed: {e}");
                None
            }
        }
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    m: &'a Materials,
    assembler: Assembler<'a>,
    gateway: &'a Gateway,
    judge: Option<&'a Judge>,
}

impl Context<'_> {
    fn run_one(&self, scfg: &StrategyConfig, sample: &Exemplar) -> RunRecord {
        let (input, reference) = match scfg.direction {
            Direction::ToEnglish => (&sample.source, &sample.target),
            Direction::FromEnglish => (&sample.target, &sample.source),
        };
        let mut rec = RunRecord {
            sample_id: sample.id.clone(),
            language: self.cfg.language.clone(),
            strategy: scfg.name,
            direction: scfg.direction,
            domain: sample.domain.clone(),
            source: input.clone(),
            reference: reference.clone(),
            prompt_hash: None,
            pivot_prompt_hash: None,
            pivot_output: None,
            raw_completion: None,
            deciphered: None,
            hypothesis: String::new(),
            chrf: None,
            bleu: None,
            mqm: None,
            latency_ms: 0,
            attempts: 0,
            backend: None,
            error: None,
        };
        if let Err(e) = self.produce(scfg, &sample.id, input, &mut rec) {
            log::warn!("{} / {}: {e}", sample.id, scfg.name);
            rec.error = Some(e);
            return rec;
        }
        let needs_inverse = scfg.direction == Direction::FromEnglish && scfg.name != StrategyName::Topline;
        let output = rec.raw_completion.clone().unwrap_or_default();
        let output = if scfg.name == StrategyName::LStr { rec.hypothesis.clone() } else { output.trim().to_string() };
        if needs_inverse {
            let plain = self.m.map.invert(&output);
            rec.deciphered = Some(plain.clone());
            rec.hypothesis = plain;
        } else {
            rec.hypothesis = output;
        }
        rec.chrf = Some(chrf(&rec.hypothesis, &rec.reference));
        rec.bleu = is_baseline(scfg.name).then(|| bleu(&rec.hypothesis, &rec.reference));
        if let Some(j) = self.judge {
            let (src, tgt) = match scfg.direction {
                Direction::ToEnglish => (self.cfg.language.as_str(), "eng"),
                Direction::FromEnglish => ("eng", self.cfg.language.as_str()),
            };
            rec.mqm = j.score(src, tgt, &rec.source, &rec.hypothesis);
        }
        rec
    }

    /// Fills prompt hashes and the raw completion; for the word-for-word
    /// baseline, the hypothesis in the model's script.
    fn produce(&self, scfg: &StrategyConfig, id: &str, input: &str, rec: &mut RunRecord) -> Result<(), String> {
        if scfg.name == StrategyName::LStr {
            rec.hypothesis = self.assembler.word_for_word(scfg, input).map_err(|e| e.to_string())?;
            return Ok(());
        }
        let stage_input = if scfg.name == StrategyName::CLcovELemMS {
            let plan = pivot_plan(scfg, &self.m.templates, &self.m.ciphered, input).map_err(|e| e.to_string())?;
            rec.pivot_prompt_hash = Some(crate::text::sha256_hex(&plan.stage1_prompt));
            let first = self.gateway.complete_prompt(&plan.stage1_prompt).map_err(|e| e.to_string())?;
            rec.latency_ms += first.latency_ms;
            rec.attempts += first.attempt_count;
            let text = first.response_text.trim().to_string();
            rec.pivot_output = Some(text.clone());
            text
        } else {
            input.to_string()
        };
        let prompt = self.assembler.mt_prompt(scfg, id, &stage_input).map_err(|e| e.to_string())?;
        rec.prompt_hash = Some(prompt.hash());
        let done = self.gateway.complete_prompt(&prompt.full_prompt).map_err(|e| e.to_string())?;
        rec.latency_ms += done.latency_ms;
        rec.attempts += done.attempt_count;
        rec.backend = Some(done.backend);
        rec.raw_completion = Some(done.response_text);
        Ok(())
    }
}

#[derive(Serialize)]
struct DryRunPrompt<'a> {
    sample_id: &'a str,
    prompt_hash: String,
    prompt: &'a str,
}

fn dry_run(cfg: &ExperimentConfig, m: &Materials, assembler: &Assembler<'_>, samples: &[Exemplar]) -> Result<RunSummary, RunError> {
    let mut summary = RunSummary::default();
    for &name in &cfg.strategies {
        let scfg = strategy_config(cfg, name, cfg.direction);
        scfg.validate()?;
        if !scfg.calls_model() {
            continue;
        }
        let mut prompts = Vec::new();
        for s in samples {
            let input = match cfg.direction {
                Direction::ToEnglish => &s.source,
                Direction::FromEnglish => &s.target,
            };
            // The pivot cascade's second prompt depends on model output, so
            // only its first stage can be shown.
            let text = if name == StrategyName::CLcovELemMS {
                pivot_plan(&scfg, &m.templates, &m.ciphered, input)?.stage1_prompt
            } else {
                assembler.mt_prompt(&scfg, &s.id, input)?.full_prompt
            };
            prompts.push((s.id.clone(), text));
        }
        let rows: Vec<DryRunPrompt> = prompts
            .iter()
            .map(|(id, p)| DryRunPrompt { sample_id: id, prompt_hash: crate::text::sha256_hex(p), prompt: p })
            .collect();
        let path = cfg.output_path(PathBuf::from("prompts").join(record_file_name(&cfg.language, name, cfg.direction)));
        write_jsonl(&path, &rows)?;
        summary.written += rows.len();
        summary.files.push(path);
    }
    Ok(summary)
}

/// Translates the sampled test set under every configured strategy. Records
/// go to `<output>/records/`, one file per strategy, in sample order.
pub fn run_mt(cfg: &ExperimentConfig, dry: bool) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let configs: Vec<StrategyConfig> =
        cfg.strategies.iter().map(|&n| strategy_config(cfg, n, cfg.direction)).collect();
    for c in &configs {
        c.validate()?;
    }
    let m = load_materials(cfg)?;
    let samples = select_samples(&m.test_set.exemplars, cfg.limit, cfg.seed, cfg.balance_domains);
    let threshold = cfg.strategy.threshold.unwrap_or(LookupParams::default().threshold);
    let assembler = Assembler::new(&m.ciphered, &m.map, &m.templates).with_threshold(threshold);
    if dry {
        return dry_run(cfg, &m, &assembler, &samples);
    }
    // The gloss mock answers in the output language of the run.
    let gloss = match cfg.direction {
        Direction::ToEnglish => m.ciphered.lexicon.clone(),
        Direction::FromEnglish => m.ciphered.lexicon.as_ref().map(|l| l.reversed()),
    };
    let gateway = cfg.backend.gateway(cfg, gloss.as_ref(), None)?;
    let judge = match &cfg.judge {
        Some(j) => Some(Judge {
            gateway: j.backend.gateway(cfg, None, None)?,
            template: std::fs::read_to_string(cfg.resolve(&j.prompt))?,
        }),
        None => None,
    };
    let ctx = Context { cfg, m: &m, assembler, gateway: &gateway, judge: judge.as_ref() };
    let mut summary = RunSummary::default();
    let mut scored = Vec::new();
    for scfg in &configs {
        let path = cfg.output_path(PathBuf::from("records").join(record_file_name(&cfg.language, scfg.name, scfg.direction)));
        let writer = OrderedWriter::create(&path)?;
        let indexed: Vec<(usize, &Exemplar)> = samples.iter().enumerate().collect();
        let records = parallel_map(&indexed, gateway.parallelism(), |(i, s)| {
            let rec = ctx.run_one(scfg, s);
            if let Err(e) = writer.lock().expect("record writer").push(*i, &rec) {
                log::error!("cannot write record {}: {e}", rec.sample_id);
            }
            rec
        });
        for r in &records {
            match (&r.error, r.chrf) {
                (None, Some(c)) => scored.push(ScoredSample {
                    sample_id: r.sample_id.clone(),
                    language: r.language.clone(),
                    strategy: r.strategy.to_string(),
                    direction: r.direction.to_string(),
                    domain: r.domain.clone(),
                    source: r.source.clone(),
                    hypothesis: r.hypothesis.clone(),
                    reference: r.reference.clone(),
                    chrf: c,
                    bleu: r.bleu,
                    mqm: r.mqm,
                    external: Default::default(),
                }),
                _ => summary.failures += 1,
            }
        }
        summary.written += records.len();
        summary.files.push(path);
    }
    write_jsonl(&cfg.output_path(SAMPLES_FILE), &scored)?;
    if !scored.is_empty() {
        summary.report = Some(write_report(cfg, &scored)?);
    }
    if let Some(t) = &cfg.backend.record_transcript {
        write_transcript(&gateway.transcript(), cfg.resolve(t))?;
    }
    Ok(summary)
}
