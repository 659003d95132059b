use std::path::PathBuf;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GoldLabels};
use super::materials::{load_materials, load_task_items};
use super::mt::strategy_config;
use super::{write_jsonl, OrderedWriter, RunError, RunSummary};
use crate::gateway::{parallel_map, Gateway};
use crate::lexicon::LookupParams;
use crate::strategies::{Assembler, Direction, StrategyConfig, StrategyName, TaskItem, TaskKind, TaskPrompt, Templates};
use crate::text::sha256_hex;

/// First integer in `response`, if it is a valid label for `n` options.
pub fn parse_label(response: &str, n: usize) -> Option<usize> {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    let re = NUMBER.get_or_init(|| Regex::new(r"\d+").expect("label pattern"));
    let label: usize = re.find(response)?.as_str().parse().ok()?;
    (label < n).then_some(label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub item_id: String,
    pub task: TaskKind,
    pub strategy: StrategyName,
    pub label: usize,
    pub prediction: Option<usize>,
    pub correct: bool,
    /// Cascade only: the English translation of the item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
    pub raw_response: Option<String>,
    pub prompt_hashes: Vec<String>,
    pub calls: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub strategy: StrategyName,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub unparsable: usize,
    pub failures: usize,
    /// Gateway requests issued for this strategy, per item.
    pub calls_per_item: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TaskRun {
    pub summary: RunSummary,
    pub reports: Vec<TaskReport>,
}

fn task_file_name(language: &str, kind: TaskKind, strategy: StrategyName) -> String {
    format!("{language}.{kind}.{strategy}.jsonl")
}

struct TaskContext<'a> {
    assembler: Assembler<'a>,
    pool: &'a [TaskItem],
    cascade: StrategyConfig,
    gateway: &'a Gateway,
}

impl TaskContext<'_> {
    fn run_one(&self, scfg: &StrategyConfig, item: &TaskItem) -> TaskRecord {
        let mut rec = TaskRecord {
            item_id: item.id.clone(),
            task: item.kind(),
            strategy: scfg.name,
            label: item.label,
            prediction: None,
            correct: false,
            translation: None,
            raw_response: None,
            prompt_hashes: Vec::new(),
            calls: 0,
            error: None,
        };
        if let Err(e) = self.answer(scfg, item, &mut rec) {
            log::warn!("{} / {}: {e}", item.id, scfg.name);
            rec.error = Some(e);
            return rec;
        }
        rec.prediction = rec.raw_response.as_deref().and_then(|r| parse_label(r, item.label_count()));
        rec.correct = rec.prediction == Some(item.label);
        rec
    }

    fn call(&self, prompt: &str, rec: &mut TaskRecord) -> Result<String, String> {
        rec.prompt_hashes.push(sha256_hex(prompt));
        rec.calls += 1;
        self.gateway.complete_prompt(prompt).map(|r| r.response_text).map_err(|e| e.to_string())
    }

    fn answer(&self, scfg: &StrategyConfig, item: &TaskItem, rec: &mut TaskRecord) -> Result<(), String> {
        let prompt = self.assembler.task_prompt(scfg, item, self.pool, Some(&self.cascade)).map_err(|e| e.to_string())?;
        match prompt {
            TaskPrompt::Direct(p) => {
                rec.raw_response = Some(self.call(&p.full_prompt, rec)?);
            }
            TaskPrompt::Cascade(p) => {
                let translation = self.call(&p.full_prompt, rec)?.trim().to_string();
                let second = self.assembler.task_in_english(item, &translation).map_err(|e| e.to_string())?;
                rec.translation = Some(translation);
                rec.raw_response = Some(self.call(&second.full_prompt, rec)?);
            }
        }
        Ok(())
    }
}

/// Answers for the gold-label mock: each item's ciphered rendering maps to
/// its label, and a bare label maps to itself so it survives the cascade's
/// translation step.
fn gold_labels(items: &[TaskItem], assembler: &Assembler<'_>, t: &Templates) -> Result<GoldLabels, RunError> {
    let mut gold = GoldLabels::new();
    for item in items {
        let shown = item.map_text(|s| assembler.map().apply(s)).render(t)?;
        gold.insert(shown.trim().to_string(), item.label);
        for l in 0..item.label_count() {
            gold.insert(l.to_string(), l);
        }
    }
    Ok(gold)
}

fn report_for(kind: TaskKind, name: StrategyName, records: &[TaskRecord], requests: usize) -> TaskReport {
    let count = records.len();
    let correct = records.iter().filter(|r| r.correct).count();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let unparsable = records.iter().filter(|r| r.error.is_none() && r.prediction.is_none()).count();
    let per = |x: usize| if count == 0 { 0.0 } else { x as f64 / count as f64 };
    TaskReport {
        task: kind,
        strategy: name,
        count,
        correct,
        accuracy: per(correct),
        unparsable,
        failures,
        calls_per_item: per(requests),
    }
}

/// Solves the configured task items under each task strategy. Unparsable
/// answers count as incorrect.
pub fn run_task(cfg: &ExperimentConfig, dry: bool) -> Result<TaskRun, RunError> {
    cfg.validate()?;
    let settings = cfg.task.clone().ok_or_else(|| RunError::Config("no [task] section".into()))?;
    let (mut items, pool) = load_task_items(cfg)?;
    items.truncate(settings.limit);
    let configs: Vec<StrategyConfig> =
        settings.strategies.iter().map(|&n| strategy_config(cfg, n, Direction::ToEnglish)).collect();
    for c in &configs {
        if !c.name.is_task() && c.name != StrategyName::Topline {
            return Err(RunError::Config(format!("{} is not a task strategy", c.name)));
        }
        c.validate()?;
    }
    let cascade = strategy_config(cfg, settings.cascade_strategy, Direction::ToEnglish);
    cascade.validate()?;
    let m = load_materials(cfg)?;
    let threshold = cfg.strategy.threshold.unwrap_or(LookupParams::default().threshold);
    let assembler = Assembler::new(&m.ciphered, &m.map, &m.templates).with_threshold(threshold);
    let lang = cfg.language.as_str();
    let mut run = TaskRun::default();

    if dry {
        #[derive(Serialize)]
        struct DryRunPrompt {
            item_id: String,
            prompt_hash: String,
            prompt: String,
        }
        for scfg in &configs {
            let rows = items
                .iter()
                .map(|item| {
                    let p = match assembler.task_prompt(scfg, item, &pool, Some(&cascade))? {
                        TaskPrompt::Direct(p) | TaskPrompt::Cascade(p) => p,
                    };
                    Ok(DryRunPrompt { item_id: item.id.clone(), prompt_hash: p.hash(), prompt: p.full_prompt })
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            let path = cfg.output_path(PathBuf::from("prompts").join(task_file_name(lang, settings.kind, scfg.name)));
            write_jsonl(&path, &rows)?;
            run.summary.written += rows.len();
            run.summary.files.push(path);
        }
        return Ok(run);
    }

    let gold = gold_labels(&items, &assembler, &m.templates)?;
    let gateway = cfg.backend.gateway(cfg, m.ciphered.lexicon.as_ref(), Some(gold))?;
    let ctx = TaskContext { assembler, pool: &pool, cascade, gateway: &gateway };
    for scfg in &configs {
        let path = cfg.output_path(PathBuf::from("tasks").join(task_file_name(lang, settings.kind, scfg.name)));
        let writer = OrderedWriter::create(&path)?;
        let before = gateway.stats().requests;
        let indexed: Vec<(usize, &TaskItem)> = items.iter().enumerate().collect();
        let records = parallel_map(&indexed, gateway.parallelism(), |(i, item)| {
            let rec = ctx.run_one(scfg, item);
            if let Err(e) = writer.lock().expect("record writer").push(*i, &rec) {
                log::error!("cannot write record {}: {e}", rec.item_id);
            }
            rec
        });
        let report = report_for(settings.kind, scfg.name, &records, gateway.stats().requests - before);
        run.summary.failures += report.failures;
        run.summary.written += records.len();
        run.summary.files.push(path);
        run.reports.push(report);
    }
    let report_path = cfg.output_path(format!("tasks/{lang}.{}.report.jsonl", settings.kind));
    write_jsonl(&report_path, &run.reports)?;
    run.summary.files.push(report_path);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse_from_loose_answers() {
        assert_eq!(parse_label("2", 3), Some(2));
        assert_eq!(parse_label("**1**", 3), Some(1));
        assert_eq!(parse_label("The answer is 0.", 3), Some(0));
        assert_eq!(parse_label("7", 3), None);
        assert_eq!(parse_label("neutral", 3), None);
    }

    #[test]
    fn report_counts_unparsable_as_incorrect() {
        let rec = |prediction: Option<usize>, label: usize| TaskRecord {
            item_id: "x".into(),
            task: TaskKind::Nli,
            strategy: StrategyName::TaskDirect,
            label,
            prediction,
            correct: prediction == Some(label),
            translation: None,
            raw_response: None,
            prompt_hashes: Vec::new(),
            calls: 1,
            error: None,
        };
        let r = report_for(TaskKind::Nli, StrategyName::TaskDirect, &[rec(Some(0), 0), rec(None, 1)], 2);
        assert_eq!((r.correct, r.unparsable), (1, 1));
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.calls_per_item, 1.0);
    }
}
