mod bleu;
mod chrf;
mod mqm;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bleu::{bleu, bleu_from_stats, bleu_stats, corpus_bleu, tokenize_13a, BleuStats};
pub use chrf::{chrf, chrf_from_stats, chrf_stats, corpus_chrf, ChrfStats};
pub use mqm::{
    error_group, mqm_penalty, mqm_score, parse_gemba, CategoryScores, ErrorGroup, MqmAnnotation, MqmError, MqmScore,
    Severity, MQM_CAP,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("unknown MQM severity {0:?}")]
    UnknownSeverity(String),
    #[error("score line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot aggregate an empty sample list")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample_id: String,
    pub language: String,
    pub strategy: String,
    pub direction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    pub source: String,
    pub hypothesis: String,
    pub reference: String,
    pub chrf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mqm: Option<MqmScore>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external: BTreeMap<String, f64>,
}

/// One report line: a (language, strategy, direction) group, either over all
/// domains (`domain == None`) or over one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub language: String,
    pub strategy: String,
    pub direction: String,
    pub domain: Option<String>,
    pub count: usize,
    pub mean_chrf: f64,
    pub corpus_chrf: f64,
    pub mean_bleu: Option<f64>,
    pub corpus_bleu: Option<f64>,
    pub mean_mqm: Option<f64>,
    /// Share of judged samples with a penalty below 25.
    pub usable_fraction: Option<f64>,
    pub external: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

/// Order-independent mean: values are sorted before summing so float
/// rounding does not depend on sample order.
fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(key: (&str, &str, &str), domain: Option<String>, group: &[&ScoredSample]) -> ReportRow {
    // Corpus-level scores depend on pair order only through summation of
    // integer statistics, so any order gives the same value.
    let pairs = || group.iter().map(|s| (s.hypothesis.as_str(), s.reference.as_str()));
    let with_bleu = group.iter().any(|s| s.bleu.is_some());
    let mqm: Vec<f64> = group.iter().filter_map(|s| s.mqm.map(|m| m.total)).collect();
    let metrics: BTreeSet<&String> = group.iter().flat_map(|s| s.external.keys()).collect();
    ReportRow {
        language: key.0.to_string(),
        strategy: key.1.to_string(),
        direction: key.2.to_string(),
        domain,
        count: group.len(),
        mean_chrf: mean(group.iter().map(|s| s.chrf)).unwrap_or(0.0),
        corpus_chrf: corpus_chrf(pairs()),
        mean_bleu: mean(group.iter().filter_map(|s| s.bleu)),
        corpus_bleu: with_bleu.then(|| corpus_bleu(pairs())),
        mean_mqm: mean(mqm.iter().copied()),
        usable_fraction: (!mqm.is_empty())
            .then(|| mqm.iter().filter(|&&p| p < MQM_CAP).count() as f64 / mqm.len() as f64),
        external: metrics
            .into_iter()
            .filter_map(|m| mean(group.iter().filter_map(|s| s.external.get(m).copied())).map(|v| (m.clone(), v)))
            .collect(),
    }
}

/// Means and counts per (language, strategy, direction), overall and per
/// domain tag. Rows come out sorted, so the report does not depend on
/// sample order.
pub fn aggregate(samples: &[ScoredSample]) -> Result<Report, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&ScoredSample>> = BTreeMap::new();
    for s in samples {
        groups.entry((&s.language, &s.strategy, &s.direction)).or_default().push(s);
    }
    let mut rows = Vec::new();
    for (key, mut group) in groups {
        group.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        rows.push(summarize(key, None, &group));
        let mut by_domain: BTreeMap<&str, Vec<&ScoredSample>> = BTreeMap::new();
        for s in &group {
            if let Some(d) = &s.domain {
                by_domain.entry(d).or_default().push(s);
            }
        }
        for (d, g) in by_domain {
            rows.push(summarize(key, Some(d.to_string()), &g));
        }
    }
    Ok(Report { rows })
}

impl Report {
    pub fn to_jsonl(&self) -> String {
        self.rows.iter().map(|r| serde_json::to_string(r).expect("report rows serialize") + "\n").collect()
    }

    /// Fixed-width table for terminals, with one extra column per external
    /// metric that any row carries.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let external: BTreeSet<&str> = self.rows.iter().flat_map(|r| r.external.keys().map(String::as_str)).collect();
        let mut out = String::new();
        let _ = write!(
            out,
            "{:<6} {:<14} {:<13} {:<12} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "lang", "strategy", "direction", "domain", "n", "chrF", "c-chrF", "BLEU", "c-BLEU", "MQM", "usable"
        );
        for name in &external {
            let _ = write!(out, " {name:>7}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{:<6} {:<14} {:<13} {:<12} {:>5} {:>7.2} {:>7.2} {:>7} {:>7} {:>7} {:>7}",
                r.language,
                r.strategy,
                r.direction,
                r.domain.as_deref().unwrap_or("all"),
                r.count,
                r.mean_chrf,
                r.corpus_chrf,
                opt(r.mean_bleu),
                opt(r.corpus_bleu),
                opt(r.mean_mqm),
                opt(r.usable_fraction),
            );
            for name in &external {
                let _ = write!(out, " {:>7}", opt(r.external.get(*name).copied()));
            }
            out.push('\n');
        }
        out
    }
}

/// One external metric value, as written by the scoring sidecar. A row
/// without `strategy` applies to every sample with that id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: String,
    pub metric: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub attached: usize,
    /// Ids (in file order, deduplicated) that matched no sample.
    pub unmatched: Vec<String>,
    /// (sample_id, metric) keys that appeared more than once; the last value won.
    pub duplicates: Vec<(String, String)>,
}

pub fn parse_score_rows(text: &str) -> Result<Vec<ScoreRow>, MetricsError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ScoreRow =
            serde_json::from_str(line).map_err(|e| MetricsError::Parse { line: i + 1, message: e.to_string() })?;
        if !row.value.is_finite() {
            return Err(MetricsError::Parse { line: i + 1, message: format!("non-finite value {}", row.value) });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Attaches sidecar scores to samples by id.
pub fn ingest_external_scores(samples: &mut [ScoredSample], text: &str) -> Result<IngestReport, MetricsError> {
    let rows = parse_score_rows(text)?;
    let mut by_id: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_id.entry(s.sample_id.as_str()).or_default().push(i);
    }
    let mut report = IngestReport::default();
    let mut seen: BTreeSet<(String, Option<String>, String)> = BTreeSet::new();
    let mut updates: Vec<(usize, String, f64)> = Vec::new();
    for row in &rows {
        let targets: Vec<usize> = by_id
            .get(row.sample_id.as_str())
            .map(|v| {
                v.iter().copied().filter(|&i| row.strategy.as_ref().is_none_or(|st| *st == samples[i].strategy)).collect()
            })
            .unwrap_or_default();
        if targets.is_empty() {
            if !report.unmatched.contains(&row.sample_id) {
                report.unmatched.push(row.sample_id.clone());
            }
            continue;
        }
        if !seen.insert((row.sample_id.clone(), row.strategy.clone(), row.metric.clone())) {
            log::warn!("duplicate {} score for {}; keeping the last one", row.metric, row.sample_id);
            report.duplicates.push((row.sample_id.clone(), row.metric.clone()));
        }
        for i in targets {
            updates.push((i, row.metric.clone(), row.value));
        }
    }
    let mut touched = BTreeSet::new();
    for (i, metric, value) in updates {
        samples[i].external.insert(metric.clone(), value);
        touched.insert((i, metric));
    }
    report.attached = touched.len();
    Ok(report)
}

pub fn ingest_external_file(samples: &mut [ScoredSample], path: impl AsRef<Path>) -> Result<IngestReport, MetricsError> {
    ingest_external_scores(samples, &std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, domain: &str, chrf: f64, mqm: Option<f64>) -> ScoredSample {
        ScoredSample {
            sample_id: id.into(),
            language: "spa".into(),
            strategy: "LE".into(),
            direction: "to-english".into(),
            domain: Some(domain.into()),
            source: "s".into(),
            hypothesis: "h".into(),
            reference: "r".into(),
            chrf,
            bleu: None,
            mqm: mqm.map(|t| MqmScore { total: t, ..Default::default() }),
            external: BTreeMap::new(),
        }
    }

    #[test]
    fn single_sample_mean_is_its_value() {
        let r = aggregate(&[sample("a", "news", 42.5, None)]).unwrap();
        assert_eq!(r.rows[0].mean_chrf, 42.5);
        assert_eq!(r.rows[0].count, 1);
        assert_eq!(r.rows.len(), 2);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn usable_fraction() {
        let r = aggregate(&[sample("a", "news", 1.0, Some(25.0)), sample("b", "news", 2.0, Some(15.0))]).unwrap();
        assert_eq!(r.rows[0].usable_fraction, Some(0.5));
        assert_eq!(r.rows[0].mean_mqm, Some(20.0));
        assert!(r.to_table().contains("0.50"));
    }

    #[test]
    fn ingest_attaches_reports_and_overrides() {
        let mut samples = vec![sample("s1", "news", 0.0, None), sample("s2", "web", 0.0, None)];
        let text = "{\"sample_id\":\"s1\",\"metric\":\"xcomet\",\"value\":0.42}\n\
                    {\"sample_id\":\"zz\",\"metric\":\"xcomet\",\"value\":0.1}\n\
                    {\"sample_id\":\"s1\",\"metric\":\"xcomet\",\"value\":0.5}\n";
        let rep = ingest_external_scores(&mut samples, text).unwrap();
        assert_eq!(samples[0].external["xcomet"], 0.5);
        assert!(samples[1].external.is_empty());
        assert_eq!(rep.unmatched, ["zz"]);
        assert_eq!(rep.duplicates, [("s1".to_string(), "xcomet".to_string())]);
        assert_eq!(rep.attached, 1);
        assert!(matches!(
            ingest_external_scores(&mut samples, "{\"sample_id\":1}"),
            Err(MetricsError::Parse { line: 1, .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn aggregate_is_permutation_invariant(
            vals in proptest::collection::vec((0.0f64..100.0, 0usize..3, proptest::option::of(0.0f64..25.0)), 1..12),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let domains = ["a", "b", "c"];
            let samples: Vec<ScoredSample> = vals
                .iter()
                .enumerate()
                .map(|(i, (c, d, m))| sample(&format!("s{i}"), domains[*d], *c, *m))
                .collect();
            let mut shuffled = samples.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            proptest::prop_assert_eq!(aggregate(&samples).unwrap(), aggregate(&shuffled).unwrap());
        }
    }
}
