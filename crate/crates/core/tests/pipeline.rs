mod support;

use std::collections::BTreeSet;

use cipherlang::cipher::CipherMap;
use cipherlang::lexicon::OracleStore;
use cipherlang::runner::{self, PrepareOutcome, RunRecord};
use cipherlang::strategies::StrategyName;
use serde_json::Value;

use support::{config, fixtures};

fn lines(path: &std::path::Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
}

fn data_lines(path: &std::path::Path) -> usize {
    lines(path).iter().filter(|l| !l.starts_with('#')).count()
}

#[test]
fn prepare_is_idempotent_and_one_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("spa_base", dir.path());
    let first = runner::prepare_materials(&cfg).unwrap();
    assert!(matches!(first, PrepareOutcome::Written(_)));
    let second = runner::prepare_materials(&cfg).unwrap();
    assert!(matches!(second, PrepareOutcome::UpToDate(_)));
    assert_eq!(first.manifest(), second.manifest());

    let out = cfg.output_path("materials");
    assert_eq!(data_lines(&out.join("lexicon.tsv")), data_lines(&fixtures().join("spa/lexicon.tsv")));

    let map_name = CipherMap::file_name("spa", support::FIXTURE_SEED);
    let map = CipherMap::load(out.join(map_name)).unwrap();
    let plain = lines(&fixtures().join("spa/exemplars.jsonl"));
    let ciphered = lines(&out.join("exemplars.jsonl"));
    assert_eq!(plain.len(), ciphered.len());
    for (p, c) in plain.iter().zip(&ciphered) {
        let (p, c): (Value, Value) = (serde_json::from_str(p).unwrap(), serde_json::from_str(c).unwrap());
        let cs = c["source"].as_str().unwrap();
        assert_ne!(cs, p["source"].as_str().unwrap());
        assert_eq!(map.invert(cs), p["source"].as_str().unwrap());
        assert_eq!(c["target"], p["target"]);
    }
}

#[test]
fn changed_seed_invalidates_prepared_materials() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("spa_base", dir.path());
    runner::prepare_materials(&cfg).unwrap();
    cfg.seed += 1;
    assert!(matches!(runner::prepare_materials(&cfg).unwrap(), PrepareOutcome::Written(_)));
}

#[test]
fn word_for_word_never_calls_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("spa_base", dir.path());
    cfg.strategies = vec![StrategyName::LStr];
    let transcript = dir.path().join("transcript.jsonl");
    cfg.backend.record_transcript = Some(transcript.clone());
    let summary = runner::run_mt(&cfg, false).unwrap();
    assert_eq!((summary.written, summary.failures), (50, 0));
    assert!(lines(&transcript).is_empty());
    let records: Vec<RunRecord> =
        lines(&summary.files[0]).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.iter().all(|r| r.attempts == 0 && r.prompt_hash.is_none() && r.error.is_none()));
}

#[test]
fn topline_prompts_carry_no_ciphered_text() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("spa_base", dir.path());
    cfg.strategies = vec![StrategyName::Topline, StrategyName::LE];
    runner::run_mt(&cfg, true).unwrap();
    let m = runner::load_materials(&cfg).unwrap();
    let plain_words: BTreeSet<String> =
        m.test_set.exemplars.iter().flat_map(|e| e.source.split_whitespace().map(str::to_string).collect::<Vec<_>>()).collect();
    // Words whose ciphered form could not be mistaken for a plain word.
    let ciphered_words: BTreeSet<String> = plain_words
        .iter()
        .map(|w| m.map.apply(w))
        .filter(|c| !plain_words.contains(c))
        .collect();
    let prompt_words = |name: StrategyName| -> BTreeSet<String> {
        let path = cfg.output_path("prompts").join(runner::record_file_name("spa", name, cfg.direction));
        lines(&path)
            .iter()
            .map(|l| serde_json::from_str::<Value>(l).unwrap()["prompt"].as_str().unwrap().to_string())
            .flat_map(|p| p.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .collect()
    };
    assert!(prompt_words(StrategyName::Topline).is_disjoint(&ciphered_words));
    assert!(!prompt_words(StrategyName::LE).is_disjoint(&ciphered_words));
}

#[test]
fn record_prompt_hashes_match_a_re_render() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("spa_base", dir.path());
    cfg.strategies = vec![StrategyName::LELemMS];
    cfg.limit = 8;
    let run = runner::run_mt(&cfg, false).unwrap();
    let dry_dir = tempfile::tempdir().unwrap();
    let mut dry_cfg = cfg.clone();
    dry_cfg.output_dir = dry_dir.path().to_path_buf();
    let dry = runner::run_mt(&dry_cfg, true).unwrap();
    let hashes = |path: &std::path::Path, key: &str| -> Vec<(String, String)> {
        lines(path)
            .iter()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                (v["sample_id"].as_str().unwrap().to_string(), v[key].as_str().unwrap().to_string())
            })
            .collect()
    };
    assert_eq!(hashes(&run.files[0], "prompt_hash"), hashes(&dry.files[0], "prompt_hash"));
}

#[test]
fn oracle_file_answers_cached_words_only() {
    let oracle = OracleStore::load(fixtures().join("deu/oracle.tsv"), "deu", "eng").unwrap();
    assert_eq!(oracle.lookup("Bruder"), vec!["brother".to_string()]);
    assert_eq!(oracle.lookup("Bruder"), oracle.lookup("Bruder"));
    assert!(oracle.lookup("Katze").is_empty());
    assert_eq!(oracle.misses(), vec!["Katze".to_string()]);
}

#[test]
fn sample_selection_is_reproducible_and_balanced() {
    let m = runner::load_materials(&config("spa_base", std::path::Path::new("/tmp"))).unwrap();
    let a = runner::select_samples(&m.test_set.exemplars, 9, 7, true);
    let b = runner::select_samples(&m.test_set.exemplars, 9, 7, true);
    assert_eq!(a, b);
    for domain in ["wikinews", "wikivoyage", "wikibooks"] {
        assert_eq!(a.iter().filter(|e| e.domain.as_deref() == Some(domain)).count(), 3);
    }
}

#[test]
fn fixture_map_is_frozen() {
    let map = cipherlang::cipher::build_map("spa", support::FIXTURE_SEED, None).unwrap();
    support::check_golden(&CipherMap::file_name("spa", support::FIXTURE_SEED), &map.to_text()).unwrap();
}
