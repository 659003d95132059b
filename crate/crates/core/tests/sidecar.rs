//! File contracts with the annotation and scoring sidecar.

mod support;

use cipherlang::annotations::{attach_ne_spans, dump_conllu, parse_conllu_str};
use cipherlang::runner;

use support::{config, fixtures};

#[test]
fn annotator_output_parses_and_takes_entity_spans() {
    let text = std::fs::read_to_string(fixtures().join("sidecar/annotate.conllu")).unwrap();
    let mut sentences = parse_conllu_str(&text).unwrap();
    assert_eq!(sentences.len(), 5);
    for s in &sentences {
        assert_eq!(s.reconstruct_text(), s.text, "{}", s.sentence_id);
    }
    let spans = std::fs::read_to_string(fixtures().join("sidecar/ne_spans.tsv")).unwrap();
    assert!(attach_ne_spans(&mut sentences, &spans).unwrap().is_empty());
    let wn14 = sentences.iter().find(|s| s.sentence_id == "wn14").unwrap();
    assert_eq!(wn14.ne_spans[0].entity, "María García");
    assert_eq!(parse_conllu_str(&dump_conllu(&sentences)).unwrap().len(), 5);
}

#[test]
fn scorer_output_attaches_to_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("spa_sanity", dir.path());
    runner::run_mt(&cfg, false).unwrap();
    let ingest = runner::score(&cfg, &fixtures().join("sidecar/scores.jsonl")).unwrap();
    assert!(ingest.unmatched.is_empty());
    assert!(ingest.duplicates.is_empty());
    assert_eq!(ingest.attached, 5);
    let report = runner::report(&cfg).unwrap();
    let all = report.rows.iter().find(|r| r.domain.is_none()).unwrap();
    assert!(all.external.contains_key("xcomet"));
}
