#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cipherlang::runner::{load_materials, ExperimentConfig, Materials};
use cipherlang::strategies::{pivot_plan, Assembler, Direction, StrategyConfig, StrategyName};

pub const GOLDEN_SAMPLE: &str = "wn14";
pub const FIXTURE_SEED: u64 = 7;
/// French rendering of the golden sample, standing in for the pivot stage output.
pub const PIVOT_TEXT: &str = "María García a gagné le prix national de littérature.";

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixtures() -> PathBuf {
    crate_dir().join("fixtures")
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests/golden")
}

/// A fixture config with its output redirected to `out`.
pub fn config(name: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(fixtures().join("configs").join(format!("{name}.toml"))).expect("fixture config");
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// Compares `actual` with the golden file, or rewrites it when
/// `UPDATE_GOLDENS=1`.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var("UPDATE_GOLDENS").as_deref() == Ok("1") {
        std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        Err(format!("{name} differs from its golden file near line {line}"))
    }
}

fn materials(name: &str) -> (ExperimentConfig, Materials) {
    let dir = std::env::temp_dir();
    let cfg = config(name, &dir);
    let m = load_materials(&cfg).expect("fixture materials");
    (cfg, m)
}

/// Rendered output of every translation strategy on the golden sample, as
/// (golden file name, text). The pivot cascade contributes both stages.
pub fn golden_prompts() -> Vec<(String, String)> {
    let mut out = Vec::new();
    let (_, m) = materials("spa_base");
    let sample = m.test_set.get(GOLDEN_SAMPLE).expect("golden sample").clone();
    let a = Assembler::new(&m.ciphered, &m.map, &m.templates);
    for name in StrategyName::MT {
        if name == StrategyName::CLcovELemMS {
            continue;
        }
        let cfg = StrategyConfig::preset(name, Direction::ToEnglish);
        let text = if name == StrategyName::LStr {
            a.word_for_word(&cfg, &sample.source).expect("word-for-word") + "\n"
        } else {
            a.mt_prompt(&cfg, &sample.id, &sample.source).expect("prompt").full_prompt
        };
        out.push((format!("prompt.{name}.txt"), text));
    }
    let (fcfg, fm) = materials("spa_from_english");
    let a = Assembler::new(&fm.ciphered, &fm.map, &fm.templates);
    let cfg = StrategyConfig::preset(StrategyName::CLcovELemMS, Direction::FromEnglish)
        .with_pivot(fcfg.data.pivot_language.as_deref().expect("pivot language"));
    let plan = pivot_plan(&cfg, &fm.templates, &fm.ciphered, &sample.target).expect("pivot plan");
    out.push(("prompt.CLcov-ELemMS.stage1.txt".into(), plan.stage1_prompt));
    let stage2 = a.mt_prompt(&plan.stage2, &sample.id, PIVOT_TEXT).expect("stage 2 prompt");
    out.push(("prompt.CLcov-ELemMS.txt".into(), stage2.full_prompt));
    out
}

/// Section sets along the ladder on the golden sample; each must contain the last.
pub fn ladder_sections() -> Vec<(StrategyName, Vec<String>)> {
    let (_, m) = materials("spa_base");
    let sample = m.test_set.get(GOLDEN_SAMPLE).expect("golden sample").clone();
    let a = Assembler::new(&m.ciphered, &m.map, &m.templates);
    StrategyName::LADDER
        .iter()
        .map(|&name| {
            let cfg = StrategyConfig::preset(name, Direction::ToEnglish);
            let p = a.mt_prompt(&cfg, &sample.id, &sample.source).expect("prompt");
            (name, p.section_names().iter().map(|s| s.as_str().to_string()).collect())
        })
        .collect()
}

/// Plain edit distance, written out independently of the library.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Word-for-word by exhaustive scan: every token's nearest lexicon key within
/// normalized distance 0.5, ties to the smaller key, first target.
pub fn brute_force_gloss(entries: &[(String, Vec<String>)], input: &str) -> String {
    input
        .split_whitespace()
        .map(|token| {
            let (pre, core, post) = cipherlang::text::split_affixes(token);
            if !core.chars().any(char::is_alphabetic) {
                return token.to_string();
            }
            let q = core.to_lowercase();
            let mut best: Option<(f64, &str, &str)> = None;
            for (key, targets) in entries {
                let longest = q.chars().count().max(key.chars().count()) as f64;
                let d = edit_distance(&q, &key.to_lowercase()) as f64 / longest;
                if d > 0.5 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bd, bk, _)) => d < bd || (d == bd && key.as_str() < bk),
                };
                if better {
                    best = Some((d, key, &targets[0]));
                }
            }
            match best {
                Some((_, _, t)) => format!("{pre}{t}{post}"),
                None => token.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}
