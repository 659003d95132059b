use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

const MAX_ORDER: usize = 4;

/// The `13a` tokenizer of the mteval script.
pub fn tokenize_13a(line: &str) -> Vec<String> {
    static RULES: OnceLock<[(Regex, &'static str); 4]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            (Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").expect("valid regex"), " $1 "),
            // period and comma unless preceded by a digit
            (Regex::new(r"([^0-9])([\.,])").expect("valid regex"), "$1 $2 "),
            // period and comma unless followed by a digit
            (Regex::new(r"([\.,])([^0-9])").expect("valid regex"), " $1 $2"),
            // dash preceded by a digit
            (Regex::new(r"([0-9])(-)").expect("valid regex"), "$1 $2 "),
        ]
    });
    let mut text = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if text.contains('&') {
        text = text.replace("&quot;", "\"").replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">");
    }
    let mut text = format!(" {text} ");
    for (re, rep) in rules {
        text = re.replace_all(&text, *rep).into_owned();
    }
    text.split_whitespace().map(str::to_string).collect()
}

/// Sufficient statistics: per-order clipped matches and totals, plus lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub correct: [usize; MAX_ORDER],
    pub total: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn bleu_stats(hypothesis: &str, reference: &str) -> BleuStats {
    let hyp = tokenize_13a(hypothesis);
    let reference = tokenize_13a(reference);
    let mut stats = BleuStats { hyp_len: hyp.len(), ref_len: reference.len(), ..Default::default() };
    for n in 1..=MAX_ORDER {
        let h = ngram_counts(&hyp, n);
        let r = ngram_counts(&reference, n);
        stats.total[n - 1] = hyp.len().saturating_sub(n - 1);
        stats.correct[n - 1] = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    }
    stats
}

/// Geometric mean of the modified precisions up to the highest order the
/// hypothesis has n-grams for, times the brevity penalty. No smoothing: a
/// zero precision gives 0.
pub fn bleu_from_stats(stats: &BleuStats) -> f64 {
    let order = (0..MAX_ORDER).take_while(|&n| stats.total[n] > 0).count();
    if order == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 0..order {
        if stats.correct[n] == 0 {
            return 0.0;
        }
        log_sum += (stats.correct[n] as f64 / stats.total[n] as f64).ln();
    }
    let bp = if stats.hyp_len < stats.ref_len {
        (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
    } else {
        1.0
    };
    100.0 * bp * (log_sum / order as f64).exp()
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

/// Sentence BLEU with 13a tokens. Two empty strings score 100.
pub fn bleu(hypothesis: &str, reference: &str) -> f64 {
    if is_blank(hypothesis) && is_blank(reference) {
        return 100.0;
    }
    bleu_from_stats(&bleu_stats(hypothesis, reference))
}

/// Corpus BLEU: statistics summed over all pairs before scoring.
pub fn corpus_bleu<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> f64 {
    let mut total = BleuStats::default();
    let mut any = false;
    let mut all_blank = true;
    for (h, r) in pairs {
        any = true;
        all_blank &= is_blank(h) && is_blank(r);
        total.add(&bleu_stats(h, r));
    }
    if any && all_blank {
        return 100.0;
    }
    bleu_from_stats(&total)
}
