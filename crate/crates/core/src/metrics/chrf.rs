use std::collections::HashMap;

const ORDER: usize = 6;
const BETA: f64 = 2.0;

/// Per-order (hypothesis n-grams, reference n-grams, clipped matches).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChrfStats {
    pub counts: [(usize, usize, usize); ORDER],
}

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            a.0 += b.0;
            a.1 += b.1;
            a.2 += b.2;
        }
    }
}

fn ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn chrf_stats(hypothesis: &str, reference: &str) -> ChrfStats {
    let hyp: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let reference: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut stats = ChrfStats::default();
    for n in 1..=ORDER {
        let h = ngrams(&hyp, n);
        let r = ngrams(&reference, n);
        let matches = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        stats.counts[n - 1] = (h.values().sum(), r.values().sum(), matches);
    }
    stats
}

/// Precision and recall are averaged over the orders where both sides have
/// n-grams, and the F-score is taken of the averages.
pub fn chrf_from_stats(stats: &ChrfStats) -> f64 {
    let (mut prec, mut rec, mut effective) = (0.0, 0.0, 0usize);
    for &(n_hyp, n_ref, n_match) in &stats.counts {
        if n_hyp > 0 && n_ref > 0 {
            prec += n_match as f64 / n_hyp as f64;
            rec += n_match as f64 / n_ref as f64;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    prec /= effective as f64;
    rec /= effective as f64;
    if prec + rec == 0.0 {
        return 0.0;
    }
    let b2 = BETA * BETA;
    100.0 * (1.0 + b2) * prec * rec / (b2 * prec + rec)
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

/// Sentence chrF (character 1..6-grams, whitespace removed, beta 2).
/// Two empty strings score 100; an empty side against a nonempty one scores 0.
pub fn chrf(hypothesis: &str, reference: &str) -> f64 {
    if is_blank(hypothesis) && is_blank(reference) {
        return 100.0;
    }
    chrf_from_stats(&chrf_stats(hypothesis, reference))
}

/// Corpus chrF: statistics summed over all pairs before scoring.
pub fn corpus_chrf<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> f64 {
    let mut total = ChrfStats::default();
    let mut any = false;
    let mut all_blank = true;
    for (h, r) in pairs {
        any = true;
        all_blank &= is_blank(h) && is_blank(r);
        total.add(&chrf_stats(h, r));
    }
    if any && all_blank {
        return 100.0;
    }
    chrf_from_stats(&total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_disjoint() {
        assert_eq!(chrf("hello world", "hello world"), 100.0);
        assert_eq!(chrf("abcd", "wxyz"), 0.0);
        assert_eq!(chrf("", ""), 100.0);
        assert_eq!(chrf("", "abc"), 0.0);
        assert_eq!(chrf("abc", ""), 0.0);
    }

    #[test]
    fn whitespace_is_ignored() {
        assert_eq!(chrf("hello  world", "helloworld"), 100.0);
    }

    #[test]
    fn short_strings_use_effective_order() {
        // Only 1- and 2-grams exist on both sides.
        let v = chrf("ab", "ab");
        assert_eq!(v, 100.0);
        let v = chrf("ab", "abc");
        assert!(v > 0.0 && v < 100.0);
    }
}
