use std::fmt::Write as _;
use std::io::BufRead;

use super::{AnnotatedSentence, AnnotatedToken, AnnotationError, MultiwordToken, NeSpan};
use crate::text::normalize;

/// Parses CoNLL-U blocks. Multiword ranges keep their surface for spacing and
/// re-serialization; their parts become the tokens. Empty nodes (`8.1`) carry
/// only enhanced dependencies and are dropped.
pub fn parse_conllu(reader: impl BufRead) -> Result<Vec<AnnotatedSentence>, AnnotationError> {
    let mut out = Vec::new();
    let mut block = Block::default();
    for (i, line) in reader.lines().enumerate() {
        let line = normalize(line?.trim_end_matches('\r'));
        let no = i + 1;
        if line.trim().is_empty() {
            if let Some(s) = block.finish(out.len()) {
                out.push(s);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            block.comment(comment.trim_start(), no);
            continue;
        }
        block.start.get_or_insert(no);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(AnnotationError::Parse {
                line: no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        block.row(&cols, no)?;
    }
    if let Some(s) = block.finish(out.len()) {
        out.push(s);
    }
    Ok(out)
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<AnnotatedSentence>, AnnotationError> {
    parse_conllu(text.as_bytes())
}

#[derive(Default)]
struct Block {
    start: Option<usize>,
    comments: Vec<String>,
    sent_id: Option<String>,
    text: Option<String>,
    tokens: Vec<AnnotatedToken>,
    multiword: Vec<MultiwordToken>,
}

impl Block {
    fn comment(&mut self, body: &str, no: usize) {
        self.start.get_or_insert(no);
        if let Some(v) = body.strip_prefix("sent_id") {
            if let Some(v) = v.trim_start().strip_prefix('=') {
                self.sent_id = Some(v.trim().to_string());
                return;
            }
        }
        if let Some(v) = body.strip_prefix("text") {
            if let Some(v) = v.trim_start().strip_prefix('=') {
                self.text = Some(v.trim().to_string());
                return;
            }
        }
        self.comments.push(body.to_string());
    }

    fn row(&mut self, cols: &[&str], no: usize) -> Result<(), AnnotationError> {
        let bad = |message: String| AnnotationError::Parse { line: no, message };
        let id = cols[0];
        if id.contains('.') {
            return Ok(());
        }
        if let Some((a, b)) = id.split_once('-') {
            let first: usize = a.parse().map_err(|_| bad(format!("bad range id `{id}`")))?;
            let last: usize = b.parse().map_err(|_| bad(format!("bad range id `{id}`")))?;
            if first == 0 || last < first {
                return Err(bad(format!("bad range id `{id}`")));
            }
            self.multiword.push(MultiwordToken {
                first: first - 1,
                last: last - 1,
                surface: cols[1].to_string(),
                misc: parse_misc(cols[9]),
            });
            return Ok(());
        }
        let index: usize = id.parse().map_err(|_| bad(format!("bad token id `{id}`")))?;
        if index != self.tokens.len() + 1 {
            return Err(bad(format!("token id {index} out of sequence")));
        }
        if cols[1].is_empty() {
            return Err(bad("empty surface form".to_string()));
        }
        let feats = parse_feats(cols[5]).map_err(bad)?;
        let misc = parse_misc(cols[9]);
        let ne_tag = misc
            .iter()
            .find_map(|m| m.strip_prefix("ner=").or_else(|| m.strip_prefix("NE=")))
            .filter(|t| *t != "O")
            .map(str::to_string);
        self.tokens.push(AnnotatedToken {
            surface: cols[1].to_string(),
            lemma: if cols[2] == "_" { cols[1].to_string() } else { cols[2].to_string() },
            upos: if cols[3] == "_" { "X".to_string() } else { cols[3].to_string() },
            xpos: opt(cols[4]),
            feats,
            head: opt(cols[6]),
            deprel: opt(cols[7]),
            deps: opt(cols[8]),
            misc,
            ne_label: ne_tag.as_deref().map(|t| bioes_label(t).1.to_string()),
            ne_tag,
        });
        Ok(())
    }

    fn finish(&mut self, ordinal: usize) -> Option<AnnotatedSentence> {
        let block = std::mem::take(self);
        if block.tokens.is_empty() && block.start.is_none() {
            return None;
        }
        let mut sentence = AnnotatedSentence {
            sentence_id: block.sent_id.unwrap_or_else(|| format!("s{}", ordinal + 1)),
            text: String::new(),
            tokens: block.tokens,
            multiword: block.multiword,
            ne_spans: Vec::new(),
            comments: block.comments,
        };
        sentence.ne_spans = spans_from_tags(&sentence);
        sentence.text = block.text.unwrap_or_else(|| sentence.reconstruct_text());
        Some(sentence)
    }
}

fn opt(col: &str) -> Option<String> {
    (col != "_").then(|| col.to_string())
}

fn parse_feats(col: &str) -> Result<Vec<(String, String)>, String> {
    if col == "_" || col.is_empty() {
        return Ok(Vec::new());
    }
    let mut feats: Vec<(String, String)> = Vec::new();
    for pair in col.split('|') {
        let (k, v) = pair.split_once('=').ok_or_else(|| format!("feature `{pair}` lacks `=`"))?;
        if feats.iter().any(|(existing, _)| existing == k) {
            return Err(format!("feature `{k}` repeated"));
        }
        feats.push((k.to_string(), v.to_string()));
    }
    Ok(feats)
}

fn parse_misc(col: &str) -> Vec<String> {
    if col == "_" || col.is_empty() {
        return Vec::new();
    }
    col.split('|').map(str::to_string).collect()
}

/// Splits `B-PER` into (`B`, `PER`). A bare label is treated as a single.
fn bioes_label(tag: &str) -> (char, &str) {
    match tag.split_once('-') {
        Some((p, l)) if p.len() == 1 => (p.chars().next().unwrap_or('S'), l),
        _ => ('S', tag),
    }
}

fn spans_from_tags(sentence: &AnnotatedSentence) -> Vec<NeSpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    let close = |open: &mut Option<(usize, String)>, end: usize, spans: &mut Vec<NeSpan>| {
        if let Some((start, label)) = open.take() {
            spans.push(NeSpan { start, end, label, entity: sentence.span_text(start, end) });
        }
    };
    for (i, tok) in sentence.tokens.iter().enumerate() {
        let Some(tag) = &tok.ne_tag else {
            close(&mut open, i, &mut spans);
            continue;
        };
        let (prefix, label) = bioes_label(tag);
        match prefix {
            'B' | 'S' => {
                close(&mut open, i, &mut spans);
                open = Some((i, label.to_string()));
                if prefix == 'S' {
                    close(&mut open, i + 1, &mut spans);
                }
            }
            _ => {
                // I/E continue a span with the same label; a stray one opens a new span.
                if !matches!(&open, Some((_, l)) if l == label) {
                    close(&mut open, i, &mut spans);
                    open = Some((i, label.to_string()));
                }
                if prefix == 'E' {
                    close(&mut open, i + 1, &mut spans);
                }
            }
        }
    }
    close(&mut open, sentence.tokens.len(), &mut spans);
    spans
}

/// Writes sentences back as CoNLL-U.
pub fn dump_conllu(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# sent_id = {}", s.sentence_id);
        let _ = writeln!(out, "# text = {}", s.text);
        for c in &s.comments {
            let _ = writeln!(out, "# {c}");
        }
        for (i, t) in s.tokens.iter().enumerate() {
            if let Some(mw) = s.multiword.iter().find(|m| m.first == i) {
                let _ = writeln!(
                    out,
                    "{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t{}",
                    mw.first + 1,
                    mw.last + 1,
                    mw.surface,
                    join_or_blank(&mw.misc, "|")
                );
            }
            let feats: Vec<String> = t.feats.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.surface,
                t.lemma,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                join_or_blank(&feats, "|"),
                t.head.as_deref().unwrap_or("_"),
                t.deprel.as_deref().unwrap_or("_"),
                t.deps.as_deref().unwrap_or("_"),
                join_or_blank(&t.misc, "|"),
            );
        }
        out.push('\n');
    }
    out
}

fn join_or_blank(items: &[String], sep: &str) -> String {
    if items.is_empty() {
        "_".to_string()
    } else {
        items.join(sep)
    }
}
