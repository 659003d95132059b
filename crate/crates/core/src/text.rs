//! Small text utilities shared across modules: canonical normalization,
//! word splitting, and content hashing.

use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Canonical composition (NFC). Every file loader runs text through this
/// before anything else touches it.
pub fn normalize(text: &str) -> String {
    text.nfc().collect()
}

/// Whitespace, punctuation and symbols. Letters, digits and combining marks
/// (Indic vowel signs, virama, nukta) are word-internal.
pub fn is_separator(c: char) -> bool {
    c.is_whitespace() || !(c.is_alphanumeric() || is_combining_mark(c))
}

/// Maximal runs of non-separator characters, in order.
pub fn word_spans(text: &str) -> Vec<&str> {
    text.split(is_separator).filter(|w| !w.is_empty()).collect()
}

/// Lowercased word tokens, as used by retrieval.
pub fn lowercase_words(text: &str) -> Vec<String> {
    word_spans(text).into_iter().map(str::to_lowercase).collect()
}

/// Splits a whitespace token into (leading punctuation, core, trailing punctuation).
pub fn split_affixes(token: &str) -> (&str, &str, &str) {
    let start = token
        .char_indices()
        .find(|&(_, c)| !is_separator(c))
        .map(|(i, _)| i)
        .unwrap_or(token.len());
    let end = token
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_separator(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(start);
    if start >= end {
        return (token, "", "");
    }
    (&token[..start], &token[start..end], &token[end..])
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn devanagari_words_keep_virama_and_vowel_signs() {
        assert_eq!(word_spans("यह एक वाक्य है।"), vec!["यह", "एक", "वाक्य", "है"]);
    }

    #[test]
    fn affixes_split_off_punctuation() {
        assert_eq!(split_affixes("«hola!»"), ("«", "hola", "!»"));
        assert_eq!(split_affixes("perro"), ("", "perro", ""));
        assert_eq!(split_affixes("..."), ("...", "", ""));
        assert_eq!(split_affixes("d'exemple"), ("", "d'exemple", ""));
    }

    #[test]
    fn normalize_composes() {
        assert_eq!(normalize("e\u{301}"), "é");
        assert_eq!(normalize("e\u{302}\u{301}").chars().count(), 1);
    }
}
