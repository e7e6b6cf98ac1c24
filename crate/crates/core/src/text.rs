//! Text normalization shared by the leak guard, the test embedder and FAQ
//! clustering.
//!
//! A token is a whitespace-separated word, lowercased, with every character
//! that is neither alphanumeric nor whitespace removed. Words that are left
//! empty after stripping (a lone `=` or `--`) produce no token.

use std::ops::Range;

/// A normalized token together with the byte span of the raw word it came
/// from in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannedToken {
    pub token: String,
    pub span: Range<usize>,
}

fn normalize_word(word: &str) -> String {
    word.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Tokenizes `text`, keeping the byte span of each contributing word.
pub fn spanned_tokens(text: &str) -> Vec<SpannedToken> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                push_word(text, s..i, &mut out);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        push_word(text, s..text.len(), &mut out);
    }
    out
}

fn push_word(text: &str, span: Range<usize>, out: &mut Vec<SpannedToken>) {
    let token = normalize_word(&text[span.clone()]);
    if !token.is_empty() {
        out.push(SpannedToken { token, span });
    }
}

/// Tokenizes `text` (lowercase, punctuation stripped, split on whitespace).
pub fn tokens(text: &str) -> Vec<String> {
    spanned_tokens(text).into_iter().map(|t| t.token).collect()
}

/// Normalized single-line form: tokens joined by one space.
pub fn normalize(text: &str) -> String {
    tokens(text).join(" ")
}
