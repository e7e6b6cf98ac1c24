//! Mechanical backstop for the non-disclosure directive: any run of `n` or
//! more consecutive tokens shared with the reference solution is cut out of
//! the answer.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::text;

pub const REDACTION_MARKER: &str = "[withheld — try deriving this step]";
pub const DEFAULT_LEAK_NGRAM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardStatus {
    Clean,
    Redacted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeakGuard {
    ngram: usize,
}

impl Default for LeakGuard {
    fn default() -> Self {
        Self::new(DEFAULT_LEAK_NGRAM)
    }
}

impl LeakGuard {
    pub fn new(ngram: usize) -> Self {
        assert!(ngram > 0, "n-gram length must be positive");
        Self { ngram }
    }

    pub fn ngram(&self) -> usize {
        self.ngram
    }

    /// Byte ranges of `candidate` covered by an `n`-token window that also
    /// occurs in `reference`. Overlapping and adjacent windows are merged.
    pub fn leaked_spans(&self, candidate: &str, reference: &str) -> Vec<Range<usize>> {
        let n = self.ngram;
        let reference = text::tokens(reference);
        let cand = text::spanned_tokens(candidate);
        if reference.len() < n || cand.len() < n {
            return Vec::new();
        }
        let windows: HashSet<&[String]> = reference.windows(n).collect();
        let tokens: Vec<String> = cand.iter().map(|t| t.token.clone()).collect();

        let mut covered = vec![false; tokens.len()];
        for (i, w) in tokens.windows(n).enumerate() {
            if windows.contains(w) {
                covered[i..i + n].iter_mut().for_each(|c| *c = true);
            }
        }

        let mut spans: Vec<Range<usize>> = Vec::new();
        let mut i = 0;
        while i < covered.len() {
            if !covered[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < covered.len() && covered[i] {
                i += 1;
            }
            spans.push(cand[start].span.start..cand[i - 1].span.end);
        }
        spans
    }

    fn redact_once(&self, candidate: &str, reference: &str) -> Option<String> {
        let spans = self.leaked_spans(candidate, reference);
        if spans.is_empty() {
            return None;
        }
        let mut out = candidate.to_string();
        for span in spans.into_iter().rev() {
            out.replace_range(span, REDACTION_MARKER);
        }
        Some(out)
    }

    /// Returns the candidate unchanged and `Clean`, or a redacted copy and
    /// `Redacted`. The returned text never shares an `n`-token run with the
    /// reference.
    pub fn check(&self, candidate: &str, reference: &str) -> (String, GuardStatus) {
        let Some(mut text) = self.redact_once(candidate, reference) else {
            return (candidate.to_string(), GuardStatus::Clean);
        };
        // The marker's own words could complete a window only if the
        // reference contains them; a couple of passes settles that.
        for _ in 0..2 {
            match self.redact_once(&text, reference) {
                Some(next) => text = next,
                None => return (text, GuardStatus::Redacted),
            }
        }
        let fallback = if self.leaked_spans(REDACTION_MARKER, reference).is_empty() {
            REDACTION_MARKER.to_string()
        } else {
            String::new()
        };
        (fallback, GuardStatus::Redacted)
    }
}

/// [`LeakGuard::check`] with the default 12-token threshold.
pub fn leak_guard(candidate: &str, reference_solution: &str) -> (String, GuardStatus) {
    LeakGuard::default().check(candidate, reference_solution)
}
