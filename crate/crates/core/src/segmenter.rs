//! Rule-based sentence splitting for scientific prose.
//!
//! A sentence ends at `.`, `!` or `?` (plus any trailing terminators and
//! closing quotes) when the next non-space character is uppercase or a
//! digit. Periods after a small stop-list of abbreviations never split, and
//! nothing splits inside parentheses or brackets.

use alloc::string::String;
use alloc::vec::Vec;

/// Words that end in a period without ending a sentence, compared
/// case-insensitively and without the final period.
const ABBREVIATIONS: &[&str] = &["dr", "fig", "al", "e.g", "i.e", "vs", "no"];

const MIN_SENTENCE_CHARS: usize = 2;

/// A sentence as a half-open byte range into the paragraph it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}')
}

fn is_abbreviation(paragraph: &str, span_start: usize, dot: usize) -> bool {
    let before = &paragraph[span_start..dot];
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '[', '"', '\'', '\u{201c}']);
    ABBREVIATIONS.iter().any(|a| a.eq_ignore_ascii_case(word))
}

/// Splits a paragraph into sentence spans.
///
/// Every byte of the input belongs either to exactly one span or to the
/// whitespace between spans. Empty or all-whitespace input yields no spans.
pub fn split_sentences(paragraph: &str) -> Vec<SentenceSpan> {
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let n = chars.len();

    let mut i = 0;
    while i < n && chars[i].1.is_whitespace() {
        i += 1;
    }
    if i == n {
        return Vec::new();
    }
    let mut start = chars[i].0;
    let mut depth: usize = 0;

    while i < n {
        let (pos, c) = chars[i];
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
        if depth > 0 || !is_terminator(c) {
            i += 1;
            continue;
        }

        let mut j = i + 1;
        while j < n && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        let end = if j < n { chars[j].0 } else { paragraph.len() };
        let mut k = j;
        while k < n && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = k > j
            && k < n
            && (chars[k].1.is_uppercase() || chars[k].1.is_numeric())
            && !(c == '.' && is_abbreviation(paragraph, start, pos));
        if !boundary {
            i += 1;
            continue;
        }

        if paragraph[start..end].chars().count() < MIN_SENTENCE_CHARS {
            if let Some(last) = bounds.last_mut() {
                last.1 = end;
                start = chars[k].0;
            }
            // with no previous span the fragment stays attached to the next one
        } else {
            bounds.push((start, end));
            start = chars[k].0;
        }
        i = k;
    }

    let tail_end = paragraph.trim_end().len();
    if tail_end > start {
        let tail = &paragraph[start..tail_end];
        match bounds.last_mut() {
            Some(last) if tail.chars().count() < MIN_SENTENCE_CHARS => last.1 = tail_end,
            _ => bounds.push((start, tail_end)),
        }
    }

    bounds
        .into_iter()
        .map(|(start, end)| SentenceSpan { start, end, text: paragraph[start..end].into() })
        .collect()
}

/// Convenience wrapper returning only the sentence strings.
pub fn sentences(paragraph: &str) -> Vec<String> {
    split_sentences(paragraph).into_iter().map(|s| s.text).collect()
}
