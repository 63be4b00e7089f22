//! Text normalization and tokenization shared by the metrics, the test
//! encoder and the relevance judge.

use alloc::string::String;
use alloc::vec::Vec;

/// Collapses every run of whitespace to a single ASCII space and trims both
/// ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Case-folds and splits on runs of non-alphanumeric characters.
///
/// This is the tokenization used by BLEU, ROUGE, the test encoder and the
/// overlap prong of the relevance judge.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Whitespace-delimited tokens, the default size unit of the fixed and
/// recursive chunkers.
pub fn count_words(s: &str) -> usize {
    s.split_whitespace().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse() {
        assert_eq!(collapse_whitespace("  a \n\t b  c "), "a b c");
        assert_eq!(collapse_whitespace(""), "");
    }

    #[test]
    fn tokenize_casefolds_and_splits() {
        assert_eq!(tokenize("The cat-sat, ON 7.4mm!"), ["the", "cat", "sat", "on", "7", "4mm"]);
        assert!(tokenize(" ,.; ").is_empty());
    }
}
