//! Tokenization and n-gram profile extraction shared by all metrics and
//! analyses.
//!
//! The tokenizer reproduces the language-agnostic `13a` scheme used by
//! standard MT scorers: whitespace normalization, punctuation splitting
//! around non-digits, symbol splitting, and nothing language-specific.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

/// A tokenized sentence together with the text it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
    source_text: String,
}

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

struct TokRegexes {
    symbols: Regex,
    punct_before: Regex,
    punct_after: Regex,
    digit_dash: Regex,
}

fn tok_regexes() -> &'static TokRegexes {
    static RE: OnceLock<TokRegexes> = OnceLock::new();
    RE.get_or_init(|| TokRegexes {
        // ASCII symbols except apostrophe, comma, dash, period, digits, letters
        symbols: Regex::new(r"([\x20-\x26\x28-\x2b\x2f\x3a-\x40\x5b-\x60\x7b-\x7e])").unwrap(),
        // period/comma not preceded by a digit
        punct_before: Regex::new(r"([^0-9])([\.,])").unwrap(),
        // period/comma not followed by a digit
        punct_after: Regex::new(r"([\.,])([^0-9])").unwrap(),
        // dash preceded by a digit
        digit_dash: Regex::new(r"([0-9])(-)").unwrap(),
    })
}

/// Tokenizes with the language-agnostic `13a` rules.
///
/// Total function: any valid Unicode string tokenizes, the empty string
/// yields an empty sequence. Joining the tokens with single spaces and
/// re-tokenizing returns the same token list.
///
/// The period/comma rules run to a fixed point: a single left-to-right
/// substitution pass cannot see a context it consumed itself (for
/// consecutive punctuation marks before a digit, as in `..0`), which
/// would break idempotence.
pub fn tokenize_13a(text: &str) -> TokenSeq {
    let re = tok_regexes();

    let mut line = text.replace("<skipped>", "");
    line = line.replace("-\n", "");
    line = line.replace('\n', " ");
    if line.contains('&') {
        line = line.replace("&quot;", "\"");
        line = line.replace("&amp;", "&");
        line = line.replace("&lt;", "<");
        line = line.replace("&gt;", ">");
    }

    let padded = format!(" {line} ");
    let symbols_split = re.symbols.replace_all(&padded, " ${1} ");
    let mut current = normalize_spaces(&symbols_split);
    loop {
        let padded = format!(" {current} ");
        let split_before = re.punct_before.replace_all(&padded, "${1} ${2} ");
        let split_after = re.punct_after.replace_all(&split_before, " ${1} ${2}");
        let next = normalize_spaces(&split_after);
        if next == current {
            break;
        }
        current = next;
    }
    let padded = format!(" {current} ");
    let dashes_split = re.digit_dash.replace_all(&padded, "${1} ${2} ");

    TokenSeq {
        tokens: dashes_split.split_whitespace().map(str::to_owned).collect(),
        source_text: text.to_owned(),
    }
}

fn normalize_spaces(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Multiset of n-grams with counts, keyed by order.
///
/// Word n-grams are keyed by the tokens joined with a single space (13a
/// tokens never contain whitespace); character n-grams by the character
/// substring itself. Keys are exact Unicode scalar sequences, no case
/// folding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    orders: Vec<HashMap<String, u32>>,
    totals: Vec<u32>,
}

impl NGramProfile {
    /// Maximum n-gram order held by this profile.
    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    /// Count map for order `k` (1-based). Panics if `k` is out of range.
    pub fn counts(&self, k: usize) -> &HashMap<String, u32> {
        &self.orders[k - 1]
    }

    /// Total number of n-grams of order `k`, duplicates included.
    pub fn total(&self, k: usize) -> u32 {
        self.totals[k - 1]
    }

    /// Sum over shared n-grams of order `k` of the clipped counts
    /// `min(self[g], other[g])`.
    pub fn clipped_matches(&self, other: &NGramProfile, k: usize) -> u32 {
        let (a, b) = (self.counts(k), other.counts(k));
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        small
            .iter()
            .map(|(g, &c)| large.get(g).map_or(0, |&d| c.min(d)))
            .sum()
    }

    fn from_units(units: &[&str], max_n: usize, joiner: &str) -> NGramProfile {
        let mut orders = Vec::with_capacity(max_n);
        let mut totals = Vec::with_capacity(max_n);
        for k in 1..=max_n {
            let n_grams = units.len().saturating_sub(k - 1);
            let mut counts: HashMap<String, u32> = HashMap::with_capacity(n_grams);
            if units.len() >= k {
                for window in units.windows(k) {
                    *counts.entry(window.join(joiner)).or_insert(0) += 1;
                }
            }
            orders.push(counts);
            totals.push(n_grams as u32);
        }
        NGramProfile { orders, totals }
    }
}

/// Word n-gram counts of orders `1..=max_n`.
pub fn word_ngrams(seq: &TokenSeq, max_n: usize) -> NGramProfile {
    assert!(max_n >= 1, "max_n must be at least 1");
    let units: Vec<&str> = seq.tokens().iter().map(String::as_str).collect();
    NGramProfile::from_units(&units, max_n, " ")
}

/// Character n-gram counts of orders `1..=max_n`.
///
/// With `include_space = false` every whitespace character is removed
/// before extraction, so the profile is invariant under re-spacing.
pub fn char_ngrams(text: &str, max_n: usize, include_space: bool) -> NGramProfile {
    assert!(max_n >= 1, "max_n must be at least 1");
    let chars: Vec<String> = text
        .chars()
        .filter(|c| include_space || !c.is_whitespace())
        .map(String::from)
        .collect();
    let units: Vec<&str> = chars.iter().map(String::as_str).collect();
    NGramProfile::from_units(&units, max_n, "")
}

/// Default maximum order for word n-grams (BLEU).
pub const WORD_NGRAM_ORDER: usize = 4;
/// Default maximum order for character n-grams (chrF).
pub const CHAR_NGRAM_ORDER: usize = 6;

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize_13a(text).tokens().to_vec()
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(toks("").is_empty());
    }

    #[test]
    fn punctuation_is_split() {
        assert_eq!(toks("Hello, world!"), ["Hello", ",", "world", "!"]);
    }

    #[test]
    fn whitespace_is_normalized() {
        assert_eq!(toks("a  b"), ["a", "b"]);
    }

    #[test]
    fn numbers_keep_internal_punctuation() {
        assert_eq!(toks("1,000.50 dollars"), ["1,000.50", "dollars"]);
        assert_eq!(toks("2-3 years"), ["2", "-", "3", "years"]);
        assert_eq!(toks("well-known fact"), ["well-known", "fact"]);
    }

    #[test]
    fn entities_are_unescaped() {
        assert_eq!(toks("a &amp; b"), ["a", "&", "b"]);
        assert_eq!(toks("&quot;quoted&quot;"), ["\"", "quoted", "\""]);
    }

    #[test]
    fn tokenization_is_idempotent_on_samples() {
        for text in [
            "Hello, world!",
            "U.S. economy.",
            "mixed: Tom's 2.5-fold gain (≈3x)!",
            "Привет, мир!",
            "tags <skipped> removed",
        ] {
            let first = toks(text);
            let second = toks(&first.join(" "));
            assert_eq!(first, second, "not idempotent on {text:?}");
        }
    }

    #[test]
    fn word_ngram_counts_match_hand_enumeration() {
        let seq = tokenize_13a("a b a");
        let profile = word_ngrams(&seq, 2);
        assert_eq!(profile.counts(1)["a"], 2);
        assert_eq!(profile.counts(1)["b"], 1);
        assert_eq!(profile.counts(2)["a b"], 1);
        assert_eq!(profile.counts(2)["b a"], 1);
        assert_eq!(profile.total(1), 3);
        assert_eq!(profile.total(2), 2);
    }

    #[test]
    fn word_ngrams_on_empty_and_short_sequences() {
        let empty = word_ngrams(&tokenize_13a(""), 4);
        for k in 1..=4 {
            assert_eq!(empty.total(k), 0);
            assert!(empty.counts(k).is_empty());
        }
        let single = word_ngrams(&tokenize_13a("a"), 4);
        assert_eq!(single.total(1), 1);
        for k in 2..=4 {
            assert_eq!(single.total(k), 0);
        }
    }

    #[test]
    fn char_ngram_counts_match_hand_enumeration() {
        let profile = char_ngrams("cat", 3, false);
        assert_eq!(profile.total(1), 3);
        assert_eq!(profile.total(2), 2);
        assert_eq!(profile.total(3), 1);
        assert_eq!(profile.counts(2)["ca"], 1);
        assert_eq!(profile.counts(2)["at"], 1);
        assert_eq!(profile.counts(3)["cat"], 1);

        let spaced = char_ngrams("a b", 2, false);
        assert_eq!(spaced.counts(1)["a"], 1);
        assert_eq!(spaced.counts(1)["b"], 1);
        assert_eq!(spaced.counts(2)["ab"], 1);

        let empty = char_ngrams("", 6, false);
        for k in 1..=6 {
            assert_eq!(empty.total(k), 0);
        }
    }

    #[test]
    fn clipped_matches_takes_minimum_counts() {
        let a = char_ngrams("aab", 1, false);
        let b = char_ngrams("aaab", 1, false);
        assert_eq!(a.clipped_matches(&b, 1), 3); // min(2,3) for 'a' + min(1,1) for 'b'
        assert_eq!(b.clipped_matches(&a, 1), 3);
    }
}
