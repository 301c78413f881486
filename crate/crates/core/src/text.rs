//! Tokenisation shared by every text-consuming stage.

use regex::Regex;
use std::sync::LazyLock;

static URL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:https?://|www\.)\S+|\b[a-z0-9][a-z0-9-]*\.(?:com|net|org|co|io|ly|info|biz|tv|me|gg)(?:/\S*)?\b",
    )
    .expect("url regex")
});

/// Collapses all runs of Unicode whitespace into single spaces and trims.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Whitespace split with leading/trailing punctuation stripped, original case.
pub fn raw_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(strip_punct)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Lowercased word tokens.
pub fn tokens(text: &str) -> Vec<String> {
    raw_tokens(text).into_iter().map(str::to_lowercase).collect()
}

/// Byte spans of URL-looking substrings.
pub fn url_spans(text: &str) -> Vec<(usize, usize)> {
    URL_RE.find_iter(text).map(|m| (m.start(), m.end())).collect()
}

pub fn strip_urls(text: &str) -> String {
    URL_RE.replace_all(text, " ").into_owned()
}

/// True when `needle` (already tokenised, lowercase) occurs as a contiguous
/// token run in `haystack`. Returns the start index of the first match.
pub fn find_phrase(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

pub const NEGATIONS: &[&str] = &[
    "not", "no", "never", "nothing", "neither", "nor", "none", "without", "cannot", "nobody",
];

pub fn is_negation(token: &str) -> bool {
    NEGATIONS.contains(&token) || token.ends_with("n't") || token.ends_with("n’t")
}

/// Content hash used to key precomputed vectors and scores.
pub fn content_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_strip_edge_punctuation() {
        assert_eq!(tokens("Hello, World!!  it's"), vec!["hello", "world", "it's"]);
        assert!(tokens("  ... !! ").is_empty());
    }

    #[test]
    fn urls_are_found() {
        assert_eq!(url_spans("see http://x.co now").len(), 1);
        assert_eq!(url_spans("visit www.example.org/page").len(), 1);
        assert_eq!(url_spans("mysite.com").len(), 1);
        assert!(url_spans("no links here").is_empty());
        assert_eq!(strip_urls("a http://x.co b").split_whitespace().count(), 2);
    }

    #[test]
    fn phrase_search() {
        let hay = tokens("the deep state is real");
        assert_eq!(find_phrase(&hay, &tokens("deep state")), Some(1));
        assert_eq!(find_phrase(&hay, &tokens("state deep")), None);
    }

    #[test]
    fn negation_forms() {
        assert!(is_negation("not"));
        assert!(is_negation("don't"));
        assert!(!is_negation("note"));
    }
}
