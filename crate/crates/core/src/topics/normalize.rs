//! Transcript clean-up: boilerplate removal and sentence reconstruction.

use crate::lexicon::owned;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: usize = 40;

pub fn default_boilerplate() -> Vec<String> {
    owned(&[
        "don't forget to subscribe",
        "like and subscribe",
        "hit the bell",
        "hit that bell icon",
        "smash that like button",
        "welcome back to my channel",
        "welcome back to the channel",
        "thanks for watching",
        "thank you for watching",
        "this video is for educational purposes only",
        "link in the description",
        "links in the description",
        "leave a comment below",
        "subscribe to my channel",
        "turn on notifications",
    ])
}

/// Compiled case-insensitive matcher over a boilerplate phrase list.
#[derive(Debug, Clone)]
pub struct Boilerplate {
    re: Option<Regex>,
}

impl Boilerplate {
    pub fn new(phrases: &[String]) -> Self {
        let mut parts: Vec<String> = phrases
            .iter()
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.split_whitespace().map(regex::escape).collect::<Vec<_>>().join(r"\s+"))
            .collect();
        // longest first so overlapping phrases remove the larger span
        parts.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let re = (!parts.is_empty()).then(|| {
            Regex::new(&format!(r"(?i)(?:^|\b)(?:{})(?:\b|$)", parts.join("|"))).expect("escaped boilerplate")
        });
        Boilerplate { re }
    }

    pub fn strip(&self, text: &str) -> String {
        match &self.re {
            Some(re) => re.replace_all(text, " ").into_owned(),
            None => text.to_string(),
        }
    }
}

impl Default for Boilerplate {
    fn default() -> Self {
        Boilerplate::new(&default_boilerplate())
    }
}

pub trait SentenceSplitter {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Splits after `.`, `!` or `?`; unpunctuated text is cut into fixed token windows.
#[derive(Debug, Clone, Copy)]
pub struct PunctuationSplitter {
    pub window: usize,
}

impl Default for PunctuationSplitter {
    fn default() -> Self {
        PunctuationSplitter { window: DEFAULT_WINDOW }
    }
}

impl SentenceSplitter for PunctuationSplitter {
    fn split(&self, text: &str) -> Vec<String> {
        if text.contains(['.', '!', '?']) {
            let mut out = Vec::new();
            let mut cur = String::new();
            for ch in text.chars() {
                cur.push(ch);
                if matches!(ch, '.' | '!' | '?') {
                    let s = crate::text::normalize_whitespace(&cur);
                    if s.chars().any(|c| c.is_alphanumeric()) {
                        out.push(s);
                    }
                    cur.clear();
                }
            }
            let s = crate::text::normalize_whitespace(&cur);
            if s.chars().any(|c| c.is_alphanumeric()) {
                out.push(format!("{s}."));
            }
            out
        } else {
            let toks: Vec<&str> = text.split_whitespace().collect();
            toks.chunks(self.window.max(1)).map(|w| format!("{}.", w.join(" "))).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub video_id: String,
    pub raw: String,
    pub normalized: String,
    /// Byte offset of each sentence start in `normalized`.
    pub sentence_starts: Vec<usize>,
}

impl TranscriptDoc {
    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        let ends = self.sentence_starts.iter().skip(1).map(|e| e - 1).chain(std::iter::once(self.normalized.len()));
        self.sentence_starts.iter().zip(ends).map(|(&s, e)| &self.normalized[s..e])
    }
}

pub fn normalize_transcript(
    video_id: &str,
    raw: &str,
    boilerplate: &Boilerplate,
    splitter: &dyn SentenceSplitter,
) -> TranscriptDoc {
    let stripped = crate::text::normalize_whitespace(&boilerplate.strip(raw));
    let sentences = splitter.split(&stripped);
    let mut normalized = String::new();
    let mut starts = Vec::with_capacity(sentences.len());
    for s in &sentences {
        if !normalized.is_empty() {
            normalized.push(' ');
        }
        starts.push(normalized.len());
        normalized.push_str(s);
    }
    TranscriptDoc { video_id: video_id.to_string(), raw: raw.to_string(), normalized, sentence_starts: starts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(raw: &str) -> TranscriptDoc {
        normalize_transcript("v", raw, &Boilerplate::default(), &PunctuationSplitter::default())
    }

    #[test]
    fn boilerplate_removed_case_insensitively() {
        let d = norm("So the pyramids were built. Don't Forget To Subscribe and the stones were cut.");
        assert!(!d.normalized.to_lowercase().contains("subscribe"));
        assert!(d.normalized.contains("pyramids"));
        assert!(d.normalized.contains("stones were cut"));
    }

    #[test]
    fn content_words_survive() {
        // "subscribers" is not a boilerplate phrase even though it shares a prefix
        let d = norm("the channel has many subscribers who like and subscribe daily");
        assert!(d.normalized.contains("subscribers"));
        assert!(!d.normalized.contains("like and subscribe"));
    }

    #[test]
    fn unpunctuated_text_gets_windows() {
        let raw: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let d = norm(&raw.join(" "));
        assert_eq!(d.sentence_starts.len(), 3);
        assert_eq!(d.sentences().count(), 3);
        assert!(d.sentences().next().unwrap().ends_with("w39."));
    }

    #[test]
    fn empty_transcript() {
        let d = norm("");
        assert_eq!(d.normalized, "");
        assert!(d.sentence_starts.is_empty());
    }

    #[test]
    fn sentences_follow_punctuation() {
        let d = norm("First one. Second one! Third?");
        let s: Vec<&str> = d.sentences().collect();
        assert_eq!(s, vec!["First one.", "Second one!", "Third?"]);
    }
}
