//! Heuristic labelling functions for irrelevant-comment detection.

use crate::lexicon::{self, owned};
use crate::text;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vote {
    Irrelevant,
    Relevant,
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVote {
    pub function_id: String,
    pub vote: Vote,
}

/// Word lists consulted by the labelling functions. The shipped defaults are
/// hand-assembled from common spam and filler patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterLexicons {
    pub promo_phrases: Vec<String>,
    pub ambiguous_shorts: Vec<String>,
    pub meaningful_shorts: Vec<String>,
    pub self_promo: Vec<String>,
}

impl Default for FilterLexicons {
    fn default() -> Self {
        FilterLexicons {
            promo_phrases: owned(&[
                "subscribe", "donate", "giveaway", "promo code", "discount code", "click the link",
                "link in bio", "free followers", "free subscribers", "buy now", "limited offer",
                "earn money", "work from home", "dm me", "whatsapp", "telegram", "crypto signals",
                "visit now", "sign up", "use code",
            ]),
            ambiguous_shorts: owned(&[
                "lol", "lmao", "lmfao", "rofl", "haha", "hahaha", "hehe", "ok", "okay", "k", "hmm",
                "hm", "wow", "omg", "xd", "yo", "first", "nice", "cool", "bruh", "meh", "lol ok",
                "oh", "ah", "yay", "whoa", "same", "this", "what",
            ]),
            meaningful_shorts: owned(&[
                "agree", "i agree", "totally agree", "great point", "good point", "thank you",
                "thanks", "well said", "exactly", "so true", "true", "disagree", "i disagree",
                "wrong", "nonsense", "amen", "truth", "facts", "not true", "spot on", "absolutely",
                "false", "lies", "fake", "thank you so much",
            ]),
            self_promo: owned(&[
                "support my channel", "my channel", "sub to me", "subscribe to my", "check out my",
                "check my", "follow me", "sub4sub", "sub for sub", "my videos", "my page",
                "visit my", "watch my",
            ]),
        }
    }
}

impl FilterLexicons {
    /// Reads `promo.txt`, `ambiguous.txt`, `meaningful.txt` and `self_promo.txt`
    /// from `dir`; missing files keep the built-in list.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut lex = FilterLexicons::default();
        let slots: [(&str, &mut Vec<String>); 4] = [
            ("promo.txt", &mut lex.promo_phrases),
            ("ambiguous.txt", &mut lex.ambiguous_shorts),
            ("meaningful.txt", &mut lex.meaningful_shorts),
            ("self_promo.txt", &mut lex.self_promo),
        ];
        for (name, slot) in slots {
            let p = dir.join(name);
            if p.exists() {
                *slot = lexicon::load_list(&p)?;
            }
        }
        Ok(lex)
    }
}

pub const FUNCTION_IDS: &[&str] = &[
    "LF_single_char_or_emoji",
    "LF_url_only",
    "LF_promo_phrase",
    "LF_ambiguous_short",
    "LF_self_promo",
    "LF_repeated_token",
    "LF_meaningful_short",
    "LF_link_heavy",
    "LF_substantive",
];

fn contains_phrase(toks: &[String], phrase: &str) -> bool {
    let needle = text::tokens(phrase);
    text::find_phrase(toks, &needle).is_some()
}

fn is_laugh(tok: &str) -> bool {
    let t = tok.trim_end_matches('h');
    t.len() >= 2
        && (t.as_bytes().chunks(2).all(|c| c == b"ha") || t.as_bytes().chunks(2).all(|c| c == b"he"))
}

fn single_char_or_emoji(raw: &str) -> Vote {
    let content: Vec<char> = raw.chars().filter(|c| !c.is_whitespace()).collect();
    if content.len() <= 1 {
        return Vote::Irrelevant;
    }
    let no_alnum = content.iter().all(|c| !c.is_ascii_alphanumeric());
    if no_alnum && content.len() < 4 {
        Vote::Irrelevant
    } else {
        Vote::Abstain
    }
}

fn url_only(raw: &str) -> Vote {
    if text::url_spans(raw).is_empty() {
        return Vote::Abstain;
    }
    if text::raw_tokens(&text::strip_urls(raw)).len() < 2 {
        Vote::Irrelevant
    } else {
        Vote::Abstain
    }
}

fn link_heavy(raw: &str) -> Vote {
    let spans = text::url_spans(raw);
    let url_bytes: usize = spans.iter().map(|(a, b)| b - a).sum();
    if spans.len() >= 2 || (!spans.is_empty() && url_bytes * 2 > raw.len()) {
        Vote::Irrelevant
    } else {
        Vote::Abstain
    }
}

fn repeated_token(raw: &str, toks: &[String]) -> Vote {
    if toks.len() >= 3 {
        let mut uniq = toks.to_vec();
        uniq.sort();
        uniq.dedup();
        if uniq.len() * 3 <= toks.len() {
            return Vote::Irrelevant;
        }
    }
    // one glyph repeated, e.g. "!!!!!!" or a row of identical emoji
    let content: Vec<char> = raw.chars().filter(|c| !c.is_whitespace()).collect();
    if content.len() >= 3 && content.iter().all(|c| *c == content[0]) {
        return Vote::Irrelevant;
    }
    Vote::Abstain
}

/// Runs every labelling function on `comment_text`, in [`FUNCTION_IDS`] order.
pub fn apply_label_functions(comment_text: &str, lex: &FilterLexicons) -> Vec<LabelVote> {
    let raw = comment_text.trim();
    let toks = text::tokens(raw);
    let joined = toks.join(" ");
    let no_url_toks = text::tokens(&text::strip_urls(raw));

    let ambiguous = !toks.is_empty()
        && toks.len() <= 3
        && (lex.ambiguous_shorts.contains(&joined)
            || toks.iter().all(|t| lex.ambiguous_shorts.contains(t) || is_laugh(t)));
    let meaningful = !toks.is_empty() && toks.len() <= 5 && lex.meaningful_shorts.contains(&joined);
    let promo = lex.promo_phrases.iter().any(|p| contains_phrase(&toks, p));
    let self_promo = lex.self_promo.iter().any(|p| contains_phrase(&toks, p));
    let alpha_words = no_url_toks
        .iter()
        .filter(|t| t.chars().filter(|c| c.is_alphabetic()).count() >= 3)
        .count();
    let substantive = no_url_toks.len() >= 6 && alpha_words >= 4 && !promo && !self_promo;

    let votes = [
        single_char_or_emoji(raw),
        url_only(raw),
        if promo { Vote::Irrelevant } else { Vote::Abstain },
        if ambiguous { Vote::Irrelevant } else { Vote::Abstain },
        if self_promo { Vote::Irrelevant } else { Vote::Abstain },
        repeated_token(raw, &toks),
        if meaningful { Vote::Relevant } else { Vote::Abstain },
        link_heavy(raw),
        if substantive { Vote::Relevant } else { Vote::Abstain },
    ];
    FUNCTION_IDS
        .iter()
        .zip(votes)
        .map(|(id, vote)| LabelVote { function_id: id.to_string(), vote })
        .collect()
}
