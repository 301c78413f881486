//! Explicit agreement markers and rule-based linguistic features.

use super::StanceLabel;
use crate::lexicon::{owned, parse_list};
use crate::text::{find_phrase, is_negation, tokens};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerLexicons {
    pub agree: Vec<Vec<String>>,
    pub disagree: Vec<Vec<String>>,
    /// `(affirming, opposing)` word pairs.
    pub antonyms: Vec<(String, String)>,
}

fn phrases(list: &[String]) -> Vec<Vec<String>> {
    list.iter().map(|p| tokens(p)).filter(|t| !t.is_empty()).collect()
}

impl Default for MarkerLexicons {
    fn default() -> Self {
        let agree = owned(&[
            "agree", "i agree", "exactly", "well said", "so true", "absolutely", "spot on", "facts", "amen",
            "you're right", "you are right", "this is true", "100% true", "totally true", "couldn't agree more",
            "couldn't have said it better", "preach", "wake up", "open your eyes",
        ]);
        let disagree = owned(&[
            "disagree", "nonsense", "you're wrong", "you are wrong", "that's false", "that is false", "not true",
            "that's wrong", "debunked", "ridiculous", "rubbish", "bs", "complete lie", "utter lie", "misinformation",
            "nope", "get a grip", "stop spreading", "is a myth", "is a hoax", "not real", "never happened",
            "no evidence",
        ]);
        let antonyms = [
            ("real", "fake"),
            ("true", "false"),
            ("truth", "lie"),
            ("truth", "lies"),
            ("proven", "debunked"),
            ("proof", "hoax"),
            ("fact", "myth"),
            ("exists", "myth"),
            ("confirmed", "disproven"),
            ("legit", "scam"),
        ];
        MarkerLexicons {
            agree: phrases(&agree),
            disagree: phrases(&disagree),
            antonyms: antonyms.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }
}

impl MarkerLexicons {
    /// Reads `agree.txt`, `disagree.txt` and `antonyms.txt` (two words per
    /// line, affirming first) from `dir`; missing files keep the defaults.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut lex = MarkerLexicons::default();
        let read = |name: &str| -> std::io::Result<Option<Vec<String>>> {
            let p = dir.join(name);
            if p.exists() {
                Ok(Some(parse_list(&std::fs::read_to_string(p)?)))
            } else {
                Ok(None)
            }
        };
        if let Some(l) = read("agree.txt")? {
            lex.agree = phrases(&l);
        }
        if let Some(l) = read("disagree.txt")? {
            lex.disagree = phrases(&l);
        }
        if let Some(l) = read("antonyms.txt")? {
            lex.antonyms = l
                .iter()
                .filter_map(|line| {
                    let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
                    Some((it.next()?.to_string(), it.next()?.to_string()))
                })
                .collect();
        }
        Ok(lex)
    }
}

fn earliest(toks: &[String], list: &[Vec<String>]) -> Option<(usize, usize)> {
    list.iter()
        .enumerate()
        .filter_map(|(i, p)| find_phrase(toks, p).map(|pos| (pos, i)))
        .min_by(|a, b| a.0.cmp(&b.0).then(list[b.1].len().cmp(&list[a.1].len())))
}

/// Direction and marker of the first explicit agreement or disagreement in
/// the text. A negated agreement ("don't agree") is a disagreement.
pub fn detect_explicit(text: &str, lex: &MarkerLexicons) -> Option<(StanceLabel, String)> {
    let toks = tokens(text);
    let dis = earliest(&toks, &lex.disagree);
    let agr = earliest(&toks, &lex.agree);
    // the earliest marker wins; disagreement takes ties
    let (pos, i) = match (dis, agr) {
        (Some((dp, di)), Some((ap, _))) if dp <= ap => return Some((StanceLabel::Against, lex.disagree[di].join(" "))),
        (Some((_, di)), None) => return Some((StanceLabel::Against, lex.disagree[di].join(" "))),
        (_, Some(a)) => a,
        (None, None) => return None,
    };
    let marker = lex.agree[i].join(" ");
    if toks[pos.saturating_sub(2)..pos].iter().any(|t| is_negation(t)) {
        return Some((StanceLabel::Against, marker));
    }
    Some((StanceLabel::Favour, marker))
}

pub const NEGATION_PENALTY: f64 = -0.5;
pub const ANTONYM_PENALTY: f64 = -0.3;
pub const AFFIRMATION_BONUS: f64 = 0.3;
pub const INTENSITY: f64 = 0.2;

/// Uppercase share of alphabetic characters, if there are at least 10.
fn uppercase_emphasis(text: &str) -> bool {
    let letters: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 10 && letters.iter().filter(|c| c.is_uppercase()).count() * 10 >= letters.len() * 6
}

fn punctuation_run(text: &str) -> bool {
    let mut run = 0;
    for c in text.chars() {
        if c == '!' || c == '?' {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

/// Additive rule features around topic keyword tokens, clamped to [−1, 1].
pub fn rule_signal(text: &str, keyword_tokens: &[String], lex: &MarkerLexicons, window: usize) -> f64 {
    let toks = tokens(text);
    let hits: Vec<usize> = (0..toks.len()).filter(|&i| keyword_tokens.contains(&toks[i])).collect();
    let near = |pred: &dyn Fn(&str) -> bool| {
        hits.iter().any(|&h| {
            let lo = h.saturating_sub(window);
            let hi = (h + window + 1).min(toks.len());
            (lo..hi).any(|j| j != h && pred(&toks[j]))
        })
    };
    // an affirming word with a negation up to two tokens before it ("not real") reads as its antonym
    let negated: Vec<bool> =
        (0..toks.len()).map(|i| (i.saturating_sub(2)..i).any(|j| is_negation(&toks[j]))).collect();
    let affirming = |i: usize| lex.antonyms.iter().any(|(a, _)| *a == toks[i]);
    let opposing = |i: usize| lex.antonyms.iter().any(|(_, b)| *b == toks[i]);
    let near_idx = |pred: &dyn Fn(usize) -> bool| {
        hits.iter().any(|&h| {
            let lo = h.saturating_sub(window);
            let hi = (h + window + 1).min(toks.len());
            (lo..hi).any(|j| j != h && pred(j))
        })
    };
    let mut score = 0.0;
    if near(&|t| is_negation(t)) {
        score += NEGATION_PENALTY;
    }
    if near_idx(&|j| opposing(j) || (affirming(j) && negated[j])) {
        score += ANTONYM_PENALTY;
    }
    if near_idx(&|j| affirming(j) && !negated[j]) {
        score += AFFIRMATION_BONUS;
    }
    let sign = if score > 0.0 {
        1.0
    } else if score < 0.0 {
        -1.0
    } else {
        0.0
    };
    if punctuation_run(text) {
        score += sign * INTENSITY;
    }
    if uppercase_emphasis(text) {
        score += sign * INTENSITY;
    }
    score.clamp(-1.0, 1.0)
}
