//! Sentiment and emotion scoring with a lexicon baseline or precomputed scores.

use crate::analytics::quartiles;
use crate::corpus::{Category, Corpus};
use crate::lexicon::parse_weighted;
use crate::text::{content_hash, is_negation, tokens};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

pub const DEFAULT_SENTIMENT_THRESHOLD: f64 = 0.1;
pub const NEGATION_WINDOW: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("no precomputed signals for text hash {0}")]
    Missing(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad lexicon line {line} in {file}")]
    Lexicon { file: String, line: usize },
    #[error("bad precomputed record at line {line}: {msg}")]
    Record { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }
}

/// Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Fear,
    Joy,
    Optimism,
    Sadness,
    Other,
}

impl Emotion {
    pub const SCORED: [Emotion; 5] = [Emotion::Anger, Emotion::Fear, Emotion::Joy, Emotion::Optimism, Emotion::Sadness];
    pub const ALL: [Emotion; 6] =
        [Emotion::Anger, Emotion::Fear, Emotion::Joy, Emotion::Optimism, Emotion::Sadness, Emotion::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Optimism => "optimism",
            Emotion::Sadness => "sadness",
            Emotion::Other => "other",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub label: Sentiment,
    pub score: f64,
}

impl SentimentResult {
    pub fn from_score(score: f64, threshold: f64) -> Self {
        let score = score.clamp(-1.0, 1.0);
        let label = if score > threshold {
            Sentiment::Positive
        } else if score < -threshold {
            Sentiment::Negative
        } else {
            Sentiment::Neutral
        };
        SentimentResult { label, score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionResult {
    pub label: Emotion,
    pub scores: BTreeMap<Emotion, f64>,
}

impl EmotionResult {
    /// Arg-max over the scored emotions; all-zero scores give `Other`.
    pub fn from_scores(scores: BTreeMap<Emotion, f64>) -> Self {
        let mut label = Emotion::Other;
        let mut best = 0.0;
        for e in Emotion::SCORED {
            let s = scores.get(&e).copied().unwrap_or(0.0);
            if s > best {
                best = s;
                label = e;
            }
        }
        EmotionResult { label, scores }
    }
}

const POSITIVE: &[(&str, f64)] = &[
    ("love", 1.0), ("great", 0.8), ("good", 1.0), ("amazing", 1.0), ("awesome", 1.0), ("excellent", 1.0),
    ("thanks", 0.6), ("thank", 0.6), ("best", 0.8), ("happy", 0.8), ("beautiful", 0.8), ("brilliant", 0.9),
    ("wonderful", 1.0), ("nice", 0.6), ("true", 0.4), ("right", 0.3), ("agree", 0.5), ("hope", 0.6),
    ("blessed", 0.8), ("bless", 0.7), ("fantastic", 1.0), ("glad", 0.7), ("enjoy", 0.7), ("enjoyed", 0.7),
    ("like", 0.3), ("helpful", 0.7), ("informative", 0.6), ("interesting", 0.5), ("wow", 0.5), ("perfect", 0.9),
    ("inspiring", 0.8), ("courage", 0.6), ("brave", 0.7), ("trust", 0.5), ("peace", 0.6), ("win", 0.6),
];

const NEGATIVE: &[(&str, f64)] = &[
    ("hate", -1.0), ("bad", -1.0), ("terrible", -1.0), ("awful", -1.0), ("evil", -1.0), ("lies", -0.8),
    ("liar", -0.9), ("liars", -0.9), ("lie", -0.7), ("fake", -0.7), ("stupid", -0.9), ("wrong", -0.6),
    ("corrupt", -0.9), ("scary", -0.7), ("sad", -0.8), ("angry", -0.8), ("disgusting", -1.0), ("worst", -1.0),
    ("fraud", -0.8), ("sick", -0.6), ("crazy", -0.5), ("nonsense", -0.7), ("garbage", -0.9), ("traitor", -0.9),
    ("traitors", -0.9), ("kill", -0.8), ("death", -0.6), ("danger", -0.6), ("dangerous", -0.7), ("fear", -0.6),
    ("afraid", -0.6), ("poison", -0.8), ("destroy", -0.8), ("criminal", -0.8), ("shame", -0.7), ("idiot", -0.9),
];

const EMOTIONS: &[(Emotion, &[&str])] = &[
    (Emotion::Anger, &["angry", "hate", "furious", "outrage", "outraged", "rage", "disgusting", "traitor", "traitors", "criminal", "corrupt", "liars", "sick", "shame", "mad"]),
    (Emotion::Fear, &["afraid", "scared", "scary", "fear", "terrified", "danger", "dangerous", "worried", "panic", "threat", "poison", "frightening"]),
    (Emotion::Joy, &["love", "happy", "joy", "great", "amazing", "awesome", "wonderful", "fantastic", "enjoy", "enjoyed", "beautiful", "lol", "laugh", "glad", "blessed"]),
    (Emotion::Optimism, &["hope", "hopeful", "soon", "believe", "faith", "trust", "together", "future", "win", "victory", "awakening", "coming", "plan", "optimistic"]),
    (Emotion::Sadness, &["sad", "sorry", "cry", "crying", "tragic", "loss", "lost", "grief", "miss", "heartbreaking", "depressing", "unfortunately"]),
];

/// Token polarity and emotion lexicons.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalLexicons {
    pub polarity: HashMap<String, f64>,
    pub emotions: BTreeMap<Emotion, HashMap<String, f64>>,
    pub threshold: f64,
}

impl Default for SignalLexicons {
    fn default() -> Self {
        let polarity = POSITIVE.iter().chain(NEGATIVE).map(|(w, p)| (w.to_string(), *p)).collect();
        let emotions = EMOTIONS
            .iter()
            .map(|(e, words)| (*e, words.iter().map(|w| (w.to_string(), 1.0)).collect()))
            .collect();
        SignalLexicons { polarity, emotions, threshold: DEFAULT_SENTIMENT_THRESHOLD }
    }
}

impl SignalLexicons {
    /// Reads `sentiment.txt` and `emotion_<name>.txt` files from `dir`;
    /// missing files keep the built-in lists.
    pub fn load_dir(dir: &Path) -> Result<Self, SignalError> {
        let mut lex = SignalLexicons::default();
        let read = |name: &str| -> Result<Option<HashMap<String, f64>>, SignalError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            let src = std::fs::read_to_string(&path)?;
            let pairs = parse_weighted(&src).map_err(|line| SignalError::Lexicon { file: name.into(), line })?;
            Ok(Some(pairs.into_iter().collect()))
        };
        if let Some(p) = read("sentiment.txt")? {
            lex.polarity = p;
        }
        for e in Emotion::SCORED {
            if let Some(m) = read(&format!("emotion_{}.txt", e.as_str()))? {
                lex.emotions.insert(e, m);
            }
        }
        Ok(lex)
    }

    pub fn sentiment(&self, text: &str) -> SentimentResult {
        let toks = tokens(text);
        if toks.is_empty() {
            return SentimentResult { label: Sentiment::Neutral, score: 0.0 };
        }
        let mut since_negation = usize::MAX;
        let mut sum = 0.0;
        for t in &toks {
            if is_negation(t) {
                since_negation = 0;
                continue;
            }
            since_negation = since_negation.saturating_add(1);
            if let Some(p) = self.polarity.get(t.as_str()) {
                sum += if since_negation <= NEGATION_WINDOW { -p } else { *p };
            }
        }
        SentimentResult::from_score(sum / (toks.len() as f64).sqrt(), self.threshold)
    }

    pub fn emotion(&self, text: &str) -> EmotionResult {
        let toks = tokens(text);
        let mut scores: BTreeMap<Emotion, f64> = Emotion::SCORED.iter().map(|e| (*e, 0.0)).collect();
        if !toks.is_empty() {
            for (e, lex) in &self.emotions {
                let hits: f64 = toks.iter().filter_map(|t| lex.get(t.as_str())).sum();
                scores.insert(*e, hits / toks.len() as f64);
            }
        }
        EmotionResult::from_scores(scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSignals {
    pub sentiment: SentimentResult,
    pub emotion: EmotionResult,
}

/// Externally computed signals keyed by the SHA-256 of the text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrecomputedSignals {
    entries: HashMap<String, TextSignals>,
    threshold: f64,
}

#[derive(Deserialize)]
struct PrecomputedRecord {
    hash: Option<String>,
    text: Option<String>,
    sentiment: f64,
    #[serde(default)]
    emotions: BTreeMap<Emotion, f64>,
}

impl PrecomputedSignals {
    pub fn new(threshold: f64) -> Self {
        PrecomputedSignals { entries: HashMap::new(), threshold }
    }

    pub fn insert(&mut self, text: &str, sentiment: f64, emotions: BTreeMap<Emotion, f64>) {
        self.insert_hash(content_hash(text), sentiment, emotions);
    }

    fn insert_hash(&mut self, hash: String, sentiment: f64, emotions: BTreeMap<Emotion, f64>) {
        let signals = TextSignals {
            sentiment: SentimentResult::from_score(sentiment, self.threshold),
            emotion: EmotionResult::from_scores(emotions),
        };
        self.entries.insert(hash, signals);
    }

    /// JSONL of `{"hash"|"text", "sentiment": score, "emotions": {name: score}}`.
    pub fn read_jsonl<R: BufRead>(r: R, threshold: f64) -> Result<Self, SignalError> {
        let mut out = PrecomputedSignals::new(threshold);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PrecomputedRecord =
                serde_json::from_str(&line).map_err(|e| SignalError::Record { line: i + 1, msg: e.to_string() })?;
            let hash = match (rec.hash, rec.text) {
                (Some(h), _) => h,
                (None, Some(t)) => content_hash(&t),
                (None, None) => return Err(SignalError::Record { line: i + 1, msg: "needs hash or text".into() }),
            };
            out.insert_hash(hash, rec.sentiment, rec.emotions);
        }
        Ok(out)
    }

    pub fn get(&self, text: &str) -> Result<TextSignals, SignalError> {
        let h = content_hash(text);
        self.entries.get(&h).cloned().ok_or(SignalError::Missing(h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalBackend {
    Lexicon(Arc<SignalLexicons>),
    Precomputed(Arc<PrecomputedSignals>),
}

impl Default for SignalBackend {
    fn default() -> Self {
        SignalBackend::Lexicon(Arc::new(SignalLexicons::default()))
    }
}

pub fn classify_sentiment(text: &str, backend: &SignalBackend) -> Result<SentimentResult, SignalError> {
    match backend {
        SignalBackend::Lexicon(l) => Ok(l.sentiment(text)),
        SignalBackend::Precomputed(p) => p.get(text).map(|s| s.sentiment),
    }
}

pub fn classify_emotion(text: &str, backend: &SignalBackend) -> Result<EmotionResult, SignalError> {
    match backend {
        SignalBackend::Lexicon(l) => Ok(l.emotion(text)),
        SignalBackend::Precomputed(p) => p.get(text).map(|s| s.emotion),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentSignals {
    pub comment_id: String,
    pub sentiment: SentimentResult,
    pub emotion: EmotionResult,
}

/// Scores every comment of the corpus, in corpus order.
pub fn score_corpus(corpus: &Corpus, backend: &SignalBackend) -> Result<Vec<CommentSignals>, SignalError> {
    let one = |c: &crate::Comment| -> Result<CommentSignals, SignalError> {
        Ok(CommentSignals {
            comment_id: c.comment_id.clone(),
            sentiment: classify_sentiment(&c.text, backend)?,
            emotion: classify_emotion(&c.text, backend)?,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        corpus.comments().par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        corpus.comments().iter().map(one).collect()
    }
}

/// Label proportions among comments written by a dataset's active users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile {
    pub category: Category,
    /// Third quartile of per-user comment counts.
    pub q3: f64,
    pub active_users: usize,
    pub active_comments: usize,
    pub sentiment: BTreeMap<Sentiment, f64>,
    pub emotion: BTreeMap<Emotion, f64>,
}

/// Users whose comment count strictly exceeds the type-7 third quartile.
pub fn active_users<'a, I: IntoIterator<Item = &'a str>>(authors: I) -> (f64, Vec<String>) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in authors {
        *counts.entry(a).or_insert(0) += 1;
    }
    if counts.is_empty() {
        return (0.0, Vec::new());
    }
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    let q3 = quartiles(&values).expect("non-empty").q3;
    (q3, counts.into_iter().filter(|(_, c)| *c as f64 > q3).map(|(a, _)| a.to_string()).collect())
}

/// One profile per dataset present in `corpus`. Comments without signals are
/// ignored.
pub fn active_user_signal_profile(corpus: &Corpus, signals: &[CommentSignals]) -> Vec<SignalProfile> {
    let by_id: HashMap<&str, &CommentSignals> = signals.iter().map(|s| (s.comment_id.as_str(), s)).collect();
    corpus
        .categories()
        .into_iter()
        .map(|cat| {
            let comments: Vec<&crate::Comment> =
                corpus.comments().iter().filter(|c| corpus.category_of(c) == Some(cat)).collect();
            let (q3, active) = active_users(comments.iter().map(|c| c.author_id.as_str()));
            let active_set: std::collections::HashSet<&str> = active.iter().map(String::as_str).collect();
            let mut sentiment: BTreeMap<Sentiment, f64> = Sentiment::ALL.iter().map(|s| (*s, 0.0)).collect();
            let mut emotion: BTreeMap<Emotion, f64> = Emotion::ALL.iter().map(|e| (*e, 0.0)).collect();
            let mut n = 0usize;
            for c in comments.iter().filter(|c| active_set.contains(c.author_id.as_str())) {
                if let Some(s) = by_id.get(c.comment_id.as_str()) {
                    n += 1;
                    *sentiment.get_mut(&s.sentiment.label).unwrap() += 1.0;
                    *emotion.get_mut(&s.emotion.label).unwrap() += 1.0;
                }
            }
            if n > 0 {
                sentiment.values_mut().for_each(|v| *v /= n as f64);
                emotion.values_mut().for_each(|v| *v /= n as f64);
            }
            SignalProfile { category: cat, q3, active_users: active.len(), active_comments: n, sentiment, emotion }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lex() -> SignalBackend {
        SignalBackend::default()
    }

    #[test]
    fn sentiment_examples() {
        let empty = classify_sentiment("", &lex()).unwrap();
        assert_eq!((empty.label, empty.score), (Sentiment::Neutral, 0.0));
        assert_eq!(classify_sentiment("I love this", &lex()).unwrap().label, Sentiment::Positive);
        let neg = classify_sentiment("not good", &lex()).unwrap();
        // -1 / sqrt(2)
        assert!((neg.score + 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(neg.label, Sentiment::Negative);
    }

    #[test]
    fn negation_window_is_three() {
        let l = SignalLexicons::default();
        assert!(l.sentiment("not a b good").score < 0.0);
        assert!(l.sentiment("not a b c good").score > 0.0);
    }

    #[test]
    fn emotion_examples() {
        assert_eq!(classify_emotion("joy happy love", &lex()).unwrap().label, Emotion::Joy);
        assert_eq!(classify_emotion("the video", &lex()).unwrap().label, Emotion::Other);
        assert_eq!(classify_emotion("furious happy", &lex()).unwrap().label, Emotion::Anger);
    }

    #[test]
    fn precomputed_miss_is_error() {
        let mut p = PrecomputedSignals::new(0.1);
        p.insert("known", 0.5, BTreeMap::from([(Emotion::Fear, 0.9)]));
        let b = SignalBackend::Precomputed(Arc::new(p));
        assert_eq!(classify_sentiment("known", &b).unwrap().label, Sentiment::Positive);
        assert_eq!(classify_emotion("known", &b).unwrap().label, Emotion::Fear);
        assert!(matches!(classify_sentiment("other", &b), Err(SignalError::Missing(_))));
    }

    #[test]
    fn active_users_strictly_above_q3() {
        let authors = ["a", "b", "c", "d", "d", "d", "d", "d", "d", "d", "d", "d"];
        let (q3, active) = active_users(authors);
        // counts [1, 1, 1, 9]: h = 3 * 0.75 = 2.25, so q3 = 1 + 0.25 * (9 - 1)
        assert_eq!(q3, 3.0);
        assert_eq!(active, vec!["d".to_string()]);
        let (_, none) = active_users(["a", "b", "a", "b"]);
        assert!(none.is_empty());
    }

    proptest! {
        #[test]
        fn antisymmetric_swap(picks in proptest::collection::vec(0usize..4, 1..12), filler in 0usize..5) {
            let pairs = [("love", "hate"), ("good", "bad"), ("awesome", "terrible"), ("excellent", "awful")];
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (i, &p) in picks.iter().enumerate() {
                pos.push(pairs[p].0);
                neg.push(pairs[p].1);
                if i % 2 == 0 {
                    for _ in 0..filler {
                        pos.push("video");
                        neg.push("video");
                    }
                }
            }
            let l = SignalLexicons::default();
            let a = l.sentiment(&pos.join(" ")).score;
            let b = l.sentiment(&neg.join(" ")).score;
            prop_assert!((a + b).abs() < 1e-12);
        }
    }
}
