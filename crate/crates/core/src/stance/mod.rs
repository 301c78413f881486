//! Topic-anchored stance detection for top-level comments and replies.

pub mod eval;
pub mod kb;
pub mod markers;

pub use eval::{evaluate_stance, stance_summary, ClassReport, ClassRow, StanceSummaryRow};
pub use kb::{kb_entailment, parse_kb, ClaimPolarity, KbSet, KnowledgeBase};
pub use markers::{detect_explicit, rule_signal, MarkerLexicons};

use crate::corpus::{Comment, Corpus, Thread};
use crate::embed::{cosine, EmbedError, EmbeddingBackend, EmbeddingVector};
use crate::topics::{Stopwords, TopicModelReport};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum StanceError {
    #[error("knowledge base '{0}' has no claims")]
    EmptyKb(String),
    #[error("bad knowledge-base line {line} in {file}")]
    KbParse { file: String, line: usize },
    #[error("gold set is empty")]
    EmptyGold,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StanceLabel {
    Favour,
    Against,
    Neutral,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 3] = [StanceLabel::Favour, StanceLabel::Against, StanceLabel::Neutral];

    pub fn flipped(self) -> Self {
        match self {
            StanceLabel::Favour => StanceLabel::Against,
            StanceLabel::Against => StanceLabel::Favour,
            StanceLabel::Neutral => StanceLabel::Neutral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Favour => "Favour",
            StanceLabel::Against => "Against",
            StanceLabel::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StanceLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "favour" | "favor" => Ok(StanceLabel::Favour),
            "against" => Ok(StanceLabel::Against),
            "neutral" | "none" => Ok(StanceLabel::Neutral),
            other => Err(format!("unknown stance '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Agree,
    Disagree,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anchor {
    Topic(i32),
    ParentComment(String),
    Referenced(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceEvidence {
    pub explicit_marker: Option<(String, StanceLabel)>,
    pub similarity: f64,
    pub kb_entailment: Option<f64>,
    pub rule_score: f64,
    pub combined: f64,
    pub anchor: Anchor,
    /// Relation to the anchor comment, for replies.
    pub relation: Option<Relation>,
    /// A leading @-mention matched no earlier participant.
    pub mention_unresolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceResult {
    pub comment_id: String,
    pub label: StanceLabel,
    pub evidence: StanceEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StanceConfig {
    pub w_similarity: f64,
    pub w_kb: f64,
    pub w_rule: f64,
    pub tau: f64,
    pub tau_reply: f64,
    pub window: usize,
    /// Minimum |cosine| for a comment clause to count as echoing a claim.
    pub kb_min_match: f64,
}

impl Default for StanceConfig {
    fn default() -> Self {
        StanceConfig { w_similarity: 0.4, w_kb: 0.4, w_rule: 0.2, tau: 0.15, tau_reply: 0.3, window: 3, kb_min_match: 0.5 }
    }
}

impl StanceConfig {
    /// Weighted sum; without a KB the remaining weights are rescaled to sum to 1.
    pub fn combine(&self, similarity: f64, kb: Option<f64>, rule: f64) -> f64 {
        match kb {
            Some(k) => self.w_similarity * similarity + self.w_kb * k + self.w_rule * rule,
            None => {
                let total = self.w_similarity + self.w_rule;
                if total <= 0.0 {
                    0.0
                } else {
                    (self.w_similarity * similarity + self.w_rule * rule) / total
                }
            }
        }
    }

    pub fn label(&self, combined: f64) -> StanceLabel {
        if combined > self.tau {
            StanceLabel::Favour
        } else if combined < -self.tau {
            StanceLabel::Against
        } else {
            StanceLabel::Neutral
        }
    }
}

/// Topic representation used as the top-level anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicContext {
    pub topic_id: i32,
    pub keywords: Vec<String>,
    pub keyword_tokens: Vec<String>,
    pub embedding: EmbeddingVector,
}

impl TopicContext {
    /// Embeds the concatenation of the top ten keyword phrases.
    pub fn new(topic_id: i32, keywords: &[String], backend: &EmbeddingBackend) -> Self {
        let top: Vec<String> = keywords.iter().take(10).cloned().collect();
        let mut toks: Vec<String> = Vec::new();
        for p in &top {
            for t in crate::text::tokens(p) {
                if !toks.contains(&t) {
                    toks.push(t);
                }
            }
        }
        TopicContext { topic_id, embedding: backend.embed_or_zero(&top.join(" ")), keywords: top, keyword_tokens: toks }
    }

    pub fn empty(dim: usize) -> Self {
        TopicContext { topic_id: -1, keywords: Vec::new(), keyword_tokens: Vec::new(), embedding: EmbeddingVector::zeros(dim) }
    }
}

/// Cosine of the comment against the topic representation; 0 for zero vectors.
pub fn similarity_signal(comment: &EmbeddingVector, topic: &EmbeddingVector) -> f64 {
    if comment.is_zero() || topic.is_zero() {
        return 0.0;
    }
    cosine(comment, topic).unwrap_or(0.0).clamp(-1.0, 1.0)
}

/// Shared resources for stance detection.
pub struct StanceEngine<'a> {
    pub backend: &'a EmbeddingBackend,
    pub markers: &'a MarkerLexicons,
    pub stopwords: &'a Stopwords,
    pub config: StanceConfig,
}

impl StanceEngine<'_> {
    /// Explicit markers decide first; otherwise the ensemble score does.
    pub fn detect_toplevel(&self, comment: &Comment, ctx: &TopicContext, kb: Option<&KnowledgeBase>) -> StanceResult {
        let anchor = Anchor::Topic(ctx.topic_id);
        let explicit = detect_explicit(&comment.text, self.markers);
        let emb = self.backend.embed_or_zero(&comment.text);
        let similarity = similarity_signal(&emb, &ctx.embedding);
        let kb_score = kb.and_then(|k| {
            kb_entailment(&comment.text, k, self.backend, self.stopwords, self.config.window, self.config.kb_min_match)
                .ok()
                .flatten()
        });
        let rule_score = rule_signal(&comment.text, &ctx.keyword_tokens, self.markers, self.config.window);
        let combined = self.config.combine(similarity, kb_score, rule_score);
        let label = match &explicit {
            Some((dir, _)) => *dir,
            None => self.config.label(combined),
        };
        StanceResult {
            comment_id: comment.comment_id.clone(),
            label,
            evidence: StanceEvidence {
                explicit_marker: explicit.map(|(d, m)| (m, d)),
                similarity,
                kb_entailment: kb_score,
                rule_score,
                combined,
                anchor,
                relation: None,
                mention_unresolved: false,
            },
        }
    }

    fn relation(&self, text: &str, anchor_text: &str) -> Relation {
        match detect_explicit(text, self.markers) {
            Some((StanceLabel::Favour, _)) => return Relation::Agree,
            Some((StanceLabel::Against, _)) => return Relation::Disagree,
            _ => {}
        }
        let a = self.backend.embed_or_zero(text);
        let b = self.backend.embed_or_zero(anchor_text);
        let s = similarity_signal(&a, &b);
        if s > self.config.tau_reply {
            Relation::Agree
        } else if s < -self.config.tau_reply {
            Relation::Disagree
        } else {
            Relation::Neutral
        }
    }

    /// Replies in temporal order; each takes its anchor's stance when it
    /// agrees, the opposite when it disagrees, and falls back to top-level
    /// detection otherwise.
    pub fn detect_replies(
        &self,
        top: &Comment,
        replies: &[&Comment],
        top_result: &StanceResult,
        ctx: &TopicContext,
        kb: Option<&KnowledgeBase>,
    ) -> Vec<StanceResult> {
        let mut ordered: Vec<&Comment> = replies.to_vec();
        ordered.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.comment_id.cmp(&b.comment_id)));
        let mut seen: Vec<&Comment> = vec![top];
        let mut labels: HashMap<&str, StanceLabel> = HashMap::from([(top.comment_id.as_str(), top_result.label)]);
        let mut out = Vec::with_capacity(ordered.len());
        for reply in ordered {
            let (mention, body) = split_mention(&reply.text);
            let mut unresolved = false;
            let mut anchor_comment = top;
            let mut anchor = Anchor::ParentComment(top.comment_id.clone());
            if let Some(name) = mention {
                match seen.iter().rev().find(|c| display_matches(&c.author_display, &name)) {
                    Some(c) => {
                        anchor_comment = c;
                        anchor = Anchor::Referenced(c.comment_id.clone());
                    }
                    None => unresolved = true,
                }
            }
            let relation = self.relation(body, &anchor_comment.text);
            let anchor_label = labels[anchor_comment.comment_id.as_str()];
            let derived = match (relation, anchor_label) {
                (_, StanceLabel::Neutral) | (Relation::Neutral, _) => None,
                (Relation::Agree, l) => Some(l),
                (Relation::Disagree, l) => Some(l.flipped()),
            };
            let result = match derived {
                Some(label) => {
                    let explicit = detect_explicit(body, self.markers).map(|(d, m)| (m, d));
                    StanceResult {
                        comment_id: reply.comment_id.clone(),
                        label,
                        evidence: StanceEvidence {
                            explicit_marker: explicit,
                            similarity: 0.0,
                            kb_entailment: None,
                            rule_score: 0.0,
                            combined: 0.0,
                            anchor,
                            relation: Some(relation),
                            mention_unresolved: unresolved,
                        },
                    }
                }
                None => {
                    let mut stripped = reply.clone();
                    stripped.text = body.to_string();
                    let mut r = self.detect_toplevel(&stripped, ctx, kb);
                    r.evidence.relation = Some(relation);
                    r.evidence.mention_unresolved = unresolved;
                    r
                }
            };
            labels.insert(reply.comment_id.as_str(), result.label);
            seen.push(reply);
            out.push(result);
        }
        out
    }
}

/// Leading `@name` token (lowercased, trailing punctuation removed) and the rest.
pub fn split_mention(text: &str) -> (Option<String>, &str) {
    let t = text.trim_start();
    if let Some(rest) = t.strip_prefix('@') {
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let name: String = rest[..end].trim_end_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        if !name.is_empty() {
            return (Some(name), rest[end..].trim_start());
        }
    }
    (None, text)
}

fn display_matches(display: &str, mention: &str) -> bool {
    let d: String = display.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    !d.is_empty() && d.starts_with(mention)
}

/// Topic contexts for every cluster of the report.
pub fn topic_contexts(report: &TopicModelReport, backend: &EmbeddingBackend) -> BTreeMap<i32, TopicContext> {
    report
        .clusters
        .iter()
        .map(|c| {
            let kws: Vec<String> = c.keywords.iter().map(|k| k.0.clone()).collect();
            (c.topic_id, TopicContext::new(c.topic_id, &kws, backend))
        })
        .collect()
}

/// Stance for every comment, in corpus order. Comments on videos without a
/// topic use an empty context, so only explicit markers can label them.
pub fn stance_corpus(
    corpus: &Corpus,
    report: &TopicModelReport,
    kbs: &KbSet,
    engine: &StanceEngine<'_>,
) -> Vec<StanceResult> {
    let contexts = topic_contexts(report, engine.backend);
    let video_topics = report.video_topics();
    let empty = TopicContext::empty(engine.backend.dim());
    let threads: Vec<Thread<'_>> = corpus.threads();
    let run = |t: &Thread<'_>| -> Vec<StanceResult> {
        let ctx = video_topics.get(&t.top.video_id).and_then(|id| contexts.get(id)).unwrap_or(&empty);
        let kb = kbs.for_topic(ctx.topic_id, &ctx.keywords).filter(|_| ctx.topic_id >= 0);
        let top = engine.detect_toplevel(t.top, ctx, kb);
        let mut out = engine.detect_replies(t.top, &t.replies, &top, ctx, kb);
        out.insert(0, top);
        out
    };
    #[cfg(feature = "parallel")]
    let per_thread: Vec<Vec<StanceResult>> = {
        use rayon::prelude::*;
        threads.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_thread: Vec<Vec<StanceResult>> = threads.iter().map(run).collect();
    let mut by_id: HashMap<String, StanceResult> =
        per_thread.into_iter().flatten().map(|r| (r.comment_id.clone(), r)).collect();
    corpus.comments().iter().filter_map(|c| by_id.remove(&c.comment_id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::comment;
    use proptest::prelude::*;

    fn engine<'a>(backend: &'a EmbeddingBackend, markers: &'a MarkerLexicons, stop: &'a Stopwords) -> StanceEngine<'a> {
        StanceEngine { backend, markers, stopwords: stop, config: StanceConfig::default() }
    }

    fn text_comment(id: &str, text: &str, author: &str, t: i64, parent: Option<&str>) -> Comment {
        let mut c = comment(id, "v", author, parent);
        c.text = text.into();
        c.published_at = t;
        c
    }

    #[test]
    fn explicit_marker_wins() {
        let (b, m, s) = (EmbeddingBackend::default(), MarkerLexicons::default(), Stopwords::default());
        let ctx = TopicContext::new(0, &["deep state".into()], &b);
        let r = engine(&b, &m, &s).detect_toplevel(&text_comment("c", "I agree, the deep state is a myth", "a", 0, None), &ctx, None);
        assert_eq!(r.label, StanceLabel::Favour);
        assert!(r.evidence.explicit_marker.is_some());
    }

    #[test]
    fn zero_combined_is_neutral() {
        assert_eq!(StanceConfig::default().label(0.0), StanceLabel::Neutral);
        assert_eq!(StanceConfig::default().combine(0.0, None, 0.0), 0.0);
    }

    #[test]
    fn keyword_echo_is_favour() {
        let (b, m, s) = (EmbeddingBackend::default(), MarkerLexicons::default(), Stopwords::default());
        let kws = vec!["deep state".to_string(), "fake media".to_string(), "general flynn".to_string()];
        let ctx = TopicContext::new(0, &kws, &b);
        let r = engine(&b, &m, &s).detect_toplevel(&text_comment("c", "deep state fake media general flynn", "a", 0, None), &ctx, None);
        assert!(r.evidence.similarity >= 0.9);
        assert_eq!(r.label, StanceLabel::Favour);
    }

    #[test]
    fn similarity_of_empty_is_zero() {
        let b = EmbeddingBackend::default();
        assert_eq!(similarity_signal(&b.embed_or_zero(""), &b.embed_or_zero("deep state")), 0.0);
    }

    fn thread_fixture() -> (Comment, Vec<Comment>) {
        let top = text_comment("t", "I agree, wake up people", "Root", 0, None);
        let replies = vec![
            text_comment("r1", "you're wrong about this", "Bob", 10, Some("t")),
            text_comment("r2", "exactly, well said", "Alice Smith", 20, Some("t")),
            text_comment("r3", "@alice no, that's false", "Carol", 30, Some("t")),
            text_comment("r4", "@zed you're wrong about this", "Dan", 40, Some("t")),
        ];
        (top, replies)
    }

    #[test]
    fn reply_rules_walkthrough() {
        let (b, m, s) = (EmbeddingBackend::default(), MarkerLexicons::default(), Stopwords::default());
        let e = engine(&b, &m, &s);
        let ctx = TopicContext::empty(b.dim());
        let (top, replies) = thread_fixture();
        let refs: Vec<&Comment> = replies.iter().collect();
        let top_r = e.detect_toplevel(&top, &ctx, None);
        assert_eq!(top_r.label, StanceLabel::Favour);
        let out = e.detect_replies(&top, &refs, &top_r, &ctx, None);
        let labels: Vec<StanceLabel> = out.iter().map(|r| r.label).collect();
        assert_eq!(labels[..3], [StanceLabel::Against, StanceLabel::Favour, StanceLabel::Against]);
        assert_eq!(out[2].evidence.anchor, Anchor::Referenced("r2".into()));
        assert!(out[3].evidence.mention_unresolved);
        assert_eq!(out[3].evidence.anchor, Anchor::ParentComment("t".into()));
        assert_eq!(out[3].label, StanceLabel::Against);
    }

    #[test]
    fn split_mention_forms() {
        assert_eq!(split_mention("@Alice, no way"), (Some("alice".into()), "no way"));
        assert_eq!(split_mention("plain"), (None, "plain"));
        assert_eq!(split_mention("@ nothing"), (None, "@ nothing"));
    }

    proptest! {
        #[test]
        fn explicit_precedence_ignores_scores(words in proptest::collection::vec(proptest::sample::select(vec![
            "deep", "state", "not", "never", "fake", "real", "myth", "media", "flynn", "WAKE", "UP", "!!!", "???",
        ]), 0..12), kw in proptest::sample::select(vec!["deep state", "fake media", "general flynn"])) {
            let (b, m, s) = (EmbeddingBackend::default(), MarkerLexicons::default(), Stopwords::default());
            let ctx = TopicContext::new(0, &[kw.to_string()], &b);
            let kb = KnowledgeBase::build("k", parse_kb("S\tthe deep state is real\nC\tthe media is honest", "k").unwrap(), &b).unwrap();
            let text = format!("I agree {}", words.join(" "));
            let r = engine(&b, &m, &s).detect_toplevel(&text_comment("c", &text, "a", 0, None), &ctx, Some(&kb));
            prop_assert_eq!(r.label, StanceLabel::Favour);
        }

        #[test]
        fn combine_monotone(sim in -1.0f64..1.0, kb in -1.0f64..1.0, rule in -1.0f64..1.0, d in 0.0f64..0.5) {
            let cfg = StanceConfig::default();
            let base = cfg.combine(sim, Some(kb), rule);
            prop_assert!(cfg.combine(sim + d, Some(kb), rule) >= base);
            prop_assert!(cfg.combine(sim, Some(kb + d), rule) >= base);
            prop_assert!(cfg.combine(sim, Some(kb), rule + d) >= base);
            prop_assert!(cfg.combine(sim + d, None, rule) >= cfg.combine(sim, None, rule));
        }

        #[test]
        fn reply_order_invariant(perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let (b, m, s) = (EmbeddingBackend::default(), MarkerLexicons::default(), Stopwords::default());
            let e = engine(&b, &m, &s);
            let ctx = TopicContext::empty(b.dim());
            let (top, replies) = thread_fixture();
            let top_r = e.detect_toplevel(&top, &ctx, None);
            let base = e.detect_replies(&top, &replies.iter().collect::<Vec<_>>(), &top_r, &ctx, None);
            let shuffled: Vec<&Comment> = perm.iter().map(|&i| &replies[i]).collect();
            prop_assert_eq!(base, e.detect_replies(&top, &shuffled, &top_r, &ctx, None));
        }
    }
}
