//! Per-topic claim knowledge bases and the entailment signal.

use super::StanceError;
use crate::embed::{cosine, EmbeddingBackend, EmbeddingVector};
use crate::text::{is_negation, tokens};
use crate::topics::Stopwords;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClaimPolarity {
    SupportsNarrative,
    ContradictsNarrative,
}

impl ClaimPolarity {
    pub fn sign(self) -> f64 {
        match self {
            ClaimPolarity::SupportsNarrative => 1.0,
            ClaimPolarity::ContradictsNarrative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub text: String,
    pub polarity: ClaimPolarity,
    pub embedding: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub name: String,
    /// Topic bound by file name, if it is numeric.
    pub topic_id: Option<i32>,
    /// Keyword phrases that bind this KB to any topic listing one of them.
    pub match_phrases: Vec<String>,
    pub claims: Vec<Claim>,
}

/// Parsed claim file before embedding.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KbSource {
    pub match_phrases: Vec<String>,
    pub claims: Vec<(ClaimPolarity, String)>,
}

/// Lines are `S<TAB>claim`, `C<TAB>claim` or `@match<TAB>phrase`; `#` starts a comment.
pub fn parse_kb(src: &str, file: &str) -> Result<KbSource, StanceError> {
    let mut out = KbSource::default();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let bad = || StanceError::KbParse { file: file.to_string(), line: i + 1 };
        let (tag, text) = line.split_once('\t').ok_or_else(bad)?;
        let text = text.trim();
        if text.is_empty() {
            return Err(bad());
        }
        match tag.trim() {
            "S" | "s" => out.claims.push((ClaimPolarity::SupportsNarrative, text.to_string())),
            "C" | "c" => out.claims.push((ClaimPolarity::ContradictsNarrative, text.to_string())),
            "@match" => out.match_phrases.push(text.to_lowercase()),
            _ => return Err(bad()),
        }
    }
    Ok(out)
}

impl KnowledgeBase {
    pub fn build(name: &str, source: KbSource, backend: &EmbeddingBackend) -> Result<Self, StanceError> {
        if source.claims.is_empty() {
            return Err(StanceError::EmptyKb(name.to_string()));
        }
        let claims = source
            .claims
            .into_iter()
            .map(|(polarity, text)| Ok(Claim { embedding: backend.embed_text(&text)?, text, polarity }))
            .collect::<Result<Vec<_>, StanceError>>()?;
        Ok(KnowledgeBase {
            name: name.to_string(),
            topic_id: name.parse().ok(),
            match_phrases: source.match_phrases,
            claims,
        })
    }
}

/// Negation tokens within `window` of any of `content` in `toks`.
fn negations_near(toks: &[String], content: &[String], window: usize) -> usize {
    (0..toks.len())
        .filter(|&j| is_negation(&toks[j]))
        .filter(|&j| {
            let lo = j.saturating_sub(window);
            let hi = (j + window + 1).min(toks.len());
            (lo..hi).any(|i| i != j && content.contains(&toks[i]))
        })
        .count()
}

/// Clauses split at `, . ; : ! ?`, plus the whole text.
fn clauses(text: &str) -> Vec<&str> {
    let mut out: Vec<&str> =
        text.split([',', '.', ';', ':', '!', '?']).map(str::trim).filter(|c| !c.is_empty()).collect();
    if out.len() != 1 {
        out.push(text.trim());
    }
    out
}

/// Signed agreement with the best-matching (clause, claim) pair: cosine ×
/// polarity × negation factor, where the factor flips when the clause's
/// negations near claim content words differ in parity from the claim's own.
/// `None` when no pair reaches `min_match`: the comment echoes no claim.
pub fn kb_entailment(
    text: &str,
    kb: &KnowledgeBase,
    backend: &EmbeddingBackend,
    stop: &Stopwords,
    window: usize,
    min_match: f64,
) -> Result<Option<f64>, StanceError> {
    if kb.claims.is_empty() {
        return Err(StanceError::EmptyKb(kb.name.clone()));
    }
    let mut best: Option<(&str, &Claim, f64)> = None;
    for clause in clauses(text) {
        let emb = backend.embed_or_zero(clause);
        if emb.is_zero() {
            continue;
        }
        for c in &kb.claims {
            let cos = cosine(&emb, &c.embedding).unwrap_or(0.0);
            if best.is_none_or(|(_, _, b)| cos.abs() > b.abs()) {
                best = Some((clause, c, cos));
            }
        }
    }
    let Some((clause, claim, cos)) = best else { return Ok(None) };
    if cos.abs() < min_match {
        return Ok(None);
    }
    let claim_toks = tokens(&claim.text);
    let content: Vec<String> = claim_toks.iter().filter(|t| !is_negation(t) && !stop.contains(t)).cloned().collect();
    let own = negations_near(&claim_toks, &content, window);
    let found = negations_near(&tokens(clause), &content, window);
    let factor = if (own + found) % 2 == 1 { -1.0 } else { 1.0 };
    Ok(Some((cos * claim.polarity.sign() * factor).clamp(-1.0, 1.0)))
}

/// Knowledge bases loaded from a directory of `*.kb` files.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KbSet {
    kbs: Vec<KnowledgeBase>,
}

impl KbSet {
    pub fn new(mut kbs: Vec<KnowledgeBase>) -> Self {
        kbs.sort_by(|a, b| a.name.cmp(&b.name));
        KbSet { kbs }
    }

    pub fn load_dir(dir: &Path, backend: &EmbeddingBackend) -> Result<Self, StanceError> {
        let mut kbs = Vec::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "kb"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let src = parse_kb(&std::fs::read_to_string(&p)?, &p.display().to_string())?;
            kbs.push(KnowledgeBase::build(&name, src, backend)?);
        }
        Ok(KbSet::new(kbs))
    }

    pub fn is_empty(&self) -> bool {
        self.kbs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.kbs.len()
    }

    /// KB for a topic: an id-named file first, else the first KB (by name)
    /// whose match phrase appears among the topic keywords.
    pub fn for_topic(&self, topic_id: i32, keywords: &[String]) -> Option<&KnowledgeBase> {
        self.kbs.iter().find(|k| k.topic_id == Some(topic_id)).or_else(|| {
            self.kbs.iter().find(|k| k.match_phrases.iter().any(|m| keywords.iter().any(|kw| kw == m)))
        })
    }

    pub fn names(&self) -> BTreeMap<String, usize> {
        self.kbs.iter().map(|k| (k.name.clone(), k.claims.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb(lines: &str) -> KnowledgeBase {
        let backend = EmbeddingBackend::default();
        KnowledgeBase::build("flat", parse_kb(lines, "t").unwrap(), &backend).unwrap()
    }

    fn score(text: &str, kb: &KnowledgeBase) -> f64 {
        kb_entailment(text, kb, &EmbeddingBackend::default(), &Stopwords::default(), 3, 0.0).unwrap().unwrap()
    }

    #[test]
    fn echo_found_in_one_clause() {
        let k = kb("S\tthe earth is flat\nC\tsatellite photos show a round globe\n");
        let s = score("there is no doubt at all, satellite photos show a round globe", &k);
        assert!(s < -0.9, "{s}");
    }

    #[test]
    fn weak_match_is_no_echo() {
        let k = kb("S\tthe earth is flat\n");
        let b = EmbeddingBackend::default();
        let r = kb_entailment("lovely weather at the beach", &k, &b, &Stopwords::default(), 3, 0.5).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn echo_support_claim_positive() {
        let k = kb("S\tthe earth is flat and the horizon proves it\nC\tsatellite photos show a round globe\n");
        assert!(score("the earth is flat and the horizon proves it", &k) > 0.9);
    }

    #[test]
    fn negated_echo_flips() {
        let k = kb("S\tthe earth is flat and the horizon proves it\n");
        let plain = score("the earth is flat and the horizon proves it", &k);
        let neg = score("the earth is not flat and the horizon proves it", &k);
        assert!(plain > 0.0 && neg < 0.0, "{plain} {neg}");
    }

    #[test]
    fn contradicting_claim_negative() {
        let k = kb("S\tthe earth is flat\nC\tsatellite photos show a round globe\n");
        assert!(score("satellite photos show a round globe", &k) < 0.0);
    }

    #[test]
    fn claim_own_negation_parity() {
        let k = kb("C\tthe earth is not flat\n");
        assert!(score("the earth is not flat", &k) < 0.0);
        assert!(score("the earth is flat", &k) > 0.0);
    }

    #[test]
    fn parse_errors_and_empty() {
        assert!(matches!(parse_kb("X\tfoo", "f"), Err(StanceError::KbParse { line: 1, .. })));
        let empty = parse_kb("# only comments\n@match\tflat earth\n", "f").unwrap();
        assert!(KnowledgeBase::build("e", empty, &EmbeddingBackend::default()).is_err());
    }

    #[test]
    fn binding_by_id_then_match() {
        let backend = EmbeddingBackend::default();
        let a = KnowledgeBase::build("3", parse_kb("S\tclaim a", "a").unwrap(), &backend).unwrap();
        let b = KnowledgeBase::build("flat", parse_kb("@match\tflat earth\nS\tclaim b", "b").unwrap(), &backend).unwrap();
        let set = KbSet::new(vec![a, b]);
        assert_eq!(set.for_topic(3, &[]).unwrap().name, "3");
        assert_eq!(set.for_topic(7, &["flat earth".into()]).unwrap().name, "flat");
        assert!(set.for_topic(7, &["moon landing".into()]).is_none());
    }
}
