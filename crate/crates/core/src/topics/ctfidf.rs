//! Class-based TF-IDF over 2–3 token phrases.

use crate::text::tokens;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

const ENGLISH_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've", "you'll", "you'd",
    "your", "yours", "yourself", "yourselves", "he", "him", "his", "himself", "she", "she's", "her", "hers",
    "herself", "it", "it's", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
    "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
    "or", "because", "as", "until", "while", "of", "at", "by", "for", "with", "about", "against", "between",
    "into", "through", "during", "before", "after", "above", "below", "to", "from", "up", "down", "in", "out",
    "on", "off", "over", "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't",
    "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn",
    "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't",
    "isn", "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
    "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't",
];

/// Spoken-transcript fillers added on top of the standard English list.
const TRANSCRIPT_STOPWORDS: &[&str] = &[
    "uh", "um", "like", "know", "yeah", "okay", "gonna", "wanna", "really", "going", "get", "got", "thing",
    "things", "right", "well", "oh", "lot", "actually", "basically", "literally", "say", "said", "mean",
    "i'm", "we're", "they're", "that's", "there's", "let's", "can't", "one", "would", "could", "also",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Default for Stopwords {
    fn default() -> Self {
        Stopwords(ENGLISH_STOPWORDS.iter().chain(TRANSCRIPT_STOPWORDS).map(|s| s.to_string()).collect())
    }
}

impl Stopwords {
    pub fn english_only() -> Self {
        Stopwords(ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect())
    }

    pub fn extend<I: IntoIterator<Item = String>>(&mut self, extra: I) {
        self.0.extend(extra.into_iter().map(|w| w.to_lowercase()));
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRange {
    pub min: usize,
    pub max: usize,
}

impl Default for NgramRange {
    fn default() -> Self {
        NgramRange { min: 2, max: 3 }
    }
}

fn usable(token: &str, stop: &Stopwords) -> bool {
    token.chars().any(char::is_alphabetic) && !stop.contains(token)
}

/// Phrase counts of one sentence. N-grams never span sentence boundaries.
pub fn sentence_phrases(sentence: &str, stop: &Stopwords, range: NgramRange, out: &mut BTreeMap<String, u64>) {
    let toks = tokens(sentence);
    for n in range.min..=range.max {
        for w in toks.windows(n) {
            if w.iter().all(|t| usable(t, stop)) {
                *out.entry(w.join(" ")).or_insert(0) += 1;
            }
        }
    }
}

/// Per-cluster keyword ranking plus the full score vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeywordTable {
    pub ranked: Vec<Vec<(String, f64)>>,
    pub scores: Vec<BTreeMap<String, f64>>,
    /// Clusters left without any phrase after stopword filtering.
    pub empty: Vec<usize>,
}

/// Scores phrase counts per cluster: `tf · ln(1 + A / f)`.
pub fn ctfidf_from_counts(counts: &[BTreeMap<String, u64>], top_k: usize) -> KeywordTable {
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut all = 0u64;
    for c in counts {
        for (t, &k) in c {
            *totals.entry(t.as_str()).or_insert(0) += k;
            all += k;
        }
    }
    let avg = if counts.is_empty() { 0.0 } else { all as f64 / counts.len() as f64 };
    let mut table = KeywordTable::default();
    for (i, c) in counts.iter().enumerate() {
        let scores: BTreeMap<String, f64> = c
            .iter()
            .map(|(t, &tf)| (t.clone(), tf as f64 * (1.0 + avg / totals[t.as_str()] as f64).ln()))
            .collect();
        let mut ranked: Vec<(String, f64)> = scores.iter().map(|(t, s)| (t.clone(), *s)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(top_k);
        if ranked.is_empty() {
            table.empty.push(i);
        }
        table.ranked.push(ranked);
        table.scores.push(scores);
    }
    table
}

/// `clusters[c]` lists the sentences of every document in cluster `c`.
pub fn ctfidf_keywords<S: AsRef<str>>(
    clusters: &[Vec<S>],
    stop: &Stopwords,
    range: NgramRange,
    top_k: usize,
) -> KeywordTable {
    let counts: Vec<BTreeMap<String, u64>> = clusters
        .iter()
        .map(|sentences| {
            let mut m = BTreeMap::new();
            for s in sentences {
                sentence_phrases(s.as_ref(), stop, range, &mut m);
            }
            m
        })
        .collect();
    ctfidf_from_counts(&counts, top_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stopword_phrases_excluded() {
        let mut m = BTreeMap::new();
        sentence_phrases("for of the people", &Stopwords::default(), NgramRange::default(), &mut m);
        assert!(m.is_empty());
        sentence_phrases("deep state agenda", &Stopwords::default(), NgramRange::default(), &mut m);
        assert_eq!(m.len(), 3);
        assert!(m.contains_key("deep state agenda"));
    }

    #[test]
    fn exclusive_phrase_ranks_first() {
        let a = vec!["deep state", "deep state", "deep state", "deep state", "vaccine chips", "vaccine chips"];
        let b = vec!["vaccine chips", "vaccine chips", "moon landing"];
        let t = ctfidf_keywords(&[a, b], &Stopwords::default(), NgramRange::default(), 5);
        assert_eq!(t.ranked[0][0].0, "deep state");
        // A = 9 / 2; score = 4 ln(1 + 4.5 / 4)
        assert!((t.ranked[0][0].1 - 4.0 * (1.0f64 + 4.5 / 4.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_flagged() {
        let t = ctfidf_keywords(&[vec!["of the"], vec!["flat earth"]], &Stopwords::default(), NgramRange::default(), 5);
        assert_eq!(t.empty, vec![0]);
        assert!(t.ranked[0].is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        let t = ctfidf_keywords(&[vec!["zeta wave", "alpha wave"]], &Stopwords::default(), NgramRange::default(), 5);
        assert_eq!(t.ranked[0][0].0, "alpha wave");
    }

    proptest! {
        #[test]
        fn scaling_counts_keeps_ranking(raw in proptest::collection::vec(proptest::collection::btree_map("[a-e] [a-e]", 1u64..20, 1..8), 1..4), k in 2u64..6) {
            let scaled: Vec<BTreeMap<String, u64>> = raw.iter().map(|m| m.iter().map(|(t, c)| (t.clone(), c * k)).collect()).collect();
            let a = ctfidf_from_counts(&raw, 100);
            let b = ctfidf_from_counts(&scaled, 100);
            for (x, y) in a.ranked.iter().zip(&b.ranked) {
                let xs: Vec<&String> = x.iter().map(|p| &p.0).collect();
                let ys: Vec<&String> = y.iter().map(|p| &p.0).collect();
                prop_assert_eq!(xs, ys);
                prop_assert!(x.iter().all(|p| p.1 >= 0.0));
            }
        }
    }
}
