//! Transcript topic modelling: normalize, embed, reduce, cluster, describe.

pub mod ctfidf;
pub mod hdbscan;
pub mod metrics;
pub mod normalize;
pub mod reduce;

pub use ctfidf::{ctfidf_keywords, KeywordTable, NgramRange, Stopwords};
pub use hdbscan::{cluster_density, ClusterSelection, HdbscanParams};
pub use metrics::{adjusted_rand_index, davies_bouldin, inter_topic_similarity, npmi_coherence, silhouette};
pub use normalize::{normalize_transcript, Boilerplate, PunctuationSplitter, SentenceSplitter, TranscriptDoc};
pub use reduce::{reduce, PcaReducer, Reduced, Reducer};

use crate::corpus::Corpus;
use crate::embed::{EmbedError, EmbeddingBackend};
use crate::text::tokens;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("points have differing dimensions")]
    Ragged,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    pub target_dim: usize,
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size` when absent.
    pub min_samples: Option<usize>,
    pub selection: ClusterSelection,
    pub allow_single_cluster: bool,
    pub top_k: usize,
    pub ngram: NgramRange,
    pub coherence_window: usize,
    pub coherence_top_n: usize,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            target_dim: 5,
            min_cluster_size: 15,
            min_samples: None,
            selection: ClusterSelection::ExcessOfMass,
            allow_single_cluster: false,
            top_k: 10,
            ngram: NgramRange::default(),
            coherence_window: 20,
            coherence_top_n: 10,
        }
    }
}

impl TopicConfig {
    pub fn hdbscan(&self) -> HdbscanParams {
        HdbscanParams {
            min_cluster_size: self.min_cluster_size,
            min_samples: self.min_samples.unwrap_or(self.min_cluster_size),
            selection: self.selection,
            allow_single_cluster: self.allow_single_cluster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCluster {
    pub topic_id: i32,
    pub video_ids: Vec<String>,
    pub keywords: Vec<(String, f64)>,
    pub coherence: f64,
    pub size: usize,
    /// Comments on member videos.
    pub comment_count: usize,
    /// No phrase survived stopword filtering.
    pub keywords_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocPoint {
    pub video_id: String,
    pub topic_id: i32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelReport {
    pub clusters: Vec<TopicCluster>,
    /// `None` when fewer than two clusters exist.
    pub silhouette: Option<f64>,
    pub davies_bouldin: Option<f64>,
    /// Row/column order follows `clusters`.
    pub inter_topic: Vec<Vec<f64>>,
    pub noise_fraction: f64,
    pub noise_video_ids: Vec<String>,
    /// Videos without a transcript, left out of the model.
    pub skipped_video_ids: Vec<String>,
    pub points: Vec<DocPoint>,
}

impl TopicModelReport {
    pub fn cluster(&self, topic_id: i32) -> Option<&TopicCluster> {
        self.clusters.iter().find(|c| c.topic_id == topic_id)
    }

    /// Topic of every modelled video; noise maps to −1.
    pub fn video_topics(&self) -> BTreeMap<String, i32> {
        let mut m: BTreeMap<String, i32> = self.noise_video_ids.iter().map(|v| (v.clone(), -1)).collect();
        for c in &self.clusters {
            for v in &c.video_ids {
                m.insert(v.clone(), c.topic_id);
            }
        }
        m
    }

    /// A comment inherits its video's topic.
    pub fn comment_topic(&self, corpus: &Corpus, comment_id: &str) -> Option<i32> {
        let c = corpus.comments().iter().find(|c| c.comment_id == comment_id)?;
        self.video_topics().get(&c.video_id).copied()
    }
}

/// Groups labelled docs into clusters, then scores keywords, coherence,
/// separation and inter-topic similarity. `docs[i]` carries `labels[i]`.
pub fn topic_metrics(
    labels: &[i32],
    points: &[Vec<f64>],
    docs: &[TranscriptDoc],
    stop: &Stopwords,
    cfg: &TopicConfig,
) -> TopicModelReport {
    let k = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let mut sentences: Vec<Vec<&str>> = vec![Vec::new(); k];
    let mut windows: Vec<Vec<Vec<String>>> = vec![Vec::new(); k];
    let mut members: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut noise = Vec::new();
    for (doc, &l) in docs.iter().zip(labels) {
        if l < 0 {
            noise.push(doc.video_id.clone());
            continue;
        }
        sentences[l as usize].extend(doc.sentences());
        windows[l as usize].push(tokens(&doc.normalized));
        members[l as usize].push(doc.video_id.clone());
    }
    let table = ctfidf_keywords(&sentences, stop, cfg.ngram, cfg.top_k);
    let clusters = (0..k)
        .map(|c| {
            let phrases: Vec<&str> = table.ranked[c].iter().map(|p| p.0.as_str()).collect();
            let words = metrics::keyword_tokens(&phrases, cfg.coherence_top_n);
            TopicCluster {
                topic_id: c as i32,
                size: members[c].len(),
                video_ids: std::mem::take(&mut members[c]),
                keywords: table.ranked[c].clone(),
                coherence: npmi_coherence(&words, &windows[c], cfg.coherence_window),
                comment_count: 0,
                keywords_empty: table.empty.contains(&c),
            }
        })
        .collect();
    let points_out = docs
        .iter()
        .zip(labels)
        .zip(points)
        .map(|((d, &l), p)| DocPoint {
            video_id: d.video_id.clone(),
            topic_id: l,
            x: p.first().copied().unwrap_or(0.0),
            y: p.get(1).copied().unwrap_or(0.0),
        })
        .collect();
    TopicModelReport {
        clusters,
        silhouette: silhouette(points, labels),
        davies_bouldin: davies_bouldin(points, labels),
        inter_topic: inter_topic_similarity(&table.scores),
        noise_fraction: if labels.is_empty() { 0.0 } else { noise.len() as f64 / labels.len() as f64 },
        noise_video_ids: noise,
        skipped_video_ids: Vec::new(),
        points: points_out,
    }
}

/// Text resources for topic modelling.
pub struct TopicResources<'a> {
    pub boilerplate: &'a Boilerplate,
    pub stopwords: &'a Stopwords,
    pub splitter: &'a dyn SentenceSplitter,
    pub reducer: &'a dyn Reducer,
}

/// Models topics over every video with a transcript. Embeddings are taken of
/// the normalized transcript text.
pub fn model_topics(
    corpus: &Corpus,
    backend: &EmbeddingBackend,
    res: &TopicResources<'_>,
    cfg: &TopicConfig,
) -> Result<TopicModelReport, TopicError> {
    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for v in corpus.videos() {
        match v.transcript.as_deref() {
            Some(t) if !t.trim().is_empty() => {
                docs.push(normalize_transcript(&v.video_id, t, res.boilerplate, res.splitter))
            }
            _ => skipped.push(v.video_id.clone()),
        }
    }
    let params = cfg.hdbscan();
    let need = params.min_cluster_size.max(cfg.target_dim + 1);
    if docs.len() < need {
        return Err(TopicError::TooFewPoints { got: docs.len(), need });
    }
    let vectors = docs
        .iter()
        .map(|d| backend.embed_text(&d.normalized).map(|v| v.values().to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    let reduced = res.reducer.reduce(&vectors, cfg.target_dim)?;
    let labels = cluster_density(&reduced.coords, &params)?;
    let mut report = topic_metrics(&labels, &reduced.coords, &docs, res.stopwords, cfg);
    for c in &mut report.clusters {
        c.comment_count = c.video_ids.iter().map(|v| corpus.comment_count(v)).sum();
    }
    report.skipped_video_ids = skipped;
    Ok(report)
}

/// Clusters with coherence strictly above `threshold`, largest first.
pub fn filter_coherent(report: &TopicModelReport, threshold: f64) -> Vec<TopicCluster> {
    let mut out: Vec<TopicCluster> = report.clusters.iter().filter(|c| c.coherence > threshold).cloned().collect();
    out.sort_by(|a, b| b.size.cmp(&a.size).then(a.topic_id.cmp(&b.topic_id)));
    out
}
