//! Per-user activity, cross-video engagement and comment-arrival ECDFs.

use super::stats::{quartiles, QuartileSummary};
use crate::corpus::Corpus;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Empirical CDF over a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.retain(|v| v.is_finite());
        values.sort_by(f64::total_cmp);
        Ecdf { sorted: values }
    }

    /// Sample values, ascending.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Share of the sample `≤ x`; 0 for an empty sample.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// `(x, F(x))` at every distinct sample value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementEcdf {
    /// Comment delay after video publication, in days.
    pub ecdf: Ecdf,
    /// Comments timestamped before their video; excluded from `ecdf`.
    pub negative_deltas: usize,
}

impl EngagementEcdf {
    pub fn share_within(&self, days: f64) -> f64 {
        self.ecdf.eval(days)
    }
}

pub fn engagement_ecdf(corpus: &Corpus) -> EngagementEcdf {
    let mut deltas = Vec::with_capacity(corpus.comments().len());
    let mut negative = 0;
    for c in corpus.comments() {
        let Some(v) = corpus.video(&c.video_id) else { continue };
        let d = c.published_at - v.published_at;
        if d < 0 {
            negative += 1;
        } else {
            deltas.push(d as f64 / SECONDS_PER_DAY);
        }
    }
    EngagementEcdf { ecdf: Ecdf::new(deltas), negative_deltas: negative }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserActivity {
    pub counts: BTreeMap<String, usize>,
    pub summary: Option<QuartileSummary>,
    /// Most comments one user left on a single video, with the first such
    /// (user, video) in key order.
    pub max_repeat: usize,
    pub max_repeat_at: Option<(String, String)>,
}

pub fn user_activity(corpus: &Corpus) -> UserActivity {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_video: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for c in corpus.comments() {
        *counts.entry(c.author_id.clone()).or_insert(0) += 1;
        *per_video.entry((c.author_id.as_str(), c.video_id.as_str())).or_insert(0) += 1;
    }
    let mut max_repeat = 0;
    let mut max_repeat_at = None;
    for ((u, v), &k) in &per_video {
        if k > max_repeat {
            max_repeat = k;
            max_repeat_at = Some((u.to_string(), v.to_string()));
        }
    }
    let values: Vec<f64> = counts.values().map(|&c| c as f64).collect();
    UserActivity { summary: quartiles(&values), counts, max_repeat, max_repeat_at }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossVideoEngagement {
    /// Distinct videos per user over the whole dataset.
    pub overall: Ecdf,
    /// Distinct videos per (user, channel) pair.
    pub per_channel: Ecdf,
}

pub fn cross_video_engagement(corpus: &Corpus) -> CrossVideoEngagement {
    let mut overall: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut per_channel: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for c in corpus.comments() {
        overall.entry(&c.author_id).or_default().insert(&c.video_id);
        if let Some(v) = corpus.video(&c.video_id) {
            per_channel.entry((&c.author_id, &v.channel_id)).or_default().insert(&c.video_id);
        }
    }
    CrossVideoEngagement {
        overall: Ecdf::new(overall.values().map(|s| s.len() as f64).collect()),
        per_channel: Ecdf::new(per_channel.values().map(|s| s.len() as f64).collect()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEngagement {
    pub video_id: String,
    pub channel_id: String,
    pub views: u64,
    pub likes: u64,
    pub reported_comments: u64,
    /// Comments present in the analysed corpus.
    pub comments: usize,
    pub unique_commenters: usize,
}

pub fn video_engagement(corpus: &Corpus) -> Vec<VideoEngagement> {
    corpus
        .videos()
        .iter()
        .map(|v| {
            let authors: BTreeSet<&str> = corpus.comments_for(&v.video_id).map(|c| c.author_id.as_str()).collect();
            VideoEngagement {
                video_id: v.video_id.clone(),
                channel_id: v.channel_id.clone(),
                views: v.view_count,
                likes: v.like_count,
                reported_comments: v.reported_comment_count,
                comments: corpus.comment_count(&v.video_id),
                unique_commenters: authors.len(),
            }
        })
        .collect()
}
