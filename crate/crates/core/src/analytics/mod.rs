//! Engagement statistics computed per dataset, and the CSV report bundle.

pub mod engagement;
pub mod stats;
pub mod timeseries;

pub use engagement::{
    cross_video_engagement, engagement_ecdf, user_activity, video_engagement, CrossVideoEngagement, Ecdf,
    EngagementEcdf, UserActivity, VideoEngagement,
};
pub use stats::{
    correlation_matrix, mann_whitney_exact_counts, mann_whitney_u, pearson, quantile_sorted, quartiles, Correlation,
    CorrelationMatrix, QuartileSummary, StatTestResult, StatsError, TestMethod,
};
pub use timeseries::{normalized_timeseries, Bucket, EngagementSeries, SpikeConfig};

use crate::corpus::{Category, Corpus};
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    pub bucket: Bucket,
    pub spikes: SpikeConfig,
    /// Horizon for the headline share-within readout, in days.
    pub share_within_days: f64,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig { bucket: Bucket::Month, spikes: SpikeConfig::default(), share_within_days: 7.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedQuartiles {
    pub metric: String,
    pub summary: QuartileSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetAnalytics {
    pub dataset: Category,
    pub videos: usize,
    pub comments: usize,
    pub users: usize,
    pub quartiles: Vec<NamedQuartiles>,
    pub max_repeat: usize,
    pub ecdf: EngagementEcdf,
    pub share_within: f64,
    pub cross_video: CrossVideoEngagement,
    pub correlation: CorrelationMatrix,
    /// One series per bucket size, in [`Bucket::ALL`] order.
    pub timeseries: Vec<EngagementSeries>,
    pub engagement: Vec<VideoEngagement>,
}

impl DatasetAnalytics {
    pub fn quartiles_for(&self, metric: &str) -> Option<&QuartileSummary> {
        self.quartiles.iter().find(|q| q.metric == metric).map(|q| &q.summary)
    }

    pub fn series(&self, bucket: Bucket) -> Option<&EngagementSeries> {
        self.timeseries.iter().find(|s| s.bucket == bucket)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetComparison {
    pub a: Category,
    pub b: Category,
    pub metric: String,
    pub test: StatTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub config: AnalyticsConfig,
    pub datasets: Vec<DatasetAnalytics>,
    pub comparisons: Vec<DatasetComparison>,
}

impl AnalyticsReport {
    pub fn dataset(&self, cat: Category) -> Option<&DatasetAnalytics> {
        self.datasets.iter().find(|d| d.dataset == cat)
    }
}

pub const COMMENTS_PER_USER: &str = "comments_per_user";
pub const COMMENTS_PER_VIDEO: &str = "comments_per_video";
pub const VIDEOS_PER_USER: &str = "unique_videos_per_user";
pub const VIDEOS_PER_USER_CHANNEL: &str = "unique_videos_per_user_channel";

pub fn analyze_dataset(corpus: &Corpus, dataset: Category, cfg: &AnalyticsConfig) -> DatasetAnalytics {
    let activity = user_activity(corpus);
    let ecdf = engagement_ecdf(corpus);
    let cross = cross_video_engagement(corpus);
    let engagement = video_engagement(corpus);
    let col = |f: fn(&VideoEngagement) -> f64| engagement.iter().map(f).collect::<Vec<f64>>();
    let (views, comments, likes) =
        (col(|e| e.views as f64), col(|e| e.reported_comments as f64), col(|e| e.likes as f64));
    let mut named = Vec::new();
    let mut push = |metric: &str, q: Option<QuartileSummary>| {
        if let Some(summary) = q {
            named.push(NamedQuartiles { metric: metric.to_string(), summary });
        }
    };
    push(COMMENTS_PER_USER, activity.summary);
    push(COMMENTS_PER_VIDEO, quartiles(&col(|e| e.comments as f64)));
    push(VIDEOS_PER_USER, quartiles(cross.overall.values()));
    push(VIDEOS_PER_USER_CHANNEL, quartiles(cross.per_channel.values()));
    DatasetAnalytics {
        dataset,
        videos: corpus.videos().len(),
        comments: corpus.comments().len(),
        users: activity.counts.len(),
        quartiles: named,
        max_repeat: activity.max_repeat,
        share_within: ecdf.share_within(cfg.share_within_days),
        ecdf,
        cross_video: cross,
        correlation: correlation_matrix([&views, &comments, &likes]),
        timeseries: Bucket::ALL.iter().map(|b| normalized_timeseries(corpus, *b, &cfg.spikes)).collect(),
        engagement,
    }
}

/// Analyses each dataset separately, then compares comments-per-user
/// distributions between every pair of datasets.
pub fn analyze(corpus: &Corpus, cfg: &AnalyticsConfig) -> AnalyticsReport {
    let cats = corpus.categories();
    let run = |cat: &Category| {
        let sub = corpus.subset(*cat);
        let per_user: Vec<f64> = user_activity(&sub).counts.values().map(|&c| c as f64).collect();
        (analyze_dataset(&sub, *cat, cfg), per_user)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(DatasetAnalytics, Vec<f64>)> = {
        use rayon::prelude::*;
        cats.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(DatasetAnalytics, Vec<f64>)> = cats.iter().map(run).collect();
    let mut comparisons = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            if let Ok(test) = mann_whitney_u(&results[i].1, &results[j].1) {
                comparisons.push(DatasetComparison {
                    a: results[i].0.dataset,
                    b: results[j].0.dataset,
                    metric: COMMENTS_PER_USER.to_string(),
                    test,
                });
            }
        }
    }
    AnalyticsReport { config: cfg.clone(), datasets: results.into_iter().map(|r| r.0).collect(), comparisons }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(io::Error::other)?;
    w.write_record(header).map_err(io::Error::other)?;
    for r in rows {
        w.write_record(&r).map_err(io::Error::other)?;
    }
    w.flush()
}

pub const BUNDLE_FILES: [&str; 8] = [
    "ecdf.csv",
    "correlation.csv",
    "quartiles.csv",
    "timeseries.csv",
    "spikes.csv",
    "engagement.csv",
    "mannwhitney.csv",
    "report.json",
];

/// Writes the CSV bundle plus `report.json` and `manifest.json` into `dir`.
pub fn write_bundle(report: &AnalyticsReport, dir: &Path, corpus_fingerprint: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let ds = |d: &DatasetAnalytics| d.dataset.to_string();

    let mut rows = Vec::new();
    for d in &report.datasets {
        for (x, f) in d.ecdf.ecdf.points() {
            rows.push(vec![ds(d), num(x), num(f)]);
        }
    }
    write_csv(dir, "ecdf.csv", &["dataset", "delta_days", "cumulative_share"], rows)?;

    let mut rows = Vec::new();
    for d in &report.datasets {
        let m = &d.correlation;
        for i in 0..3 {
            for j in 0..3 {
                let c = m.cells[i][j];
                rows.push(vec![
                    ds(d),
                    m.variables[i].clone(),
                    m.variables[j].clone(),
                    opt(c.map(|c| c.r)),
                    opt(c.and_then(|c| c.p_value)),
                    m.n.to_string(),
                ]);
            }
        }
    }
    write_csv(dir, "correlation.csv", &["dataset", "var_a", "var_b", "r", "p_value", "n"], rows)?;

    let mut rows = Vec::new();
    for d in &report.datasets {
        for q in &d.quartiles {
            let s = q.summary;
            rows.push(vec![ds(d), q.metric.clone(), s.n.to_string(), num(s.min), num(s.q1), num(s.q2), num(s.q3), num(s.max)]);
        }
    }
    write_csv(dir, "quartiles.csv", &["dataset", "metric", "n", "min", "q1", "q2", "q3", "max"], rows)?;

    let mut rows = Vec::new();
    for d in &report.datasets {
        for t in &d.timeseries {
            for p in &t.points {
                rows.push(vec![ds(d), t.bucket.to_string(), p.period_start.to_string(), p.count.to_string(), t.videos.to_string(), num(p.normalized)]);
            }
        }
    }
    write_csv(dir, "timeseries.csv", &["dataset", "bucket", "period_start", "count", "videos", "normalized"], rows)?;

    let mut rows = Vec::new();
    for d in &report.datasets {
        for t in &d.timeseries {
            for s in &t.spikes {
                rows.push(vec![ds(d), t.bucket.to_string(), s.period_start.to_string(), s.count.to_string(), num(s.rolling_median), num(s.ratio)]);
            }
        }
    }
    write_csv(dir, "spikes.csv", &["dataset", "bucket", "period_start", "count", "rolling_median", "ratio"], rows)?;

    let mut rows = Vec::new();
    for d in &report.datasets {
        for e in &d.engagement {
            rows.push(vec![
                ds(d),
                e.video_id.clone(),
                e.channel_id.clone(),
                e.views.to_string(),
                e.likes.to_string(),
                e.reported_comments.to_string(),
                e.comments.to_string(),
                e.unique_commenters.to_string(),
            ]);
        }
    }
    write_csv(
        dir,
        "engagement.csv",
        &["dataset", "video_id", "channel_id", "views", "likes", "reported_comments", "comments", "unique_commenters"],
        rows,
    )?;

    let rows = report
        .comparisons
        .iter()
        .map(|c| {
            let method = serde_json::to_value(c.test.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            vec![c.a.to_string(), c.b.to_string(), c.metric.clone(), c.test.n.to_string(), c.test.m.to_string(), num(c.test.u), num(c.test.p_value), method]
        })
        .collect();
    write_csv(dir, "mannwhitney.csv", &["dataset_a", "dataset_b", "metric", "n", "m", "u", "p_value", "method"], rows)?;

    std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;
    let manifest = serde_json::json!({
        "corpus_fingerprint": corpus_fingerprint,
        "config": report.config,
        "files": BUNDLE_FILES,
        "datasets": report.datasets.iter().map(|d| d.dataset).collect::<Vec<_>>(),
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_has_every_file() {
        let corpus = crate::synth::synthetic_corpus(&crate::synth::SynthConfig::small(5));
        let report = analyze(&corpus, &AnalyticsConfig::default());
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&report, dir.path(), &corpus.fingerprint()).unwrap();
        for f in BUNDLE_FILES.iter().chain(&["manifest.json"]) {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(report.datasets.len(), corpus.categories().len());
    }
}
