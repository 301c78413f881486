//! Creator exclusion, reported-vs-available audits and snapshot diffs.

use super::{Category, Corpus};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExclusionReport {
    pub removed_by_category: BTreeMap<Category, usize>,
    /// Videos whose channel could not be resolved; their comments were retained.
    pub unresolved_videos: Vec<String>,
}

impl ExclusionReport {
    pub fn total_removed(&self) -> usize {
        self.removed_by_category.values().sum()
    }
}

/// Drops every comment authored by the owner of the video's channel.
pub fn exclude_creator_comments(corpus: &Corpus) -> (Corpus, ExclusionReport) {
    let mut report = ExclusionReport::default();
    let mut owners: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    for v in corpus.videos() {
        let owner = corpus.channel(&v.channel_id).map(|c| c.owner_author_id.as_str());
        if owner.is_none() {
            log::warn!("video {} has unresolvable channel {}", v.video_id, v.channel_id);
            report.unresolved_videos.push(v.video_id.clone());
        }
        owners.insert(v.video_id.as_str(), owner);
    }
    let mut kept = Vec::with_capacity(corpus.comments().len());
    for c in corpus.comments() {
        match owners.get(c.video_id.as_str()).copied().flatten() {
            Some(owner) if owner == c.author_id => {
                let cat = corpus.category_of(c).expect("indexed comment has a video");
                *report.removed_by_category.entry(cat).or_default() += 1;
            }
            _ => kept.push(c.clone()),
        }
    }
    if report.total_removed() == 0 {
        return (corpus.clone(), report);
    }
    (corpus.with_comments(kept), report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub video_id: String,
    pub category: Category,
    pub reported: u64,
    pub available: u64,
    /// `reported - available`, clamped at zero.
    pub missing: u64,
    /// Set when more comments are available than the platform reports.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBucket {
    pub category: Category,
    /// Inclusive lower bound on `missing`; buckets are `[0,1)`, `[1,10)`, `[10,100)`, ...
    pub lower: u64,
    pub upper: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiscrepancyAggregate {
    pub reported: u64,
    pub missing: u64,
    pub missing_rate: f64,
    pub videos: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub rows: Vec<DiscrepancyRow>,
    pub by_category: BTreeMap<Category, DiscrepancyAggregate>,
    pub total_reported: u64,
    pub total_missing: u64,
    pub missing_rate: f64,
    pub histogram: Vec<HistogramBucket>,
}

fn rate(missing: u64, reported: u64) -> f64 {
    if reported == 0 {
        0.0
    } else {
        missing as f64 / reported as f64
    }
}

fn decade(missing: u64) -> u32 {
    if missing == 0 {
        0
    } else {
        missing.ilog10() + 1
    }
}

pub fn discrepancy_report(corpus: &Corpus) -> DiscrepancyReport {
    let mut rep = DiscrepancyReport::default();
    let mut hist: BTreeMap<(Category, u32), usize> = BTreeMap::new();
    for v in corpus.videos() {
        let available = corpus.comment_count(&v.video_id) as u64;
        let reported = v.reported_comment_count;
        let row = DiscrepancyRow {
            video_id: v.video_id.clone(),
            category: v.category,
            reported,
            available,
            missing: reported.saturating_sub(available),
            flagged: available > reported,
        };
        let agg = rep.by_category.entry(v.category).or_default();
        agg.reported += row.reported;
        agg.missing += row.missing;
        agg.videos += 1;
        agg.flagged += row.flagged as usize;
        *hist.entry((v.category, decade(row.missing))).or_default() += 1;
        rep.rows.push(row);
    }
    for agg in rep.by_category.values_mut() {
        agg.missing_rate = rate(agg.missing, agg.reported);
        rep.total_reported += agg.reported;
        rep.total_missing += agg.missing;
    }
    rep.missing_rate = rate(rep.total_missing, rep.total_reported);
    rep.histogram = hist
        .into_iter()
        .map(|((category, d), count)| {
            let (lower, upper) = if d == 0 { (0, 1) } else { (10u64.pow(d - 1), 10u64.pow(d)) };
            HistogramBucket { category, lower, upper, count }
        })
        .collect();
    rep
}

impl DiscrepancyReport {
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["video_id", "category", "reported", "available", "missing", "flagged"])?;
        for r in &self.rows {
            out.write_record([
                r.video_id.clone(),
                r.category.to_string(),
                r.reported.to_string(),
                r.available.to_string(),
                r.missing.to_string(),
                r.flagged.to_string(),
            ])?;
        }
        out.flush()
    }

    pub fn write_histogram_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["category", "lower", "upper", "count"])?;
        for b in &self.histogram {
            out.write_record([b.category.to_string(), b.lower.to_string(), b.upper.to_string(), b.count.to_string()])?;
        }
        out.flush()
    }
}

/// One row of the collection-round summary table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SnapshotSummary {
    pub videos: usize,
    pub videos_with_comments: usize,
    pub reported_comments: u64,
    pub available_comments: u64,
    pub unique_channels: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CategoryDiff {
    pub a: SnapshotSummary,
    pub b: SnapshotSummary,
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub persisting: usize,
    /// Available-comment delta over persisting videos, `b - a`, sorted by video id.
    pub per_video_delta: Vec<(String, i64)>,
    pub available_delta: i64,
    pub reported_delta: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SnapshotDiff {
    pub categories: BTreeMap<Category, CategoryDiff>,
}

impl SnapshotDiff {
    pub fn is_zero(&self) -> bool {
        self.categories.values().all(|d| {
            d.added.is_empty()
                && d.removed.is_empty()
                && d.available_delta == 0
                && d.reported_delta == 0
                && d.per_video_delta.iter().all(|(_, x)| *x == 0)
        })
    }
}

fn summarize(c: &Corpus, cat: Category) -> SnapshotSummary {
    let mut s = SnapshotSummary::default();
    let mut channels = BTreeSet::new();
    for v in c.videos().iter().filter(|v| v.category == cat) {
        let n = c.comment_count(&v.video_id) as u64;
        s.videos += 1;
        s.videos_with_comments += (n > 0) as usize;
        s.reported_comments += v.reported_comment_count;
        s.available_comments += n;
        channels.insert(v.channel_id.as_str());
    }
    s.unique_channels = channels.len();
    s
}

pub fn diff_snapshots(a: &Corpus, b: &Corpus) -> SnapshotDiff {
    let mut out = SnapshotDiff::default();
    let cats: BTreeSet<Category> = a.categories().into_iter().chain(b.categories()).collect();
    for &cat in &cats {
        out.categories.insert(
            cat,
            CategoryDiff { a: summarize(a, cat), b: summarize(b, cat), ..Default::default() },
        );
    }
    for v in a.videos() {
        match b.video(&v.video_id) {
            None => out.categories.get_mut(&v.category).unwrap().removed.push(v.video_id.clone()),
            Some(bv) => {
                // A video that changed category is attributed symmetrically.
                let cat = v.category.min(bv.category);
                let d = out.categories.get_mut(&cat).unwrap();
                d.persisting += 1;
                d.per_video_delta.push((
                    v.video_id.clone(),
                    b.comment_count(&v.video_id) as i64 - a.comment_count(&v.video_id) as i64,
                ));
            }
        }
    }
    for v in b.videos() {
        if a.video(&v.video_id).is_none() {
            out.categories.get_mut(&v.category).unwrap().added.push(v.video_id.clone());
        }
    }
    for d in out.categories.values_mut() {
        d.added.sort();
        d.removed.sort();
        d.per_video_delta.sort();
        d.available_delta = d.b.available_comments as i64 - d.a.available_comments as i64;
        d.reported_delta = d.b.reported_comments as i64 - d.a.reported_comments as i64;
    }
    out
}
