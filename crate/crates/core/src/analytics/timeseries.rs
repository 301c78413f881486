//! Calendar-bucketed comment counts normalized by video count, with spikes.

use crate::corpus::Corpus;
use chrono::{DateTime, Datelike, Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_SPIKE_FACTOR: f64 = 3.0;
pub const DEFAULT_SPIKE_WINDOW: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Day,
    Week,
    #[default]
    Month,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Day, Bucket::Week, Bucket::Month];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Day => "day",
            Bucket::Week => "week",
            Bucket::Month => "month",
        }
    }

    /// Start of the bucket holding `date`; weeks start on Monday.
    pub fn start(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => date - Days::new(u64::from(date.weekday().num_days_from_monday())),
            Bucket::Month => date.with_day(1).expect("day 1 exists"),
        }
    }

    pub fn next(self, start: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => start + Days::new(1),
            Bucket::Week => start + Days::new(7),
            Bucket::Month => start + Months::new(1),
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bucket {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "day" => Ok(Bucket::Day),
            "week" => Ok(Bucket::Week),
            "month" => Ok(Bucket::Month),
            other => Err(format!("unknown bucket '{other}' (day, week, month)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeConfig {
    pub factor: f64,
    /// Centered window width in buckets, truncated at the series edges.
    pub window: usize,
}

impl Default for SpikeConfig {
    fn default() -> Self {
        SpikeConfig { factor: DEFAULT_SPIKE_FACTOR, window: DEFAULT_SPIKE_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub period_start: NaiveDate,
    pub count: u64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub period_start: NaiveDate,
    pub count: u64,
    pub rolling_median: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementSeries {
    pub bucket: Bucket,
    /// Normalization divisor.
    pub videos: usize,
    pub points: Vec<SeriesPoint>,
    pub spikes: Vec<Spike>,
}

pub fn date_of(ts: i64) -> NaiveDate {
    DateTime::from_timestamp(ts, 0).map_or(NaiveDate::MIN, |d| d.date_naive())
}

fn median(values: &mut [u64]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    }
}

/// Buckets flagged when `count > factor · max(rolling median, 1)`.
pub fn detect_spikes(starts: &[NaiveDate], counts: &[u64], cfg: &SpikeConfig) -> Vec<Spike> {
    let half = cfg.window / 2;
    let mut out = Vec::new();
    for i in 0..counts.len() {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(counts.len());
        let med = median(&mut counts[lo..hi].to_vec());
        let base = med.max(1.0);
        if counts[i] as f64 > cfg.factor * base {
            out.push(Spike { period_start: starts[i], count: counts[i], rolling_median: med, ratio: counts[i] as f64 / base });
        }
    }
    out
}

/// Comment counts per calendar bucket divided by the number of videos.
/// Empty buckets between the first and last comment are kept as zeros.
pub fn normalized_timeseries(corpus: &Corpus, bucket: Bucket, spikes: &SpikeConfig) -> EngagementSeries {
    let mut counts: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for c in corpus.comments() {
        *counts.entry(bucket.start(date_of(c.published_at))).or_insert(0) += 1;
    }
    let videos = corpus.videos().len();
    let mut points = Vec::new();
    if let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) {
        let mut d = first;
        while d <= last {
            let count = counts.get(&d).copied().unwrap_or(0);
            let normalized = if videos == 0 { 0.0 } else { count as f64 / videos as f64 };
            points.push(SeriesPoint { period_start: d, count, normalized });
            d = bucket.next(d);
        }
    }
    let starts: Vec<NaiveDate> = points.iter().map(|p| p.period_start).collect();
    let raw: Vec<u64> = points.iter().map(|p| p.count).collect();
    EngagementSeries { bucket, videos, spikes: detect_spikes(&starts, &raw, spikes), points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{comment, video};
    use crate::corpus::{Category, Channel};

    fn ts(y: i32, m: u32, d: u32) -> i64 {
        NaiveDate::from_ymd_opt(y, m, d).unwrap().and_hms_opt(12, 0, 0).unwrap().and_utc().timestamp()
    }

    fn corpus(times: &[i64], n_videos: usize) -> Corpus {
        let videos: Vec<_> = (0..n_videos).map(|i| video(&format!("v{i}"), "ch", Category::Baseline)).collect();
        let comments = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut c = comment(&format!("c{i}"), "v0", "u", None);
                c.published_at = t;
                c
            })
            .collect();
        Corpus::new("t", videos, vec![Channel { channel_id: "ch".into(), owner_author_id: "o".into() }], comments)
    }

    #[test]
    fn month_normalization() {
        let times: Vec<i64> = (1..=10).map(|d| ts(2021, 3, d)).collect();
        let s = normalized_timeseries(&corpus(&times, 2), Bucket::Month, &SpikeConfig::default());
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].normalized, 5.0);
    }

    #[test]
    fn empty_buckets_filled() {
        let s = normalized_timeseries(&corpus(&[ts(2021, 1, 5), ts(2021, 4, 5)], 1), Bucket::Month, &SpikeConfig::default());
        let counts: Vec<u64> = s.points.iter().map(|p| p.count).collect();
        assert_eq!(counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn week_starts_monday() {
        let d = NaiveDate::from_ymd_opt(2021, 3, 7).unwrap(); // Sunday
        assert_eq!(Bucket::Week.start(d), NaiveDate::from_ymd_opt(2021, 3, 1).unwrap());
    }

    #[test]
    fn spike_rules() {
        let starts: Vec<NaiveDate> = (0..12).map(|i| NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + Days::new(i)).collect();
        assert!(detect_spikes(&starts, &[4; 12], &SpikeConfig::default()).is_empty());
        let mut counts = vec![4u64; 12];
        counts[6] = 40;
        let s = detect_spikes(&starts, &counts, &SpikeConfig::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].period_start, starts[6]);
        assert_eq!(s[0].ratio, 10.0);
    }
}
