//! Canonical comment-corpus data model and JSONL storage.
//!
//! A corpus file holds one JSON object per line, tagged by `kind`:
//!
//! ```text
//! {"kind":"snapshot","label":"round-1"}
//! {"kind":"channel","channel_id":"c1","owner_author_id":"u0"}
//! {"kind":"video","video_id":"v1","channel_id":"c1","title":"..","published_at":1600000000,
//!  "view_count":10,"like_count":1,"reported_comment_count":3,"category":"qanon","transcript":null}
//! {"kind":"comment","comment_id":"k1","video_id":"v1","parent_id":null,"author_id":"u1",
//!  "author_display":"alice","text":"..","published_at":1600000100,"like_count":0}
//! ```

mod audit;
mod remote;

pub use audit::{
    diff_snapshots, discrepancy_report, exclude_creator_comments, CategoryDiff, DiscrepancyReport,
    DiscrepancyRow, ExclusionReport, HistogramBucket, SnapshotDiff, SnapshotSummary,
};
pub use remote::{
    fetch_remote, ClientError, CommentPage, FetchOptions, FetchReport, FixtureClient, NoPause,
    Pause, RemoteClient, SleepPause, VideoListing,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Keywords used to assemble the mainstream comparison dataset.
pub const MUNDANE_KEYWORDS: &[&str] = &[
    "song", "school", "book", "cooking", "surfing", "finance", "news", "education", "sports",
    "health", "comedy", "4WD", "camping", "kayaking", "travel", "people", "plants", "meal prep",
    "day in my life", "dance", "movie", "festival", "ceremony", "Christmas", "thanksgiving", "TED",
    "hair care", "beauty products",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{malformed} of {total} records malformed (threshold {threshold}); first offending line {first_line}: {reason}")]
    Malformed {
        malformed: usize,
        total: usize,
        threshold: f64,
        first_line: usize,
        reason: String,
    },
    #[error("remote client failed: {0}")]
    Remote(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error(transparent)]
    Write(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "other_conspiracies")]
    OtherConspiracies,
    #[serde(rename = "qanon")]
    QAnon,
    #[serde(rename = "baseline")]
    Baseline,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::OtherConspiracies, Category::QAnon, Category::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::OtherConspiracies => "other_conspiracies",
            Category::QAnon => "qanon",
            Category::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match norm.as_str() {
            "otherconspiracies" | "other" => Ok(Category::OtherConspiracies),
            "qanon" => Ok(Category::QAnon),
            "baseline" => Ok(Category::Baseline),
            _ => Err(CorpusError::UnknownCategory(s.to_string())),
        }
    }
}

/// One user utterance. `parent_id == None` marks a top-level comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: String,
    pub video_id: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    pub author_id: String,
    #[serde(default)]
    pub author_display: String,
    pub text: String,
    /// UTC epoch seconds.
    pub published_at: i64,
    #[serde(default)]
    pub like_count: u64,
}

impl Comment {
    pub fn is_top_level(&self) -> bool {
        self.parent_id.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Video {
    pub video_id: String,
    pub channel_id: String,
    #[serde(default)]
    pub title: String,
    pub published_at: i64,
    #[serde(default)]
    pub view_count: u64,
    #[serde(default)]
    pub like_count: u64,
    #[serde(default)]
    pub reported_comment_count: u64,
    pub category: Category,
    #[serde(default)]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub channel_id: String,
    pub owner_author_id: String,
}

#[derive(Debug, Deserialize)]
struct VideoRecord {
    video_id: String,
    channel_id: String,
    #[serde(default)]
    title: String,
    published_at: i64,
    #[serde(default)]
    view_count: u64,
    #[serde(default)]
    like_count: u64,
    #[serde(default)]
    reported_comment_count: u64,
    #[serde(default)]
    category: Option<Category>,
    #[serde(default)]
    transcript: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum InRecord {
    Snapshot { label: String },
    Channel(Channel),
    Video(VideoRecord),
    Comment(Comment),
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum OutRecord<'a> {
    Snapshot { label: &'a str },
    Channel(&'a Channel),
    Video(&'a Video),
    Comment(&'a Comment),
}

/// A top-level comment with its replies in stored order.
#[derive(Debug, Clone)]
pub struct Thread<'a> {
    pub top: &'a Comment,
    pub replies: Vec<&'a Comment>,
}

/// An ingested snapshot. Immutable once built; derived corpora are new values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    snapshot_label: String,
    videos: Vec<Video>,
    channels: Vec<Channel>,
    comments: Vec<Comment>,
    orphans: Vec<Comment>,
    video_pos: BTreeMap<String, usize>,
    channel_pos: BTreeMap<String, usize>,
    by_video: BTreeMap<String, Vec<usize>>,
}

/// Counters collected while building a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestStats {
    pub records: usize,
    pub malformed: usize,
    pub first_malformed_line: Option<usize>,
    pub duplicate_comments: usize,
    pub orphans: usize,
    /// Replies whose parent was itself a reply, re-pointed at the top-level ancestor.
    pub flattened_replies: usize,
    /// Replies whose parent is absent from the corpus.
    pub dangling_replies: usize,
}

impl Corpus {
    /// Builds indices, routes comments with unknown videos to the orphan list and
    /// flattens reply chains deeper than one level onto their top-level ancestor.
    pub fn new(
        snapshot_label: impl Into<String>,
        videos: Vec<Video>,
        channels: Vec<Channel>,
        comments: Vec<Comment>,
    ) -> Self {
        Self::build(snapshot_label.into(), videos, channels, comments, Vec::new()).0
    }

    fn build(
        snapshot_label: String,
        videos: Vec<Video>,
        channels: Vec<Channel>,
        comments: Vec<Comment>,
        mut orphans: Vec<Comment>,
    ) -> (Self, IngestStats) {
        let mut stats = IngestStats::default();
        let video_pos: BTreeMap<String, usize> = videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.video_id.clone(), i))
            .collect();
        let channel_pos = channels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.channel_id.clone(), i))
            .collect();

        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(comments.len());
        for c in comments {
            if !seen.insert(c.comment_id.clone()) {
                stats.duplicate_comments += 1;
                continue;
            }
            if video_pos.contains_key(&c.video_id) {
                kept.push(c);
            } else {
                orphans.push(c);
            }
        }
        stats.orphans = orphans.len();

        let parents: HashMap<String, Option<String>> = kept
            .iter()
            .map(|c| (c.comment_id.clone(), c.parent_id.clone()))
            .collect();
        for c in kept.iter_mut() {
            let Some(first) = c.parent_id.clone() else { continue };
            let mut cur = first.clone();
            let mut hops = 0;
            loop {
                match parents.get(&cur) {
                    Some(Some(up)) if hops < parents.len() => {
                        cur = up.clone();
                        hops += 1;
                    }
                    Some(_) => break,
                    None => {
                        stats.dangling_replies += 1;
                        break;
                    }
                }
            }
            if cur != first {
                stats.flattened_replies += 1;
                c.parent_id = Some(cur);
            }
        }

        let mut by_video: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, c) in kept.iter().enumerate() {
            by_video.entry(c.video_id.clone()).or_default().push(i);
        }
        let corpus = Corpus {
            snapshot_label,
            videos,
            channels,
            comments: kept,
            orphans,
            video_pos,
            channel_pos,
            by_video,
        };
        (corpus, stats)
    }

    pub fn snapshot_label(&self) -> &str {
        &self.snapshot_label
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    /// Comments whose video is not part of the corpus. Excluded from analytics.
    pub fn orphans(&self) -> &[Comment] {
        &self.orphans
    }

    pub fn video(&self, video_id: &str) -> Option<&Video> {
        self.video_pos.get(video_id).map(|&i| &self.videos[i])
    }

    pub fn channel(&self, channel_id: &str) -> Option<&Channel> {
        self.channel_pos.get(channel_id).map(|&i| &self.channels[i])
    }

    pub fn comments_for(&self, video_id: &str) -> impl Iterator<Item = &Comment> {
        self.by_video
            .get(video_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.comments[i])
    }

    pub fn comment_count(&self, video_id: &str) -> usize {
        self.by_video.get(video_id).map_or(0, Vec::len)
    }

    pub fn category_of(&self, comment: &Comment) -> Option<Category> {
        self.video(&comment.video_id).map(|v| v.category)
    }

    pub fn categories(&self) -> Vec<Category> {
        let mut cats: Vec<Category> = self.videos.iter().map(|v| v.category).collect();
        cats.sort();
        cats.dedup();
        cats
    }

    /// Same snapshot with the comment list replaced. Orphans are carried over.
    pub fn with_comments(&self, comments: Vec<Comment>) -> Corpus {
        Self::build(
            self.snapshot_label.clone(),
            self.videos.clone(),
            self.channels.clone(),
            comments,
            self.orphans.clone(),
        )
        .0
    }

    /// Restricts the corpus to one category (videos and their comments).
    pub fn subset(&self, category: Category) -> Corpus {
        let videos: Vec<Video> = self
            .videos
            .iter()
            .filter(|v| v.category == category)
            .cloned()
            .collect();
        let ids: HashSet<&str> = videos.iter().map(|v| v.video_id.as_str()).collect();
        let comments = self
            .comments
            .iter()
            .filter(|c| ids.contains(c.video_id.as_str()))
            .cloned()
            .collect();
        Corpus::new(self.snapshot_label.clone(), videos, self.channels.clone(), comments)
    }

    /// Groups comments into threads, ordered by video then top-level timestamp.
    /// Replies are sorted by `(published_at, comment_id)`. Replies whose parent is
    /// missing form their own single-comment thread.
    pub fn threads(&self) -> Vec<Thread<'_>> {
        let mut out = Vec::new();
        for video in &self.videos {
            let Some(idx) = self.by_video.get(&video.video_id) else { continue };
            let mut tops: BTreeMap<&str, Thread<'_>> = BTreeMap::new();
            let mut replies: Vec<&Comment> = Vec::new();
            for &i in idx {
                let c = &self.comments[i];
                if c.is_top_level() {
                    tops.insert(c.comment_id.as_str(), Thread { top: c, replies: Vec::new() });
                } else {
                    replies.push(c);
                }
            }
            let mut detached = Vec::new();
            for r in replies {
                match tops.get_mut(r.parent_id.as_deref().unwrap_or_default()) {
                    Some(t) => t.replies.push(r),
                    None => detached.push(Thread { top: r, replies: Vec::new() }),
                }
            }
            let mut threads: Vec<Thread<'_>> = tops.into_values().chain(detached).collect();
            for t in threads.iter_mut() {
                t.replies.sort_by(|a, b| {
                    (a.published_at, &a.comment_id).cmp(&(b.published_at, &b.comment_id))
                });
            }
            threads.sort_by(|a, b| {
                (a.top.published_at, &a.top.comment_id).cmp(&(b.top.published_at, &b.top.comment_id))
            });
            out.extend(threads);
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut line = |rec: OutRecord<'_>| -> io::Result<()> {
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")
        };
        line(OutRecord::Snapshot { label: &self.snapshot_label })?;
        for c in &self.channels {
            line(OutRecord::Channel(c))?;
        }
        for v in &self.videos {
            line(OutRecord::Video(v))?;
        }
        for c in self.comments.iter().chain(&self.orphans) {
            line(OutRecord::Comment(c))?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSONL serialisation.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        hex::encode(Sha256::digest(&buf))
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Category for video records that carry none.
    pub default_category: Category,
    /// Maximum tolerated fraction of malformed records.
    pub malformed_threshold: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { default_category: Category::OtherConspiracies, malformed_threshold: 0.01 }
    }
}

impl LoadOptions {
    pub fn category(category: Category) -> Self {
        LoadOptions { default_category: category, ..Default::default() }
    }
}

pub fn read_corpus<R: BufRead>(reader: R, opts: &LoadOptions) -> Result<(Corpus, IngestStats), CorpusError> {
    let mut label = String::new();
    let (mut videos, mut channels, mut comments) = (Vec::new(), Vec::new(), Vec::new());
    let mut total = 0usize;
    let mut malformed = 0usize;
    let mut first_bad: Option<(usize, String)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io { path: PathBuf::from("<stream>"), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<InRecord>(&line) {
            Ok(InRecord::Snapshot { label: l }) => label = l,
            Ok(InRecord::Channel(c)) => channels.push(c),
            Ok(InRecord::Video(v)) => videos.push(Video {
                video_id: v.video_id,
                channel_id: v.channel_id,
                title: v.title,
                published_at: v.published_at,
                view_count: v.view_count,
                like_count: v.like_count,
                reported_comment_count: v.reported_comment_count,
                category: v.category.unwrap_or(opts.default_category),
                transcript: v.transcript,
            }),
            Ok(InRecord::Comment(c)) => comments.push(c),
            Err(e) => {
                malformed += 1;
                if first_bad.is_none() {
                    first_bad = Some((i + 1, e.to_string()));
                }
            }
        }
    }
    if let Some((line, reason)) = &first_bad {
        if malformed as f64 / total as f64 > opts.malformed_threshold {
            return Err(CorpusError::Malformed {
                malformed,
                total,
                threshold: opts.malformed_threshold,
                first_line: *line,
                reason: reason.clone(),
            });
        }
        log::warn!("skipped {malformed} malformed records (first at line {line})");
    }
    let (corpus, mut stats) = Corpus::build(label, videos, channels, comments, Vec::new());
    stats.records = total;
    stats.malformed = malformed;
    stats.first_malformed_line = first_bad.map(|(l, _)| l);
    Ok((corpus, stats))
}

/// Loads a JSONL corpus file. Video records without a `category` get `category`.
pub fn load_corpus(path: &Path, category: Category) -> Result<Corpus, CorpusError> {
    load_corpus_with(path, &LoadOptions::category(category)).map(|(c, _)| c)
}

pub fn load_corpus_with(path: &Path, opts: &LoadOptions) -> Result<(Corpus, IngestStats), CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e })?;
    read_corpus(BufReader::new(f), opts).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let f = File::create(path).map_err(|e| CorpusError::Io { path: path.to_path_buf(), source: e })?;
    let mut w = BufWriter::new(f);
    corpus.write_jsonl(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Merges several corpora into one snapshot. Later duplicates of ids are dropped.
pub fn merge(label: &str, parts: &[Corpus]) -> Corpus {
    let mut vids = HashSet::new();
    let mut chans = HashSet::new();
    let (mut videos, mut channels, mut comments) = (Vec::new(), Vec::new(), Vec::new());
    for p in parts {
        for v in &p.videos {
            if vids.insert(v.video_id.clone()) {
                videos.push(v.clone());
            }
        }
        for c in &p.channels {
            if chans.insert(c.channel_id.clone()) {
                channels.push(c.clone());
            }
        }
        comments.extend(p.comments.iter().cloned());
        comments.extend(p.orphans.iter().cloned());
    }
    Corpus::new(label, videos, channels, comments)
}
