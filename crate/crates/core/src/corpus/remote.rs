//! Batched, rate-limit-aware fetching behind a client trait.

use super::{read_corpus, Channel, Comment, Corpus, CorpusError, LoadOptions, Video};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientError {
    RateLimited { retry_after_s: u64 },
    /// The video is gone (removed or made private). Permanent.
    Removed,
    Transient(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoListing {
    pub video: Video,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommentPage {
    pub comments: Vec<Comment>,
    pub next_token: Option<String>,
}

pub trait RemoteClient {
    /// Metadata for the requested ids. Ids the platform no longer serves are
    /// simply absent from the result.
    fn list_videos(&self, ids: &[String]) -> Result<Vec<VideoListing>, ClientError>;
    fn list_comments(&self, video_id: &str, page_token: Option<&str>) -> Result<CommentPage, ClientError>;
}

/// How the fetcher waits out a rate-limit window.
pub trait Pause {
    fn pause(&self, secs: u64);
}

pub struct SleepPause;

impl Pause for SleepPause {
    fn pause(&self, secs: u64) {
        std::thread::sleep(Duration::from_secs(secs));
    }
}

/// Records nothing and returns immediately; for tests and fixture clients.
pub struct NoPause;

impl Pause for NoPause {
    fn pause(&self, _secs: u64) {}
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub batch_size: usize,
    pub max_transient_retries: usize,
    pub snapshot_label: String,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions { batch_size: 50, max_transient_retries: 3, snapshot_label: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchReport {
    pub corpus: Corpus,
    /// Requested ids that could not be fetched, in request order.
    pub unavailable: Vec<String>,
    pub rate_limit_waits: Vec<u64>,
}

enum Outcome<T> {
    Done(T),
    Gone,
}

fn with_retries<T>(
    opts: &FetchOptions,
    pause: &dyn Pause,
    waits: &mut Vec<u64>,
    mut call: impl FnMut() -> Result<T, ClientError>,
) -> Outcome<T> {
    let mut transient = 0;
    loop {
        match call() {
            Ok(v) => return Outcome::Done(v),
            Err(ClientError::RateLimited { retry_after_s }) => {
                waits.push(retry_after_s);
                pause.pause(retry_after_s);
            }
            Err(ClientError::Removed) => return Outcome::Gone,
            Err(ClientError::Transient(msg)) => {
                transient += 1;
                if transient > opts.max_transient_retries {
                    log::warn!("giving up after {transient} transient failures: {msg}");
                    return Outcome::Gone;
                }
            }
        }
    }
}

/// Fetches video metadata in batches of `batch_size`, then every comment page of
/// every available video. A rate-limit signal waits the advised interval and
/// retries the same request, so the result never depends on when limits hit.
pub fn fetch_remote(
    client: &dyn RemoteClient,
    video_ids: &[String],
    opts: &FetchOptions,
    pause: &dyn Pause,
) -> Result<FetchReport, CorpusError> {
    if opts.batch_size == 0 {
        return Err(CorpusError::Remote("batch_size must be positive".into()));
    }
    let mut waits = Vec::new();
    let mut listed: HashMap<String, VideoListing> = HashMap::new();
    for batch in video_ids.chunks(opts.batch_size) {
        match with_retries(opts, pause, &mut waits, || client.list_videos(batch)) {
            Outcome::Done(list) => {
                for l in list {
                    listed.insert(l.video.video_id.clone(), l);
                }
            }
            Outcome::Gone => {}
        }
    }

    let mut unavailable = Vec::new();
    let mut videos = Vec::new();
    let mut channels: BTreeMap<String, Channel> = BTreeMap::new();
    let mut comments = Vec::new();
    for id in video_ids {
        let Some(listing) = listed.get(id) else {
            unavailable.push(id.clone());
            continue;
        };
        let mut token: Option<String> = None;
        let mut video_comments = Vec::new();
        let mut gone = false;
        loop {
            match with_retries(opts, pause, &mut waits, || client.list_comments(id, token.as_deref())) {
                Outcome::Done(page) => {
                    video_comments.extend(page.comments);
                    match page.next_token {
                        Some(t) => token = Some(t),
                        None => break,
                    }
                }
                Outcome::Gone => {
                    gone = true;
                    break;
                }
            }
        }
        if gone {
            unavailable.push(id.clone());
            continue;
        }
        videos.push(listing.video.clone());
        channels.entry(listing.channel.channel_id.clone()).or_insert_with(|| listing.channel.clone());
        comments.extend(video_comments);
    }
    let corpus = Corpus::new(opts.snapshot_label.clone(), videos, channels.into_values().collect(), comments);
    Ok(FetchReport { corpus, unavailable, rate_limit_waits: waits })
}

#[derive(Debug, Default, Deserialize)]
struct FixtureSpec {
    #[serde(default = "default_page_size")]
    page_size: usize,
    #[serde(default)]
    removed: Vec<String>,
    #[serde(default)]
    rate_limits: Vec<InjectedLimit>,
}

fn default_page_size() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
struct InjectedLimit {
    video_id: String,
    page: usize,
    retry_after_s: u64,
}

/// Serves a stored corpus page by page, with optional injected faults.
///
/// Each injected rate limit fires once, on the first request for its page.
pub struct FixtureClient {
    corpus: Corpus,
    page_size: usize,
    removed: BTreeSet<String>,
    pending_limits: Mutex<Vec<InjectedLimit>>,
    pending_transient: Mutex<Vec<(String, usize)>>,
    page_calls: Mutex<usize>,
}

impl FixtureClient {
    pub fn new(corpus: Corpus, page_size: usize) -> Self {
        FixtureClient {
            corpus,
            page_size: page_size.max(1),
            removed: BTreeSet::new(),
            pending_limits: Mutex::new(Vec::new()),
            pending_transient: Mutex::new(Vec::new()),
            page_calls: Mutex::new(0),
        }
    }

    /// Reads `<dir>/corpus.jsonl` plus optional `<dir>/fixture.json` with
    /// `page_size`, `removed` and `rate_limits` entries.
    pub fn from_dir(dir: &Path) -> Result<Self, CorpusError> {
        let corpus_path = dir.join("corpus.jsonl");
        let f = File::open(&corpus_path).map_err(|e| CorpusError::Io { path: corpus_path.clone(), source: e })?;
        let (corpus, _) = read_corpus(BufReader::new(f), &LoadOptions::default())?;
        let spec_path = dir.join("fixture.json");
        let spec: FixtureSpec = if spec_path.exists() {
            let raw = fs::read_to_string(&spec_path).map_err(|e| CorpusError::Io { path: spec_path.clone(), source: e })?;
            serde_json::from_str(&raw).map_err(|e| CorpusError::Remote(format!("fixture.json: {e}")))?
        } else {
            FixtureSpec { page_size: default_page_size(), ..Default::default() }
        };
        let mut client = FixtureClient::new(corpus, spec.page_size);
        client.removed = spec.removed.into_iter().collect();
        *client.pending_limits.lock().unwrap() = spec.rate_limits;
        Ok(client)
    }

    pub fn with_removed(mut self, video_id: &str) -> Self {
        self.removed.insert(video_id.to_string());
        self
    }

    pub fn with_rate_limit(self, video_id: &str, page: usize, retry_after_s: u64) -> Self {
        self.pending_limits.lock().unwrap().push(InjectedLimit {
            video_id: video_id.to_string(),
            page,
            retry_after_s,
        });
        self
    }

    pub fn with_transient(self, video_id: &str, page: usize) -> Self {
        self.pending_transient.lock().unwrap().push((video_id.to_string(), page));
        self
    }

    pub fn video_ids(&self) -> Vec<String> {
        self.corpus.videos().iter().map(|v| v.video_id.clone()).collect()
    }

    /// Number of `list_comments` calls served, including failed ones.
    pub fn page_calls(&self) -> usize {
        *self.page_calls.lock().unwrap()
    }
}

impl RemoteClient for FixtureClient {
    fn list_videos(&self, ids: &[String]) -> Result<Vec<VideoListing>, ClientError> {
        Ok(ids
            .iter()
            .filter_map(|id| self.corpus.video(id))
            .map(|v| VideoListing {
                video: v.clone(),
                channel: self.corpus.channel(&v.channel_id).cloned().unwrap_or_else(|| Channel {
                    channel_id: v.channel_id.clone(),
                    owner_author_id: String::new(),
                }),
            })
            .collect())
    }

    fn list_comments(&self, video_id: &str, page_token: Option<&str>) -> Result<CommentPage, ClientError> {
        *self.page_calls.lock().unwrap() += 1;
        let page: usize = match page_token {
            None => 0,
            Some(t) => t
                .strip_prefix('p')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| ClientError::Transient(format!("bad page token {t}")))?,
        };
        if self.removed.contains(video_id) {
            return Err(ClientError::Removed);
        }
        {
            let mut limits = self.pending_limits.lock().unwrap();
            if let Some(pos) = limits.iter().position(|l| l.video_id == video_id && l.page == page) {
                let l = limits.remove(pos);
                return Err(ClientError::RateLimited { retry_after_s: l.retry_after_s });
            }
        }
        {
            let mut tr = self.pending_transient.lock().unwrap();
            if let Some(pos) = tr.iter().position(|(v, p)| v == video_id && *p == page) {
                tr.remove(pos);
                return Err(ClientError::Transient("injected".into()));
            }
        }
        let all: Vec<&Comment> = self.corpus.comments_for(video_id).collect();
        let start = page * self.page_size;
        let end = (start + self.page_size).min(all.len());
        let comments = all.get(start..end).unwrap_or_default().iter().map(|c| (*c).clone()).collect();
        let next_token = (end < all.len()).then(|| format!("p{}", page + 1));
        Ok(CommentPage { comments, next_token })
    }
}
