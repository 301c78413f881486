//! Deterministic synthetic fixtures: corpora, labelled filter sets, stance
//! gold sets, reply threads and planted point clusters.
//!
//! Everything is driven by a ChaCha stream seeded from the caller, so equal
//! seeds give byte-identical output on every platform.

use crate::corpus::{Category, Channel, Comment, Corpus, Video};
use crate::stance::StanceLabel;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DAY: i64 = 86_400;
/// 2019-01-01T00:00:00Z
pub const EPOCH: i64 = 1_546_300_800;

pub struct TopicSpec {
    pub name: &'static str,
    pub category: Category,
    pub keywords: &'static [&'static str],
    pub sentences: &'static [&'static str],
    pub supports: &'static [&'static str],
    pub contradicts: &'static [&'static str],
}

pub const TOPICS: &[TopicSpec] = &[
    TopicSpec {
        name: "bioweapon",
        category: Category::OtherConspiracies,
        keywords: &["corona virus", "bio weapon", "death rate", "public health", "mortality rate"],
        sentences: &[
            "the corona virus was engineered as a bio weapon in a secret lab",
            "public health officials keep changing the death rate numbers",
            "look at the mortality rate charts and the lab leak timeline",
            "the bio weapon program funding trail leads straight to the lab",
            "corona virus samples were shipped months before the outbreak",
            "public health agencies hid the mortality rate data from the public",
        ],
        supports: &["the corona virus is a bio weapon made in a lab", "public health agencies faked the death rate"],
        contradicts: &["the corona virus came from natural animal spillover", "the death rate data is independently verified"],
    },
    TopicSpec {
        name: "pyramids",
        category: Category::OtherConspiracies,
        keywords: &["great pyramid", "ancient egypt", "lost civilization", "giza plateau", "precision stonework"],
        sentences: &[
            "the great pyramid was built by a lost civilization with advanced tools",
            "precision stonework on the giza plateau cannot be explained by copper chisels",
            "ancient egypt inherited the great pyramid from an older lost civilization",
            "the giza plateau shafts align perfectly with orion",
            "mainstream egyptologists ignore the precision stonework evidence",
            "a lost civilization left the giza plateau long before the pharaohs",
        ],
        supports: &["a lost civilization built the great pyramid", "ancient egypt could not cut precision stonework"],
        contradicts: &["ancient egypt workers built the great pyramid with ramps", "the giza plateau tombs record the builders"],
    },
    TopicSpec {
        name: "ufo",
        category: Category::OtherConspiracies,
        keywords: &["ufo sightings", "flying saucer", "space force", "alien craft", "navy pilots"],
        sentences: &[
            "navy pilots reported ufo sightings of an alien craft off the coast",
            "the space force was created to track the flying saucer fleet",
            "declassified footage shows an alien craft outrunning navy pilots",
            "ufo sightings have doubled near military bases this year",
            "the flying saucer recovered in the desert was reverse engineered",
            "space force budgets hide the alien craft recovery program",
        ],
        supports: &["navy pilots filmed a real alien craft", "the space force secretly tracks flying saucer activity"],
        contradicts: &["ufo sightings are weather balloons and drones", "navy pilots saw sensor glitches not an alien craft"],
    },
    TopicSpec {
        name: "flat_earth",
        category: Category::OtherConspiracies,
        keywords: &["flat earth", "ice wall", "curvature test", "globe model", "horizon line"],
        sentences: &[
            "the horizon line always rises to eye level which proves a flat earth",
            "the ice wall surrounds the flat earth and is guarded",
            "every laser curvature test across the lake showed zero drop",
            "the globe model relies on faked space agency pictures",
            "pilots never adjust for curvature which exposes the globe model",
            "the flat earth map explains flight routes better than the globe model",
        ],
        supports: &["the earth is flat and the horizon line proves it", "the ice wall surrounds the flat earth"],
        contradicts: &["the globe model is confirmed by satellite photos", "the curvature test shows the earth curves"],
    },
    TopicSpec {
        name: "ascension",
        category: Category::OtherConspiracies,
        keywords: &["fifth dimension", "higher consciousness", "energy field", "divine plan", "quantum field"],
        sentences: &[
            "the fifth dimension shift is raising our higher consciousness",
            "your energy field is tuned to the divine plan of ascension",
            "the quantum field responds to collective higher consciousness",
            "starseeds are here to anchor the fifth dimension frequency",
            "the divine plan unfolds as the energy field of earth rises",
            "meditation connects you to the quantum field and the fifth dimension",
        ],
        supports: &["humanity is ascending into the fifth dimension", "the quantum field responds to higher consciousness"],
        contradicts: &["the fifth dimension ascension has no scientific basis", "quantum field claims misuse physics terms"],
    },
    TopicSpec {
        name: "deep_state",
        category: Category::QAnon,
        keywords: &["deep state", "fake media", "general flynn", "military intelligence", "white hats"],
        sentences: &[
            "the deep state controls the fake media and every agency",
            "general flynn and the white hats are working with military intelligence",
            "military intelligence has the deep state under surveillance",
            "the fake media will never report what the white hats found",
            "general flynn warned us the deep state would fight back",
            "white hats inside military intelligence are running the operation",
        ],
        supports: &["the deep state controls the government", "the white hats and general flynn are exposing the deep state"],
        contradicts: &["the deep state is a myth invented online", "general flynn has no secret military intelligence role"],
    },
    TopicSpec {
        name: "federal_reserve",
        category: Category::QAnon,
        keywords: &["federal reserve", "banking system", "currency reset", "gold backed", "central bankers"],
        sentences: &[
            "the federal reserve banking system is about to collapse",
            "a gold backed currency reset is coming and central bankers know it",
            "central bankers print money to enslave the people",
            "the federal reserve was never audited by anyone",
            "the currency reset will end the central bankers power",
            "the banking system shutdown is part of the gold backed transition",
        ],
        supports: &["a gold backed currency reset is coming", "the federal reserve is secretly controlled by central bankers"],
        contradicts: &["the federal reserve is audited every year", "no currency reset is planned by any government"],
    },
    TopicSpec {
        name: "election",
        category: Category::QAnon,
        keywords: &["voter fraud", "voting machines", "stolen election", "mail ballots", "justice department"],
        sentences: &[
            "voter fraud in the swing states changed the result",
            "the voting machines flipped votes in the stolen election",
            "mail ballots arrived by truck in the middle of the night",
            "the justice department refused to investigate voter fraud",
            "forensic audits of the voting machines found the algorithm",
            "the stolen election will be overturned once the mail ballots are checked",
        ],
        supports: &["the stolen election was decided by voter fraud", "the voting machines flipped votes"],
        contradicts: &["courts found no evidence of voter fraud", "audits confirmed the voting machines counted correctly"],
    },
    TopicSpec {
        name: "cooking",
        category: Category::Baseline,
        keywords: &["sourdough starter", "cast iron", "olive oil", "baking soda", "fresh herbs"],
        sentences: &[
            "feed your sourdough starter twice a day with flour and water",
            "heat the cast iron pan until the olive oil shimmers",
            "a pinch of baking soda keeps the vegetables bright",
            "chop the fresh herbs right before serving",
            "season the cast iron after every wash",
            "the sourdough starter needs a warm kitchen to rise",
        ],
        supports: &["a sourdough starter makes better bread"],
        contradicts: &["store bought yeast works just as well as a sourdough starter"],
    },
    TopicSpec {
        name: "gardening",
        category: Category::Baseline,
        keywords: &["tomato plants", "raised beds", "compost pile", "seed starting", "drip irrigation"],
        sentences: &[
            "tomato plants love full sun and deep watering",
            "build raised beds from untreated cedar boards",
            "turn the compost pile every week to keep it hot",
            "seed starting indoors gives you a head start on spring",
            "drip irrigation saves water in the raised beds",
            "prune the tomato plants to improve airflow",
        ],
        supports: &["raised beds grow better tomato plants"],
        contradicts: &["raised beds are not needed for tomato plants"],
    },
];

const FILLER_SENTENCES: &[&str] = &[
    "so today we are going to talk about something important",
    "let me know what you think about all of this",
    "i have been researching this for a very long time",
    "stay with me until the end because this matters",
    "a lot of people have been asking me about this",
];

const BOILERPLATE: &[&str] = &[
    "don't forget to subscribe",
    "hit the bell",
    "thanks for watching",
    "link in the description",
];

const FIRST_NAMES: &[&str] = &[
    "Alice", "Bruno", "Chen", "Dana", "Emeka", "Farah", "Gus", "Hana", "Ivan", "Jade", "Kofi", "Lena", "Mateo",
    "Nia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq", "Uma", "Viktor", "Wren", "Ximena", "Yusuf", "Zoe",
];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty choice")
}

fn kw<'a>(rng: &mut ChaCha8Rng, t: &'a TopicSpec) -> &'a str {
    pick(rng, t.keywords)
}

/// Comment text generators. Each returns text for one comment.
pub mod text {
    use super::*;

    pub fn favour(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
        let k = kw(rng, t);
        let k2 = kw(rng, t);
        let claim = pick(rng, t.supports);
        match rng.random_range(0..8) {
            0 => format!("the {k} is real and they know it"),
            1 => format!("{k} is the truth and the {k2} proves it"),
            2 => format!("wake up people the {k} is real!!!"),
            3 => format!("i always knew {claim}"),
            4 => format!("{claim} and now everyone can see it"),
            5 => format!("finally someone explains the {k} and the {k2} properly"),
            6 => format!("I agree, {claim}"),
            _ => format!("this is proof that {claim}"),
        }
    }

    pub fn against(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
        let k = kw(rng, t);
        let claim = pick(rng, t.contradicts);
        match rng.random_range(0..7) {
            0 => format!("the {k} is not real and never was"),
            1 => format!("this is nonsense, {claim}"),
            2 => format!("{claim} so stop spreading this"),
            3 => format!("the {k} story is a myth"),
            4 => format!("there is no {k} at all, {claim}"),
            5 => format!("sorry but {claim}"),
            _ => format!("the {k} claims were debunked years ago"),
        }
    }

    /// Relevant but without any stance cue.
    pub fn neutral(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
        let k = kw(rng, t);
        match rng.random_range(0..5) {
            0 => format!("where can i read more about the {k} topic"),
            1 => format!("does anyone have the source for the {k} part of the video"),
            2 => format!("my uncle talks about the {k} every single weekend"),
            3 => format!("what time in the video do they mention the {k}"),
            _ => format!("watching this from overseas, curious how people here see the {k}"),
        }
    }

    /// Irrelevant comment matching one of the spam or filler patterns.
    pub fn irrelevant(rng: &mut ChaCha8Rng) -> String {
        let s: &[&str] = match rng.random_range(0..7) {
            0 => &["😂", "🔥", "👍", "!", "k", "💯", "😮", "?"],
            1 => &[
                "https://bit.ly/3xYzAbc",
                "www.cheap-pills.biz",
                "http://free-gift.win/claim",
                "https://tinyurl.com/promo77 https://tinyurl.com/promo78",
            ],
            2 => &[
                "FREE followers visit now",
                "use code SAVE20 for a discount",
                "crypto signals on telegram dm me",
                "earn money from home, click the link",
                "giveaway ends tonight sign up fast",
                "limited offer buy now before it's gone",
            ],
            3 => &["lol", "hahaha", "first", "nice", "ok", "wow", "lmao", "omg", "hmm", "bruh"],
            4 => &["check out my channel", "sub4sub anyone", "support my channel please", "follow me for more", "watch my videos"],
            5 => &["lol lol lol lol", "!!!!!!", "😂😂😂😂", "yes yes yes yes yes", "🔥🔥🔥"],
            _ => &["lmao ok", "haha nice", "wow ok", "omg lol", "first!"],
        };
        pick(rng, s).to_string()
    }

    /// Irrelevant comments that no labelling function covers.
    pub fn irrelevant_unlisted(rng: &mut ChaCha8Rng) -> String {
        pick(
            rng,
            &[
                "hxxp://spam-site dot com",
                "who is watching in 2024",
                "follow for follow",
                "new video on my page",
                "🤣🤣",
                "ok ok",
            ],
        )
        .to_string()
    }

    /// Short comments that look like filler but carry agreement.
    pub fn near_miss(rng: &mut ChaCha8Rng) -> String {
        pick(rng, &["agree", "thank you", "well said", "so true", "i agree", "exactly", "thanks", "facts", "not true", "amen"])
            .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Indices into [`TOPICS`].
    pub topics: Vec<usize>,
    pub videos_per_topic: usize,
    /// Total comments, spread over videos.
    pub comments: usize,
    pub users: usize,
    pub reply_share: f64,
    pub irrelevant_share: f64,
    pub creator_share: f64,
    /// Share of comments arriving within seven days of the video.
    pub first_week_share: f64,
    pub missing_transcript_share: f64,
    pub label: String,
}

impl SynthConfig {
    /// A few dozen comments over three topics.
    pub fn small(seed: u64) -> Self {
        SynthConfig {
            seed,
            topics: vec![0, 5, 8],
            videos_per_topic: 3,
            comments: 90,
            users: 25,
            reply_share: 0.3,
            irrelevant_share: 0.2,
            creator_share: 0.05,
            first_week_share: 0.75,
            missing_transcript_share: 0.0,
            label: format!("synthetic-small-{seed}"),
        }
    }

    /// The 10,000-comment corpus over every topic.
    pub fn standard(seed: u64) -> Self {
        SynthConfig {
            seed,
            topics: (0..TOPICS.len()).collect(),
            videos_per_topic: 20,
            comments: 10_000,
            users: 2_500,
            reply_share: 0.3,
            irrelevant_share: 0.18,
            creator_share: 0.02,
            first_week_share: 0.75,
            missing_transcript_share: 0.05,
            label: format!("synthetic-standard-{seed}"),
        }
    }
}

/// Transcript for a video on topic `t`; about half come without punctuation.
pub fn transcript(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
    let mut parts: Vec<String> = Vec::new();
    parts.push(pick(rng, FILLER_SENTENCES).to_string());
    for _ in 0..rng.random_range(8..14) {
        parts.push(pick(rng, t.sentences).to_string());
        if rng.random_bool(0.15) {
            parts.push(pick(rng, FILLER_SENTENCES).to_string());
        }
    }
    parts.push(pick(rng, BOILERPLATE).to_string());
    if rng.random_bool(0.5) {
        parts.join(" ")
    } else {
        parts.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")
    }
}

fn author_weights(n: usize) -> Vec<f64> {
    // Zipf-like activity with exponent 1.1
    (1..=n).map(|r| 1.0 / (r as f64).powf(1.1)).collect()
}

fn sample_weighted(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let x = rng.random_range(0.0..*cumulative.last().expect("non-empty"));
    cumulative.partition_point(|c| *c <= x).min(cumulative.len() - 1)
}

fn comment_delay(rng: &mut ChaCha8Rng, first_week_share: f64) -> i64 {
    if rng.random_bool(first_week_share) {
        // front-loaded within the first week
        let u: f64 = rng.random_range(0.0f64..1.0);
        ((u * u) * 7.0 * DAY as f64) as i64
    } else {
        7 * DAY + 1 + rng.random_range(0..600 * DAY)
    }
}

/// A multi-category corpus with transcripts, threads, spam and creator replies.
pub fn synthetic_corpus(cfg: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut channels = Vec::new();
    let mut videos: Vec<(Video, &TopicSpec)> = Vec::new();
    for &ti in &cfg.topics {
        let t = &TOPICS[ti];
        let n_channels = cfg.videos_per_topic.clamp(1, 3);
        for c in 0..n_channels {
            channels.push(Channel { channel_id: format!("ch-{}-{c}", t.name), owner_author_id: format!("owner-{}-{c}", t.name) });
        }
        for v in 0..cfg.videos_per_topic {
            let published_at = EPOCH + rng.random_range(0..900 * DAY);
            let transcript = (!rng.random_bool(cfg.missing_transcript_share)).then(|| transcript(&mut rng, t));
            videos.push((
                Video {
                    video_id: format!("vid-{}-{v:03}", t.name),
                    channel_id: format!("ch-{}-{}", t.name, v % n_channels),
                    title: format!("{} part {v}", t.keywords[v % t.keywords.len()]),
                    published_at,
                    view_count: 0,
                    like_count: 0,
                    reported_comment_count: 0,
                    category: t.category,
                    transcript,
                },
                t,
            ));
        }
    }

    let weights = author_weights(cfg.users.max(1));
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |s, w| {
            *s += w;
            Some(*s)
        })
        .collect();
    let display = |u: usize| format!("{} {}", FIRST_NAMES[u % FIRST_NAMES.len()], u);

    let n_videos = videos.len().max(1);
    let mut comments: Vec<Comment> = Vec::with_capacity(cfg.comments);
    let mut next = 0usize;
    for (vi, (video, topic)) in videos.iter().enumerate() {
        let quota = cfg.comments / n_videos + usize::from(vi < cfg.comments % n_videos);
        let start = comments.len();
        for _ in 0..quota {
            let id = format!("c{next:06}");
            next += 1;
            let u = sample_weighted(&mut rng, &cumulative);
            let mut author_id = format!("user-{u:05}");
            let mut author_display = display(u);
            let published_at = video.published_at + comment_delay(&mut rng, cfg.first_week_share);
            let earlier: Vec<&Comment> = comments[start..].iter().filter(|c| c.is_top_level()).collect();
            let parent = (!earlier.is_empty() && rng.random_bool(cfg.reply_share)).then(|| *pick(&mut rng, &earlier));
            let text = if rng.random_bool(cfg.creator_share) {
                let ch = channels.iter().find(|c| c.channel_id == video.channel_id).expect("channel exists");
                author_id = ch.owner_author_id.clone();
                author_display = format!("{} official", topic.name);
                "thanks everyone for watching, more coming soon".to_string()
            } else if rng.random_bool(cfg.irrelevant_share) {
                if rng.random_bool(0.1) {
                    text::irrelevant_unlisted(&mut rng)
                } else {
                    text::irrelevant(&mut rng)
                }
            } else if let Some(p) = parent {
                let mention = rng.random_bool(0.2);
                let body = match rng.random_range(0..4) {
                    0 => "exactly, well said".to_string(),
                    1 => "you're wrong about this".to_string(),
                    2 => text::favour(&mut rng, topic),
                    _ => text::against(&mut rng, topic),
                };
                if mention {
                    format!("@{} {body}", p.author_display.split_whitespace().next().unwrap_or_default())
                } else {
                    body
                }
            } else {
                match rng.random_range(0..100) {
                    0..=59 => text::favour(&mut rng, topic),
                    60..=79 => text::against(&mut rng, topic),
                    80..=91 => text::neutral(&mut rng, topic),
                    _ => text::near_miss(&mut rng),
                }
            };
            let parent_id = parent.map(|p| p.comment_id.clone());
            let published_at = match &parent {
                Some(p) => p.published_at.max(published_at - DAY) + rng.random_range(60..DAY),
                None => published_at,
            };
            comments.push(Comment {
                comment_id: id,
                video_id: video.video_id.clone(),
                parent_id,
                author_id,
                author_display,
                text,
                published_at,
                like_count: rng.random_range(0..50),
            });
        }
    }

    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for c in &comments {
        *counts.entry(c.video_id.as_str()).or_insert(0) += 1;
    }
    let videos: Vec<Video> = videos
        .into_iter()
        .map(|(mut v, _)| {
            let n = counts.get(v.video_id.as_str()).copied().unwrap_or(0);
            // platform counters include a few removed comments
            v.reported_comment_count = n + rng.random_range(0..=n / 10 + 1);
            v.like_count = n * rng.random_range(8..15) + rng.random_range(0..40);
            v.view_count = v.like_count * rng.random_range(20..60) + rng.random_range(0..5_000);
            v
        })
        .collect();
    Corpus::new(cfg.label.clone(), videos, channels, comments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledText {
    pub text: String,
    pub irrelevant: bool,
}

/// Labelled filter evaluation set: spam and filler patterns, unlisted
/// irrelevant variants, substantive comments and short near-misses.
pub fn filter_fixture(seed: u64, n: usize) -> Vec<LabelledText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = pick(&mut rng, TOPICS);
            match rng.random_range(0..100) {
                0..=33 => LabelledText { text: text::irrelevant(&mut rng), irrelevant: true },
                34..=37 => LabelledText { text: text::irrelevant_unlisted(&mut rng), irrelevant: true },
                38..=51 => LabelledText { text: text::near_miss(&mut rng), irrelevant: false },
                52..=61 => LabelledText { text: text::neutral(&mut rng, t), irrelevant: false },
                62..=84 => LabelledText { text: text::favour(&mut rng, t), irrelevant: false },
                _ => LabelledText { text: text::against(&mut rng, t), irrelevant: false },
            }
        })
        .collect()
}

/// Unlabelled texts drawn from the same generators, for training the filter.
pub fn filter_training_pool(seed: u64, n: usize) -> Vec<String> {
    filter_fixture(seed ^ 0x9e37_79b9_7f4a_7c15, n).into_iter().map(|l| l.text).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldTopic {
    pub topic_id: i32,
    pub keywords: Vec<String>,
    /// Claim file contents in `S|C<TAB>claim` form.
    pub kb: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldItem {
    pub comment_id: String,
    pub topic_id: i32,
    pub text: String,
    pub gold: StanceLabel,
    /// The three simulated annotator votes behind `gold`.
    pub annotations: [StanceLabel; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceGoldSet {
    pub topics: Vec<GoldTopic>,
    pub items: Vec<GoldItem>,
}

/// Share of gold items written without any cue the detector reads
/// (sarcasm, hedged doubt, implicit agreement).
pub const HARD_CASE_SHARE: f64 = 0.12;

fn hard_favour(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
    let k = kw(rng, t);
    match rng.random_range(0..3) {
        0 => format!("funny how nobody on tv talks about the {k}, makes you think"),
        1 => format!("they laughed at us about the {k} ten years ago, who is laughing now"),
        _ => "connect the dots people".to_string(),
    }
}

fn hard_against(rng: &mut ChaCha8Rng, t: &TopicSpec) -> String {
    let k = kw(rng, t);
    match rng.random_range(0..3) {
        0 => format!("sure, and the {k} is real too, great research guys"),
        1 => format!("i would need to see actual evidence for the {k} before believing any of it"),
        _ => format!("the {k} stuff is what happens when people skip science class"),
    }
}

/// Top-level comments with Favour/Against gold from three simulated
/// annotators (each flips the intended label with probability 0.05).
pub fn stance_gold_set(seed: u64, n: usize) -> StanceGoldSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conspiracy: Vec<(usize, &TopicSpec)> =
        TOPICS.iter().enumerate().filter(|(_, t)| t.category != Category::Baseline).collect();
    let topics = conspiracy
        .iter()
        .map(|(i, t)| GoldTopic {
            topic_id: *i as i32,
            keywords: t.keywords.iter().map(|s| s.to_string()).collect(),
            kb: t
                .supports
                .iter()
                .map(|c| format!("S\t{c}\n"))
                .chain(t.contradicts.iter().map(|c| format!("C\t{c}\n")))
                .collect(),
        })
        .collect();
    let items = (0..n)
        .map(|i| {
            let (ti, t) = *pick(&mut rng, &conspiracy);
            let intended = if rng.random_bool(0.75) { StanceLabel::Favour } else { StanceLabel::Against };
            let hard = rng.random_bool(HARD_CASE_SHARE);
            let text = match (intended, hard) {
                (StanceLabel::Favour, false) => text::favour(&mut rng, t),
                (StanceLabel::Favour, true) => hard_favour(&mut rng, t),
                (_, false) => text::against(&mut rng, t),
                (_, true) => hard_against(&mut rng, t),
            };
            let annotations = [0; 3].map(|_| if rng.random_bool(0.05) { intended.flipped() } else { intended });
            let favour_votes = annotations.iter().filter(|l| **l == StanceLabel::Favour).count();
            let gold = if favour_votes >= 2 { StanceLabel::Favour } else { StanceLabel::Against };
            GoldItem { comment_id: format!("g{i:04}"), topic_id: ti as i32, text, gold, annotations }
        })
        .collect();
    StanceGoldSet { topics, items }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadFixture {
    pub top: Comment,
    pub replies: Vec<Comment>,
    /// Expected label of every comment in the thread, top first.
    pub expected: BTreeMap<String, StanceLabel>,
    /// Expected anchor comment of each reply.
    pub expected_anchor: BTreeMap<String, String>,
}

/// Threads whose labels follow from explicit markers alone: the top-level
/// comment carries an explicit agreement or disagreement, and each reply
/// either agrees or disagrees with its parent or with an @-mentioned earlier
/// participant. Expected labels are derived by walking the propagation rule.
pub fn thread_fixture(seed: u64, threads: usize) -> Vec<ThreadFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agree = ["exactly, well said", "so true", "I agree with this", "absolutely", "spot on"];
    let disagree = ["you're wrong about this", "that's false", "this is nonsense", "I disagree", "not true"];
    (0..threads)
        .map(|ti| {
            let t = pick(&mut rng, &TOPICS[..8]);
            let k = kw(&mut rng, t);
            let top_favour = rng.random_bool(0.6);
            let top_text = if top_favour {
                format!("I agree, the {k} matters")
            } else {
                format!("this is nonsense about the {k}")
            };
            let base = EPOCH + ti as i64 * DAY;
            let mk = |id: String, text: String, who: usize, t: i64, parent: Option<&str>| Comment {
                comment_id: id,
                video_id: format!("thread-video-{ti:02}"),
                parent_id: parent.map(String::from),
                author_id: format!("author-{who}"),
                author_display: format!("{} {}", FIRST_NAMES[who % FIRST_NAMES.len()], who),
                text,
                published_at: t,
                like_count: 0,
            };
            let top_id = format!("t{ti:02}-0");
            let top = mk(top_id.clone(), top_text, 0, base, None);
            let mut expected = BTreeMap::from([(top_id.clone(), if top_favour { StanceLabel::Favour } else { StanceLabel::Against })]);
            let mut expected_anchor = BTreeMap::new();
            let mut participants: Vec<(usize, String)> = vec![(0, top_id.clone())];
            let mut replies = Vec::new();
            for r in 1..=rng.random_range(2..6usize) {
                let who = ti * 10 + r;
                let id = format!("t{ti:02}-{r}");
                let agrees = rng.random_bool(0.5);
                let body = if agrees { *pick(&mut rng, &agree) } else { *pick(&mut rng, &disagree) };
                let (text, anchor_id) = if r > 1 && rng.random_bool(0.4) {
                    let (pw, pid) = participants[rng.random_range(0..participants.len())].clone();
                    let first = FIRST_NAMES[pw % FIRST_NAMES.len()].to_lowercase();
                    (format!("@{first} {body}"), pid)
                } else {
                    (body.to_string(), top_id.clone())
                };
                let anchor_label = expected[&anchor_id];
                expected.insert(id.clone(), if agrees { anchor_label } else { anchor_label.flipped() });
                expected_anchor.insert(id.clone(), anchor_id);
                // out-of-order timestamps exercise the temporal sort
                let ts = base + r as i64 * 600;
                replies.push(mk(id.clone(), text, who, ts, Some(&top_id)));
                participants.push((who, id));
            }
            replies.reverse();
            ThreadFixture { top, replies, expected, expected_anchor }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedClusters {
    pub points: Vec<Vec<f64>>,
    /// Planted label per point; the outlier is −1.
    pub labels: Vec<i32>,
    pub intra_spread: f64,
    pub separation: f64,
}

/// `k` Gaussian-ish blobs in `dim` dimensions whose centres sit at least
/// `ratio × spread` apart, plus one far outlier (last point).
pub fn planted_clusters(seed: u64, k: usize, per_cluster: usize, dim: usize, ratio: f64) -> PlantedClusters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = 1.0;
    let separation = ratio * spread;
    let mut centres: Vec<Vec<f64>> = Vec::new();
    while centres.len() < k {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0 * separation..2.0 * separation)).collect();
        let far = centres.iter().all(|o| crate::topics::hdbscan::euclidean(o, &c) >= separation + 2.0 * spread);
        if far {
            centres.push(c);
        }
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (ci, c) in centres.iter().enumerate() {
        for _ in 0..per_cluster {
            // uniform in a ball of radius `spread`
            let dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            let r = spread * rng.random_range(0.0f64..1.0).powf(1.0 / dim as f64);
            points.push(c.iter().zip(&dir).map(|(a, d)| a + r * d / norm).collect());
            labels.push(ci as i32);
        }
    }
    points.push(vec![20.0 * separation; dim]);
    labels.push(-1);
    PlantedClusters { points, labels, intra_spread: spread, separation }
}

/// One video with `n` comments of which exactly `round(share · n)` arrive
/// within seven days of publication.
pub fn burst_corpus(seed: u64, n: usize, share: f64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inside = (share * n as f64).round() as usize;
    let video = Video {
        video_id: "burst".into(),
        channel_id: "ch-burst".into(),
        title: "burst".into(),
        published_at: EPOCH,
        view_count: 1000,
        like_count: 10,
        reported_comment_count: n as u64,
        category: Category::OtherConspiracies,
        transcript: None,
    };
    let comments = (0..n)
        .map(|i| {
            let delay = if i < inside { rng.random_range(0..7 * DAY) } else { 7 * DAY + 1 + rng.random_range(0..90 * DAY) };
            Comment {
                comment_id: format!("b{i:05}"),
                video_id: "burst".into(),
                parent_id: None,
                author_id: format!("u{}", i % 97),
                author_display: format!("u{}", i % 97),
                text: "burst comment".into(),
                published_at: EPOCH + delay,
                like_count: 0,
            }
        })
        .collect();
    Corpus::new(
        "burst",
        vec![video],
        vec![Channel { channel_id: "ch-burst".into(), owner_author_id: "owner-burst".into() }],
        comments,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = synthetic_corpus(&SynthConfig::small(1));
        let b = synthetic_corpus(&SynthConfig::small(1));
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), synthetic_corpus(&SynthConfig::small(2)).fingerprint());
    }

    #[test]
    fn standard_has_exact_comment_count() {
        let c = synthetic_corpus(&SynthConfig::standard(7));
        assert_eq!(c.comments().len(), 10_000);
        assert_eq!(c.categories().len(), 3);
    }

    #[test]
    fn replies_follow_parents() {
        let c = synthetic_corpus(&SynthConfig::small(4));
        for r in c.comments().iter().filter(|c| !c.is_top_level()) {
            let p = c.comments().iter().find(|p| Some(&p.comment_id) == r.parent_id.as_ref()).unwrap();
            assert!(r.published_at > p.published_at);
        }
    }

    #[test]
    fn burst_share_exact() {
        let c = burst_corpus(1, 1000, 0.75);
        let inside = c.comments().iter().filter(|x| x.published_at - EPOCH <= 7 * DAY).count();
        assert_eq!(inside, 750);
    }

    #[test]
    fn gold_majority_rule() {
        let g = stance_gold_set(3, 300);
        assert_eq!(g.items.len(), 300);
        for it in &g.items {
            let f = it.annotations.iter().filter(|l| **l == StanceLabel::Favour).count();
            assert_eq!(it.gold == StanceLabel::Favour, f >= 2);
        }
    }

    #[test]
    fn planted_outlier_last() {
        let p = planted_clusters(1, 3, 12, 2, 5.0);
        assert_eq!(p.points.len(), 37);
        assert_eq!(*p.labels.last().unwrap(), -1);
    }
}
