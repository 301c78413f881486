//! Weakly supervised irrelevant-comment filtering.
//!
//! Labelling functions vote on each comment, a generative label model turns
//! the votes into soft labels, and a hashed n-gram logistic classifier is
//! trained on those labels so it can score comments no function covers.

mod classifier;
mod functions;
mod label_model;

pub use classifier::{featurize, train_discriminative, LinearClassifier, TrainConfig, TrainError, FEATURE_BITS};
pub use functions::{apply_label_functions, FilterLexicons, LabelVote, Vote, FUNCTION_IDS};
pub use label_model::{
    fit_label_model, probabilistic_labels, LabelModel, LabelModelConfig, LabelModelError, PosteriorMode, VoteMatrix,
};

use crate::corpus::Corpus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    LabelModel(#[from] LabelModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Keep,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub comment_id: String,
    pub p_irrelevant: f64,
    pub decision: Decision,
    pub votes: Vec<LabelVote>,
}

/// Builds the comments × functions vote matrix.
pub fn vote_matrix(texts: &[&str], lex: &FilterLexicons) -> VoteMatrix {
    let rows = par_map(texts, |t| apply_label_functions(t, lex).into_iter().map(|v| v.vote).collect());
    VoteMatrix { function_ids: FUNCTION_IDS.iter().map(|s| s.to_string()).collect(), rows }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.iter().map(f).collect()
}

/// The scorer used by [`filter_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    pub lexicons: FilterLexicons,
    pub label_model: LabelModel,
    /// `None` when training was refused; the label model then scores alone.
    pub classifier: Option<LinearClassifier>,
}

impl FilterModel {
    pub fn score(&self, text: &str) -> (f64, Vec<LabelVote>) {
        let votes = apply_label_functions(text, &self.lexicons);
        let p = match &self.classifier {
            Some(c) => c.p_irrelevant(text),
            None => {
                let row: Vec<Vote> = votes.iter().map(|v| v.vote).collect();
                self.label_model.posterior(&row)
            }
        };
        (p, votes)
    }

    pub fn verdict(&self, comment_id: &str, text: &str, threshold: f64) -> FilterVerdict {
        let (p, votes) = self.score(text);
        // keep p strictly inside (0,1) so thresholds 0 and 1 are exact boundaries
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        let decision = if p >= threshold { Decision::Drop } else { Decision::Keep };
        FilterVerdict { comment_id: comment_id.to_string(), p_irrelevant: p, decision, votes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSummary {
    pub texts: usize,
    pub label_mode: PosteriorMode,
    pub classifier_trained: bool,
    pub fallback_reason: Option<String>,
}

/// Fits the label model on `texts` and trains the discriminative classifier on
/// its soft labels, falling back to the label model when training is refused.
pub fn train_filter(
    texts: &[&str],
    lexicons: FilterLexicons,
    lm_cfg: &LabelModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(FilterModel, TrainingSummary), FilterError> {
    let vm = vote_matrix(texts, &lexicons);
    let label_model = fit_label_model(&vm, lm_cfg)?;
    let soft = probabilistic_labels(&label_model, &vm);
    let (classifier, fallback_reason) = match train_discriminative(&soft, texts, train_cfg) {
        Ok(c) => (Some(c), None),
        Err(e) => {
            log::warn!("discriminative training refused: {e}; using label model");
            (None, Some(e.to_string()))
        }
    };
    let summary = TrainingSummary {
        texts: texts.len(),
        label_mode: label_model.mode,
        classifier_trained: classifier.is_some(),
        fallback_reason,
    };
    Ok((FilterModel { lexicons, label_model, classifier }, summary))
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub kept: Corpus,
    pub dropped: Vec<FilterVerdict>,
}

/// Partitions the corpus comments by `p_irrelevant >= threshold`.
pub fn filter_corpus(corpus: &Corpus, model: &FilterModel, threshold: f64) -> FilterOutcome {
    let comments = corpus.comments();
    let verdicts = par_map(comments, |c| model.verdict(&c.comment_id, &c.text, threshold));
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (c, v) in comments.iter().zip(verdicts) {
        match v.decision {
            Decision::Keep => kept.push(c.clone()),
            Decision::Drop => dropped.push(v),
        }
    }
    FilterOutcome { kept: corpus.with_comments(kept), dropped }
}
