//! Two-class generative label model fit by expectation-maximisation.
//!
//! The true relevance label is latent; each labelling function is a noisy
//! voter that, when it does not abstain, agrees with the true label with
//! probability `accuracy` independently of the other functions.

use super::functions::Vote;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LabelModelError {
    #[error("need at least 2 labelling functions that vote somewhere, found {0}")]
    TooFewFunctions(usize),
    #[error("vote matrix rows have inconsistent widths")]
    Ragged,
}

/// Rows are comments, columns are labelling functions.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    pub function_ids: Vec<String>,
    pub rows: Vec<Vec<Vote>>,
}

impl VoteMatrix {
    pub fn width(&self) -> usize {
        self.function_ids.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosteriorMode {
    Generative,
    /// Fraction of non-abstaining votes that say irrelevant.
    MajorityVote,
}

#[derive(Debug, Clone)]
pub struct LabelModelConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub init_accuracy: f64,
    pub init_prior: f64,
    /// Re-estimate the class prior in the M-step. Off by default: when most
    /// rows carry a single vote, a free prior drifts and drags every
    /// single-voter function's accuracy towards 0 or 1.
    pub learn_prior: bool,
    /// Below this many rows the model falls back to majority vote.
    pub min_rows: usize,
}

impl Default for LabelModelConfig {
    fn default() -> Self {
        LabelModelConfig { max_iter: 100, tol: 1e-6, init_accuracy: 0.7, init_prior: 0.5, learn_prior: false, min_rows: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub function_ids: Vec<String>,
    /// Per-function accuracy. Excluded functions carry 0.5, which cancels.
    pub accuracies: Vec<f64>,
    /// Prior probability of the irrelevant class.
    pub prior: f64,
    pub excluded: Vec<String>,
    pub mode: PosteriorMode,
    /// Log-likelihood at initialisation and after every iteration.
    pub log_likelihood: Vec<f64>,
}

fn row_terms(acc: &[f64], prior: f64, row: &[Vote]) -> (f64, f64) {
    // log P(votes, y=irrelevant), log P(votes, y=relevant); abstain factors cancel
    let mut li = prior.ln();
    let mut lr = (1.0 - prior).ln();
    for (a, v) in acc.iter().zip(row) {
        match v {
            Vote::Irrelevant => {
                li += a.ln();
                lr += (1.0 - a).ln();
            }
            Vote::Relevant => {
                li += (1.0 - a).ln();
                lr += a.ln();
            }
            Vote::Abstain => {}
        }
    }
    (li, lr)
}

fn posterior_and_ll(acc: &[f64], prior: f64, row: &[Vote]) -> (f64, f64) {
    let (li, lr) = row_terms(acc, prior, row);
    let m = li.max(lr);
    let ll = m + ((li - m).exp() + (lr - m).exp()).ln();
    ((li - ll).exp(), ll)
}

impl LabelModel {
    /// Model with fixed parameters; no fitting.
    pub fn with_params(function_ids: Vec<String>, accuracies: Vec<f64>, prior: f64) -> Self {
        LabelModel {
            function_ids,
            accuracies,
            prior,
            excluded: Vec::new(),
            mode: PosteriorMode::Generative,
            log_likelihood: Vec::new(),
        }
    }

    pub fn majority_vote(function_ids: Vec<String>, prior: f64) -> Self {
        let n = function_ids.len();
        LabelModel { mode: PosteriorMode::MajorityVote, ..Self::with_params(function_ids, vec![0.5; n], prior) }
    }

    pub fn posterior(&self, row: &[Vote]) -> f64 {
        match self.mode {
            PosteriorMode::Generative => posterior_and_ll(&self.accuracies, self.prior, row).0,
            PosteriorMode::MajorityVote => {
                let irr = row.iter().filter(|v| **v == Vote::Irrelevant).count();
                let rel = row.iter().filter(|v| **v == Vote::Relevant).count();
                if irr + rel == 0 {
                    self.prior
                } else {
                    irr as f64 / (irr + rel) as f64
                }
            }
        }
    }

    pub fn log_likelihood_of(&self, m: &VoteMatrix) -> f64 {
        m.rows.iter().map(|r| posterior_and_ll(&self.accuracies, self.prior, r).1).sum()
    }
}

pub fn fit_label_model(m: &VoteMatrix, cfg: &LabelModelConfig) -> Result<LabelModel, LabelModelError> {
    let k = m.width();
    if m.rows.iter().any(|r| r.len() != k) {
        return Err(LabelModelError::Ragged);
    }
    let voting: Vec<bool> = (0..k)
        .map(|j| m.rows.iter().any(|r| r[j] != Vote::Abstain))
        .collect();
    let active = voting.iter().filter(|v| **v).count();
    if active < 2 {
        return Err(LabelModelError::TooFewFunctions(active));
    }
    let excluded: Vec<String> = (0..k)
        .filter(|&j| !voting[j])
        .map(|j| m.function_ids[j].clone())
        .collect();
    for id in &excluded {
        log::warn!("labelling function {id} always abstains; excluded from the label model");
    }
    if m.rows.len() < cfg.min_rows {
        let mut lm = LabelModel::majority_vote(m.function_ids.clone(), cfg.init_prior);
        lm.excluded = excluded;
        return Ok(lm);
    }

    let mut acc: Vec<f64> = voting.iter().map(|&v| if v { cfg.init_accuracy } else { 0.5 }).collect();
    let mut prior = cfg.init_prior;
    let mut q = vec![0.0; m.rows.len()];
    let e_step = |acc: &[f64], prior: f64, q: &mut [f64]| -> f64 {
        let mut ll = 0.0;
        for (qi, row) in q.iter_mut().zip(&m.rows) {
            let (p, l) = posterior_and_ll(acc, prior, row);
            *qi = p;
            ll += l;
        }
        ll
    };
    let mut trace = vec![e_step(&acc, prior, &mut q)];
    for _ in 0..cfg.max_iter {
        for j in (0..k).filter(|&j| voting[j]) {
            let (mut hit, mut n) = (0.0, 0.0);
            for (qi, row) in q.iter().zip(&m.rows) {
                match row[j] {
                    Vote::Irrelevant => {
                        hit += qi;
                        n += 1.0;
                    }
                    Vote::Relevant => {
                        hit += 1.0 - qi;
                        n += 1.0;
                    }
                    Vote::Abstain => {}
                }
            }
            acc[j] = (hit / n).clamp(EPS, 1.0 - EPS);
        }
        if cfg.learn_prior {
            prior = (q.iter().sum::<f64>() / q.len() as f64).clamp(EPS, 1.0 - EPS);
        }
        let ll = e_step(&acc, prior, &mut q);
        let prev = *trace.last().unwrap();
        trace.push(ll);
        if ll - prev < cfg.tol {
            break;
        }
    }
    Ok(LabelModel {
        function_ids: m.function_ids.clone(),
        accuracies: acc,
        prior,
        excluded,
        mode: PosteriorMode::Generative,
        log_likelihood: trace,
    })
}

/// Posterior probability of the irrelevant class for every row.
pub fn probabilistic_labels(model: &LabelModel, m: &VoteMatrix) -> Vec<f64> {
    m.rows.iter().map(|r| model.posterior(r)).collect()
}
