//! Logistic regression over hashed word and character n-grams, trained on
//! soft (probabilistic) targets.

use crate::embed::fnv;
use crate::text;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const FEATURE_BITS: u32 = 18;
const FEATURE_SEED: u64 = 0xf1_17e5;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("need at least {min} training texts, got {got}")]
    TooFewTexts { got: usize, min: usize },
    #[error("all training targets are identical ({0}); nothing to learn")]
    DegenerateLabels(f64),
    #[error("{texts} texts but {labels} labels")]
    LengthMismatch { texts: usize, labels: usize },
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub min_texts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 12, learning_rate: 0.5, l2: 1e-6, seed: 17, min_texts: 100 }
    }
}

/// Sparse, L2-normalised feature vector: word 1-2 grams and char 3-5 grams.
pub fn featurize(raw: &str) -> Vec<(u32, f64)> {
    let mask = (1u64 << FEATURE_BITS) - 1;
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    let mut add = |kind: u8, gram: &str| {
        let mut bytes = Vec::with_capacity(gram.len() + 1);
        bytes.push(kind);
        bytes.extend_from_slice(gram.as_bytes());
        let h = fnv(FEATURE_SEED, &bytes);
        *acc.entry((h & mask) as u32).or_default() += 1.0;
    };
    let toks = text::tokens(raw);
    for t in &toks {
        add(b'w', t);
    }
    for w in toks.windows(2) {
        add(b'b', &format!("{} {}", w[0], w[1]));
    }
    if toks.is_empty() {
        add(b'e', "");
    }
    let lower: Vec<char> = format!(" {} ", raw.trim().to_lowercase()).chars().collect();
    for n in 3..=5 {
        for w in lower.windows(n) {
            add(b'c', &w.iter().collect::<String>());
        }
    }
    let norm = acc.values().map(|v| v * v).sum::<f64>().sqrt();
    acc.into_iter().map(|(k, v)| (k, v / norm)).collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearClassifier {
    pub fn p_irrelevant(&self, text: &str) -> f64 {
        let z: f64 = featurize(text).iter().map(|(i, v)| self.weights[*i as usize] * v).sum::<f64>() + self.bias;
        sigmoid(z)
    }
}

/// Trains with AdaGrad on soft cross-entropy. Deterministic for a fixed seed.
pub fn train_discriminative(labels: &[f64], texts: &[&str], cfg: &TrainConfig) -> Result<LinearClassifier, TrainError> {
    if labels.len() != texts.len() {
        return Err(TrainError::LengthMismatch { texts: texts.len(), labels: labels.len() });
    }
    if texts.len() < cfg.min_texts {
        return Err(TrainError::TooFewTexts { got: texts.len(), min: cfg.min_texts });
    }
    let lo = labels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        return Err(TrainError::DegenerateLabels(lo));
    }
    let feats: Vec<Vec<(u32, f64)>> = texts.iter().map(|t| featurize(t)).collect();
    let dim = 1usize << FEATURE_BITS;
    let mut w = vec![0.0; dim];
    let mut g2 = vec![1e-8; dim];
    let mut b = 0.0;
    let mut gb2 = 1e-8;
    let mut order: Vec<usize> = (0..texts.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &feats[i];
            let z: f64 = x.iter().map(|(k, v)| w[*k as usize] * v).sum::<f64>() + b;
            let err = sigmoid(z) - labels[i];
            for (k, v) in x {
                let k = *k as usize;
                let g = err * v + cfg.l2 * w[k];
                g2[k] += g * g;
                w[k] -= cfg.learning_rate * g / g2[k].sqrt();
            }
            gb2 += err * err;
            b -= cfg.learning_rate * err / gb2.sqrt();
        }
    }
    Ok(LinearClassifier { weights: w, bias: b })
}
