//! Classification report and per-dataset stance proportions.

use super::{StanceError, StanceLabel, StanceResult};
use crate::corpus::{Category, Corpus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: StanceLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Favour and Against rows.
    pub rows: Vec<ClassRow>,
    pub accuracy: f64,
    pub macro_avg: (f64, f64, f64),
    pub weighted_avg: (f64, f64, f64),
    pub total: usize,
    /// Gold items predicted Neutral; each counts as an error.
    pub neutral_predictions: usize,
    /// Gold items with no prediction; each counts as an error.
    pub missing_predictions: usize,
}

impl ClassReport {
    pub fn row(&self, label: StanceLabel) -> Option<&ClassRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores predictions against Favour/Against gold labels. Neutral or missing
/// predictions count as errors for either class.
pub fn evaluate_stance(
    predictions: &BTreeMap<String, StanceLabel>,
    gold: &BTreeMap<String, StanceLabel>,
) -> Result<ClassReport, StanceError> {
    let gold: Vec<(&String, StanceLabel)> =
        gold.iter().filter(|(_, l)| **l != StanceLabel::Neutral).map(|(k, l)| (k, *l)).collect();
    if gold.is_empty() {
        return Err(StanceError::EmptyGold);
    }
    let classes = [StanceLabel::Favour, StanceLabel::Against];
    let mut correct = 0;
    let mut neutral = 0;
    let mut missing = 0;
    let mut tp: BTreeMap<StanceLabel, usize> = BTreeMap::new();
    let mut predicted: BTreeMap<StanceLabel, usize> = BTreeMap::new();
    let mut support: BTreeMap<StanceLabel, usize> = BTreeMap::new();
    for (id, g) in &gold {
        *support.entry(*g).or_insert(0) += 1;
        match predictions.get(*id) {
            None => missing += 1,
            Some(StanceLabel::Neutral) => neutral += 1,
            Some(p) => {
                *predicted.entry(*p).or_insert(0) += 1;
                if p == g {
                    correct += 1;
                    *tp.entry(*g).or_insert(0) += 1;
                }
            }
        }
    }
    let rows: Vec<ClassRow> = classes
        .iter()
        .map(|&c| {
            let t = tp.get(&c).copied().unwrap_or(0);
            let precision = ratio(t, predicted.get(&c).copied().unwrap_or(0));
            let s = support.get(&c).copied().unwrap_or(0);
            let recall = ratio(t, s);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassRow { label: c, precision, recall, f1, support: s }
        })
        .collect();
    let total = gold.len();
    let k = rows.len() as f64;
    let macro_avg = (
        rows.iter().map(|r| r.precision).sum::<f64>() / k,
        rows.iter().map(|r| r.recall).sum::<f64>() / k,
        rows.iter().map(|r| r.f1).sum::<f64>() / k,
    );
    let w = |f: fn(&ClassRow) -> f64| rows.iter().map(|r| f(r) * r.support as f64).sum::<f64>() / total as f64;
    let weighted_avg = (w(|r| r.precision), w(|r| r.recall), w(|r| r.f1));
    Ok(ClassReport {
        accuracy: ratio(correct, total),
        rows,
        macro_avg,
        weighted_avg,
        total,
        neutral_predictions: neutral,
        missing_predictions: missing,
    })
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>14} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support")?;
        writeln!(f)?;
        for r in &self.rows {
            writeln!(f, "{:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}", r.label.as_str(), r.precision, r.recall, r.f1, r.support)?;
        }
        writeln!(f)?;
        writeln!(f, "{:>14} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.total)?;
        let (p, r, f1) = self.macro_avg;
        writeln!(f, "{:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}", "macro avg", p, r, f1, self.total)?;
        let (p, r, f1) = self.weighted_avg;
        write!(f, "{:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}", "weighted avg", p, r, f1, self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceSummaryRow {
    pub dataset: Category,
    pub total: usize,
    /// Share per label; all zero when `empty`.
    pub proportions: BTreeMap<StanceLabel, f64>,
    pub counts: BTreeMap<StanceLabel, usize>,
    pub empty: bool,
}

/// Label proportions per dataset present in the corpus.
pub fn stance_summary(corpus: &Corpus, results: &[StanceResult]) -> Vec<StanceSummaryRow> {
    let by_id: BTreeMap<&str, StanceLabel> = results.iter().map(|r| (r.comment_id.as_str(), r.label)).collect();
    corpus
        .categories()
        .into_iter()
        .map(|cat| {
            let mut counts: BTreeMap<StanceLabel, usize> = StanceLabel::ALL.iter().map(|l| (*l, 0)).collect();
            for c in corpus.comments().iter().filter(|c| corpus.category_of(c) == Some(cat)) {
                if let Some(l) = by_id.get(c.comment_id.as_str()) {
                    *counts.get_mut(l).unwrap() += 1;
                }
            }
            let total: usize = counts.values().sum();
            let proportions = counts.iter().map(|(l, &n)| (*l, ratio(n, total))).collect();
            StanceSummaryRow { dataset: cat, total, proportions, counts, empty: total == 0 }
        })
        .collect()
}
