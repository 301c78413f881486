//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust twin so the logic is testable off the browser.

use serde::Serialize;
use threadscope::analytics::Ecdf;
use threadscope::filter::{apply_label_functions, FilterLexicons, LabelModel, LabelVote, Vote};
use threadscope::signals::{EmotionResult, SentimentResult, SignalLexicons};
use threadscope::stance::{detect_explicit, MarkerLexicons};
use threadscope::topics::{cluster_density, HdbscanParams};
use wasm_bindgen::prelude::*;

/// Labels for `dim`-wide rows packed into `flat`; `-1` is noise.
pub fn cluster_flat(flat: &[f64], dim: usize, min_cluster_size: usize, min_samples: usize) -> Result<Vec<i32>, String> {
    if dim == 0 || flat.len() % dim != 0 {
        return Err(format!("{} values do not split into rows of {dim}", flat.len()));
    }
    let points: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
    cluster_density(&points, &HdbscanParams::new(min_cluster_size, min_samples)).map_err(|e| e.to_string())
}

/// ECDF steps flattened as `[x0, F(x0), x1, F(x1), ...]`.
pub fn ecdf_flat(values: &[f64]) -> Vec<f64> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    Ecdf::new(finite).points().into_iter().flat_map(|(x, f)| [x, f]).collect()
}

#[derive(Debug, Serialize)]
pub struct CommentAnalysis {
    pub votes: Vec<LabelVote>,
    /// Equal-accuracy label-model posterior of being irrelevant.
    pub p_irrelevant: f64,
    pub sentiment: SentimentResult,
    pub emotion: EmotionResult,
    pub explicit_marker: Option<(String, String)>,
}

pub fn analyze_text(text: &str) -> CommentAnalysis {
    let votes = apply_label_functions(text, &FilterLexicons::default());
    let ids = votes.iter().map(|v| v.function_id.clone()).collect();
    let row: Vec<Vote> = votes.iter().map(|v| v.vote).collect();
    let p_irrelevant = LabelModel::majority_vote(ids, 0.5).posterior(&row);
    let lex = SignalLexicons::default();
    CommentAnalysis {
        votes,
        p_irrelevant,
        sentiment: lex.sentiment(text),
        emotion: lex.emotion(text),
        explicit_marker: detect_explicit(text, &MarkerLexicons::default())
            .map(|(label, marker)| (label.as_str().to_string(), marker)),
    }
}

#[wasm_bindgen]
pub fn cluster_points(flat: &[f64], dim: usize, min_cluster_size: usize, min_samples: usize) -> Result<Vec<i32>, JsError> {
    cluster_flat(flat, dim, min_cluster_size, min_samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ecdf(values: &[f64]) -> Vec<f64> {
    ecdf_flat(values)
}

/// JSON-encoded [`CommentAnalysis`].
#[wasm_bindgen]
pub fn analyze_comment(text: &str) -> String {
    serde_json::to_string(&analyze_text(text)).expect("analysis serializes")
}
