//! Read-only query endpoints over the run store.

use crate::store::{RunManifest, RunStore, StoreError};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::net::SocketAddr;
use std::sync::Arc;
use threadscope::analytics::{AnalyticsReport, Bucket, DatasetAnalytics, COMMENTS_PER_VIDEO};
use threadscope::corpus::Category;
use threadscope::stance::StanceSummaryRow;
use threadscope::topics::{filter_coherent, TopicModelReport};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::UnknownRun(_) | StoreError::InvalidId(_) => StatusCode::NOT_FOUND,
            StoreError::Unsealed { .. } | StoreError::UnknownStage { .. } => StatusCode::CONFLICT,
            StoreError::Locked(_) | StoreError::Io { .. } | StoreError::Json { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "status": self.status.as_u16(), "message": self.message } });
        (self.status, [(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok_json<T: Serialize>(value: &T) -> ApiResult {
    let body = serde_json::to_vec(value).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, "application/json")], body).into_response())
}

/// Runs blocking file reads off the async executor.
async fn blocking<F>(f: F) -> ApiResult
where
    F: FnOnce() -> ApiResult + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())))
}

type Shared = Arc<RunStore>;

pub fn router(store: Arc<RunStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/runs", get(runs))
        .route("/runs/{id}/summary", get(summary))
        .route("/runs/{id}/videos/{vid}/engagement", get(engagement))
        .route("/runs/{id}/topics", get(topics))
        .route("/runs/{id}/stance/summary", get(stance_summary))
        .route("/runs/{id}/analytics/{kind}", get(analytics))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(store)
}

pub async fn serve(store: RunStore, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store))).await
}

async fn healthz() -> ApiResult {
    ok_json(&json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct RunEntry<'a> {
    run_id: &'a str,
    status: crate::store::RunStatus,
    created_at: u64,
    stages: Vec<Value>,
}

fn stage_list(m: &RunManifest) -> Vec<Value> {
    m.stages.iter().map(|s| json!({ "name": s.name, "status": s.status })).collect()
}

async fn runs(State(store): State<Shared>) -> ApiResult {
    blocking(move || {
        let all = store.list()?;
        let latest = store.resolve("latest").ok();
        let entries: Vec<RunEntry<'_>> = all
            .iter()
            .map(|m| RunEntry { run_id: &m.run_id, status: m.status, created_at: m.created_at, stages: stage_list(m) })
            .collect();
        ok_json(&json!({ "latest": latest, "runs": entries }))
    })
    .await
}

async fn summary(State(store): State<Shared>, Path(id): Path<String>) -> ApiResult {
    blocking(move || {
        let m = store.manifest(&id)?;
        // only sealed stages contribute their outputs
        let ingest: Option<Value> = store.read_stage_json(&m.run_id, "ingest", "ingest.json").ok().map(|(_, v)| v);
        let filter: Option<Value> = store.read_stage_json(&m.run_id, "filter", "summary.json").ok().map(|(_, v)| v);
        ok_json(&json!({
            "run_id": m.run_id,
            "status": m.status,
            "config_fingerprint": m.config_fingerprint,
            "corpus_fingerprint": m.corpus_fingerprint,
            "created_at": m.created_at,
            "stages": m.stages,
            "failure": m.failure(),
            "ingest": ingest,
            "filter": filter,
        }))
    })
    .await
}

fn analytics_report(store: &RunStore, id: &str) -> Result<(String, AnalyticsReport), ApiError> {
    Ok(store.read_stage_json(id, "analytics", "report.json")?)
}

fn parse_dataset(raw: Option<&str>) -> Result<Option<Category>, ApiError> {
    raw.map(|s| s.parse::<Category>().map_err(|e| ApiError::bad_request(e.to_string()))).transpose()
}

/// Datasets matching the optional filter; a named dataset absent from the run is a 404.
fn select<'a>(report: &'a AnalyticsReport, dataset: Option<Category>) -> Result<Vec<&'a DatasetAnalytics>, ApiError> {
    match dataset {
        None => Ok(report.datasets.iter().collect()),
        Some(c) => report
            .dataset(c)
            .map(|d| vec![d])
            .ok_or_else(|| ApiError::not_found(format!("dataset `{c}` not in this run"))),
    }
}

async fn engagement(State(store): State<Shared>, Path((id, vid)): Path<(String, String)>) -> ApiResult {
    blocking(move || {
        let (run_id, report) = analytics_report(&store, &id)?;
        for d in &report.datasets {
            if let Some(e) = d.engagement.iter().find(|e| e.video_id == vid) {
                let q = d.quartiles_for(COMMENTS_PER_VIDEO);
                let position = q.map(|q| {
                    let c = e.comments as f64;
                    if c < q.q1 {
                        "below_q1"
                    } else if c < q.q2 {
                        "q1_to_median"
                    } else if c < q.q3 {
                        "median_to_q3"
                    } else {
                        "at_or_above_q3"
                    }
                });
                return ok_json(&json!({
                    "run_id": run_id,
                    "dataset": d.dataset,
                    "engagement": e,
                    "quartile_context": {
                        "metric": COMMENTS_PER_VIDEO,
                        "summary": q,
                        "position": position,
                    },
                }));
            }
        }
        Err(ApiError::not_found(format!("video `{vid}` not in run `{run_id}`")))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct TopicsQuery {
    min_coherence: Option<String>,
}

async fn topics(State(store): State<Shared>, Path(id): Path<String>, Query(q): Query<TopicsQuery>) -> ApiResult {
    blocking(move || {
        let threshold = match q.min_coherence.as_deref() {
            None => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ApiError::bad_request(format!("min_coherence `{s}` is not a number")))?,
            ),
        };
        let (run_id, report): (String, TopicModelReport) = store.read_stage_json(&id, "topics", "report.json")?;
        let topics = match threshold {
            Some(t) => filter_coherent(&report, t),
            None => report.clusters.clone(),
        };
        ok_json(&json!({
            "run_id": run_id,
            "min_coherence": threshold,
            "silhouette": report.silhouette,
            "davies_bouldin": report.davies_bouldin,
            "noise_fraction": report.noise_fraction,
            "topics": topics,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct DatasetQuery {
    dataset: Option<String>,
    bucket: Option<String>,
}

async fn stance_summary(State(store): State<Shared>, Path(id): Path<String>, Query(q): Query<DatasetQuery>) -> ApiResult {
    blocking(move || {
        let dataset = parse_dataset(q.dataset.as_deref())?;
        let (run_id, rows): (String, Vec<StanceSummaryRow>) = store.read_stage_json(&id, "stance", "summary.json")?;
        let rows: Vec<&StanceSummaryRow> = rows.iter().filter(|r| dataset.is_none_or(|c| r.dataset == c)).collect();
        if let (Some(c), true) = (dataset, rows.is_empty()) {
            return Err(ApiError::not_found(format!("dataset `{c}` not in this run")));
        }
        ok_json(&json!({ "run_id": run_id, "datasets": rows }))
    })
    .await
}

async fn analytics(
    State(store): State<Shared>,
    Path((id, kind)): Path<(String, String)>,
    Query(q): Query<DatasetQuery>,
) -> ApiResult {
    blocking(move || {
        let dataset = parse_dataset(q.dataset.as_deref())?;
        let bucket = q.bucket.as_deref().map(|b| b.parse::<Bucket>().map_err(ApiError::bad_request)).transpose()?;
        if !matches!(kind.as_str(), "ecdf" | "correlation" | "timeseries") {
            return Err(ApiError::not_found(format!("unknown analytics view `{kind}`")));
        }
        let (run_id, report) = analytics_report(&store, &id)?;
        let sel = select(&report, dataset)?;
        let datasets: Vec<Value> = match kind.as_str() {
            "ecdf" => sel
                .iter()
                .map(|d| {
                    json!({
                        "dataset": d.dataset,
                        "points": d.ecdf.ecdf.points(),
                        "negative_deltas": d.ecdf.negative_deltas,
                        "share_within_days": report.config.share_within_days,
                        "share_within": d.share_within,
                    })
                })
                .collect(),
            "correlation" => sel
                .iter()
                .map(|d| {
                    json!({
                        "dataset": d.dataset,
                        "variables": d.correlation.variables,
                        "cells": d.correlation.cells,
                        "n": d.correlation.n,
                    })
                })
                .collect(),
            _ => {
                let b = bucket.unwrap_or(report.config.bucket);
                sel.iter()
                    .map(|d| {
                        let s = d.series(b);
                        json!({
                            "dataset": d.dataset,
                            "bucket": b,
                            "videos": s.map(|s| s.videos),
                            "points": s.map(|s| &s.points),
                            "spikes": s.map(|s| &s.spikes),
                        })
                    })
                    .collect()
            }
        };
        ok_json(&json!({ "run_id": run_id, "datasets": datasets }))
    })
    .await
}
