//! Stateless JSON API under `/api/v1`. Every request stands alone; failures
//! answer 422 with `{"diagnostics": [...]}`.

// Handlers short-circuit with the finished error response.
#![allow(clippy::result_large_err)]

use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::Query;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ccrs_core::diag::{Code, Diagnostic};
use ccrs_core::ir::{deserialize, CcrsDocument};
use ccrs_core::layout::layout;
use ccrs_core::sim::{check_equivalence, DocModel, EquivOptions, Model, Stimulus};
use ccrs_core::svg::{render, RenderOptions, Theme};
use ccrs_core::templater::SymbolTable;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::pipeline::{self, exit, Failure};

fn unprocessable(diags: Vec<Diagnostic>) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "diagnostics": diags }))).into_response()
}

fn failed(f: Failure) -> Response {
    unprocessable(f.diagnostics())
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(bytes).map_err(|e| unprocessable(vec![Diagnostic::error(Code::Schema, e.to_string())]))
}

/// A document as request JSON, checked the same way as a document file.
fn document(value: Value) -> Result<CcrsDocument, Response> {
    let doc = deserialize(&value.to_string()).map_err(unprocessable)?;
    pipeline::check_document(&doc).map_err(failed)?;
    Ok(doc)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvertRequest {
    source: String,
    #[serde(default)]
    top: Option<String>,
}

/// Lowered document, laid out.
async fn convert(bytes: Bytes) -> Response {
    let req: ConvertRequest = match body(&bytes) {
        Ok(r) => r,
        Err(r) => return r,
    };
    match pipeline::convert_source(&req.source, req.top.as_deref()) {
        Ok(mut doc) => {
            doc.geometry = Some(layout(&doc));
            Json(doc).into_response()
        }
        Err(f) => failed(f),
    }
}

async fn emit(bytes: Bytes) -> Response {
    let result = body(&bytes).and_then(document).and_then(|d| pipeline::emit_document(&d, false).map_err(failed));
    match result {
        Ok(text) => Json(json!({ "hdl": text })).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", default)]
struct RenderQuery {
    clock_regions: bool,
    net_names: bool,
    scale: f64,
}

impl Default for RenderQuery {
    fn default() -> Self {
        Self { clock_regions: false, net_names: false, scale: 1.0 }
    }
}

/// SVG for the document, laid out when it carries no geometry.
async fn render_svg(Query(q): Query<RenderQuery>, bytes: Bytes) -> Response {
    if !(q.scale.is_finite() && q.scale > 0.0) {
        return unprocessable(vec![Diagnostic::error(Code::Schema, "scale must be a positive number")]);
    }
    let doc = match body(&bytes).and_then(document) {
        Ok(d) => d,
        Err(r) => return r,
    };
    let geo = doc.geometry.clone().unwrap_or_else(|| layout(&doc));
    let opts = RenderOptions { show_clock_regions: q.clock_regions, show_net_names: q.net_names, scale: q.scale, theme: Theme::Default };
    match render(&doc, &geo, &SymbolTable::default(), &opts) {
        Ok(svg) => ([(header::CONTENT_TYPE, "image/svg+xml; charset=utf-8")], svg).into_response(),
        Err(d) => unprocessable(vec![d]),
    }
}

async fn validate(bytes: Bytes) -> Response {
    let value: Value = match body(&bytes) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let doc = match deserialize(&value.to_string()) {
        Ok(d) => d,
        Err(d) => return unprocessable(d),
    };
    match pipeline::check_document(&doc) {
        Ok(warnings) => Json(json!({ "valid": true, "diagnostics": warnings })).into_response(),
        Err(f) => failed(f),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    document: Value,
    stimulus: Stimulus,
}

async fn simulate(bytes: Bytes) -> Response {
    let req: SimulateRequest = match body(&bytes) {
        Ok(r) => r,
        Err(r) => return r,
    };
    let doc = match document(req.document) {
        Ok(d) => d,
        Err(r) => return r,
    };
    match DocModel::new(&doc).and_then(|m| m.simulate(&req.stimulus)) {
        Ok(trace) => Json(json!({ "trace": trace })).into_response(),
        Err(d) => unprocessable(vec![d]),
    }
}

/// One side of a comparison: a document, or HDL source with an optional top module.
#[derive(Deserialize)]
#[serde(untagged)]
enum Design {
    Document { document: Value },
    Source { source: String, top: Option<String> },
}

impl Design {
    fn model(self) -> Result<Box<dyn Model + Send>, Response> {
        match self {
            Design::Document { document: d } => {
                let doc = document(d)?;
                Ok(Box::new(DocModel::new(&doc).map_err(|d| unprocessable(vec![d]))?))
            }
            Design::Source { source, top } => pipeline::model_for(&source, top.as_deref()).map_err(failed),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckRequest {
    a: Design,
    b: Design,
    #[serde(default)]
    options: EquivOptions,
}

async fn check(bytes: Bytes) -> Response {
    let req: CheckRequest = match body(&bytes) {
        Ok(r) => r,
        Err(r) => return r,
    };
    let models = req.a.model().and_then(|a| Ok((a, req.b.model()?)));
    let (a, b) = match models {
        Ok(m) => m,
        Err(r) => return r,
    };
    // Exhaustive checks can take a while; keep them off the async workers.
    let verdict = tokio::task::spawn_blocking(move || check_equivalence(a.as_ref(), b.as_ref(), &req.options)).await;
    match verdict {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(d)) => unprocessable(vec![d]),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn symbols() -> Json<SymbolTable> {
    Json(SymbolTable::default())
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(json!({ "error": "not found" }))).into_response()
}

/// Routes of the service. Paths outside the API come from `static_dir`
/// when given, else answer 404.
pub fn router(static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/v1/convert", post(convert))
        .route("/api/v1/emit", post(emit))
        .route("/api/v1/render", post(render_svg))
        .route("/api/v1/validate", post(validate))
        .route("/api/v1/simulate", post(simulate))
        .route("/api/v1/check", post(check))
        .route("/api/v1/symbols", get(symbols));
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

/// Serve until the process is stopped. Returns the exit code.
pub fn serve(host: &str, port: u16, static_dir: Option<PathBuf>) -> i32 {
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error[E-IO]: cannot start runtime: {e}");
            return exit::IO;
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {host}:{port}: {e}");
                return exit::BIND;
            }
        };
        log::info!("listening on {host}:{port}");
        match axum::serve(listener, router(static_dir)).await {
            Ok(()) => exit::OK,
            Err(e) => {
                eprintln!("error[E-IO]: {e}");
                exit::IO
            }
        }
    })
}
