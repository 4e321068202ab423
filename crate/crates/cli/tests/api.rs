use axum::body::Body;
use axum::http::{Request, StatusCode};
use ccrs_cli::api::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const AND: &str = "module g(input a, input b, output y); assign y = a & b; endmodule";

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn post(uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = call("POST", uri, Some(body)).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn converted(src: &str) -> Value {
    let (status, doc) = post("/api/v1/convert", json!({ "source": src })).await;
    assert_eq!(status, StatusCode::OK, "{doc}");
    doc
}

#[tokio::test]
async fn convert_returns_a_laid_out_document() {
    let doc = converted(AND).await;
    assert_eq!(doc["module"], "g");
    assert!(doc["geometry"]["boxes"].as_object().is_some_and(|b| !b.is_empty()));
}

#[tokio::test]
async fn bad_source_is_unprocessable_with_diagnostics() {
    let (status, body) = post("/api/v1/convert", json!({ "source": "module m(" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!body["diagnostics"].as_array().unwrap().is_empty());
    let (status, _) = post("/api/v1/convert", json!({ "text": AND })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_route_is_not_found() {
    assert_eq!(call("GET", "/api/v1/nothing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call("GET", "/", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn emit_validate_and_render() {
    let doc = converted(AND).await;
    let (status, body) = post("/api/v1/emit", doc.clone()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["hdl"].as_str().unwrap().contains("assign y = a & b;"));

    let (status, body) = post("/api/v1/validate", doc.clone()).await;
    assert_eq!((status, body["valid"].clone()), (StatusCode::OK, json!(true)));

    let (status, svg) = call("POST", "/api/v1/render?netNames=true&scale=2", Some(doc.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(svg).unwrap().contains("id=\"lwc-"));
    assert_eq!(call("POST", "/api/v1/render?scale=0", Some(doc.clone())).await.0, StatusCode::UNPROCESSABLE_ENTITY);

    let mut broken = doc;
    broken["lwcs"].as_array_mut().unwrap().pop();
    for route in ["/api/v1/emit", "/api/v1/validate", "/api/v1/render"] {
        let (status, body) = post(route, broken.clone()).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{route}");
        assert!(body["diagnostics"].as_array().is_some_and(|d| !d.is_empty()), "{route}");
    }
}

#[tokio::test]
async fn simulate_returns_a_trace() {
    let doc = converted(AND).await;
    let stimulus = json!({ "cycles": [{ "a": 1, "b": 1 }, { "a": 1, "b": 0 }] });
    let (status, body) = post("/api/v1/simulate", json!({ "document": doc, "stimulus": stimulus })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["trace"], json!([{ "y": 1 }, { "y": 0 }]));
    let (status, _) = post("/api/v1/simulate", json!({ "document": doc, "stimulus": { "cycles": [{ "a": 1 }] } })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn check_compares_sources_and_documents() {
    let doc = converted(AND).await;
    let (status, v) = post("/api/v1/check", json!({ "a": { "source": AND }, "b": { "document": doc } })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["verdict"], "equivalent");

    let or = AND.replace('&', "|");
    let (_, v) = post("/api/v1/check", json!({ "a": { "source": AND }, "b": { "source": or }, "options": { "seed": 7 } })).await;
    assert_eq!(v["verdict"], "counterexample");
    assert_eq!(v["port"], "y");
}

#[tokio::test]
async fn symbols_lists_the_glyph_table() {
    let (status, body) = call("GET", "/api/v1/symbols", None).await;
    assert_eq!(status, StatusCode::OK);
    let table: Value = serde_json::from_slice(&body).unwrap();
    assert!(table["operators"].as_array().unwrap().iter().any(|e| e["glyph"] == "位或"));
}

#[tokio::test]
async fn static_files_are_served_when_configured() {
    let dir = tempfile::TempDir::new().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>studio</p>").unwrap();
    let req = Request::builder().uri("/index.html").body(Body::empty()).unwrap();
    let resp = router(Some(dir.path().to_path_buf())).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}
