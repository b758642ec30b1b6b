//! HTTP front end for the forecast service.
//!
//! The registry is loaded before the listener binds and is shared read-only
//! by every request. Request bodies are parsed by hand so a malformed body
//! gets the same 400 error shape as an out-of-range field.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use driftcast::serve::{handle_predict, ModelRegistry, PredictionRequest, ServeError};
use serde_json::json;

pub fn app(registry: Arc<ModelRegistry>) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/models", get(models))
        .route("/healthz", get(healthz))
        .with_state(registry)
}

fn error_response(err: ServeError) -> Response {
    let status = StatusCode::from_u16(err.status_code()).unwrap_or(StatusCode::BAD_REQUEST);
    let mut body = serde_json::to_value(&err).expect("serve errors serialize");
    body["message"] = json!(err.to_string());
    (status, Json(body)).into_response()
}

async fn predict(State(registry): State<Arc<ModelRegistry>>, body: Bytes) -> Response {
    let req: PredictionRequest = match serde_json::from_slice(&body) {
        Ok(req) => req,
        Err(e) => return error_response(ServeError::Validation { reason: format!("malformed request body: {e}") }),
    };
    match handle_predict(&req, &registry) {
        Ok(resp) => Json(resp).into_response(),
        Err(e) => error_response(e),
    }
}

async fn models(State(registry): State<Arc<ModelRegistry>>) -> Json<serde_json::Value> {
    let models: Vec<_> = registry
        .entries()
        .map(|e| {
            json!({
                "interval_min": e.interval_min,
                "predictor": e.predictor,
                "kind": e.kind,
                "model_version": e.digest,
            })
        })
        .collect();
    Json(json!({ "intervals": registry.intervals(), "models": models }))
}

async fn healthz(State(registry): State<Arc<ModelRegistry>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "models": registry.len() }))
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(registry: ModelRegistry, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "serving {} model(s) for intervals {:?} on http://{}",
        registry.len(),
        registry.intervals(),
        listener.local_addr()?
    );
    axum::serve(listener, app(Arc::new(registry)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
