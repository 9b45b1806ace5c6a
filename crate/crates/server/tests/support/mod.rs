#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use ivisflow::model::TaskDefinition;
use ivisflow::synth::{generate_corpus, GeneratorConfig, PlantedFlow};
use ivisflow_server::{router, AppState, ServiceConfig};

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.bytes))
        })
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, "GET", uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, "POST", uri, Some(body)).await
}

pub fn planted(path: &[&str], count: usize) -> PlantedFlow {
    PlantedFlow {
        path: path.iter().map(|s| s.to_string()).collect(),
        count,
    }
}

pub fn config(seed: u64, task: (&str, &str), flows: Vec<PlantedFlow>, noise: usize) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        task: TaskDefinition::new(task.0, task.1).unwrap(),
        planted_flows: flows,
        noise_trips: noise,
        ..Default::default()
    }
}

/// Generates `cfg` into `dir` and returns a loaded service over it.
pub async fn service(cfg: &GeneratorConfig, dir: &Path) -> (Arc<AppState>, Router) {
    let gen = generate_corpus(cfg, dir).unwrap();
    service_over(dir.to_path_buf(), Some(gen.concept_path)).await
}

pub async fn service_over(data_dir: PathBuf, concept_db: Option<PathBuf>) -> (Arc<AppState>, Router) {
    let state = AppState::new(ServiceConfig { data_dir, concept_db });
    state.reload().await.unwrap();
    let app = router(state.clone());
    (state, app)
}

pub fn task_json(start: &str, end: &str) -> Value {
    serde_json::json!({"start_element": start, "end_element": end})
}

pub fn shares(resp: &Value) -> Vec<f64> {
    resp["flow_table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["share"].as_f64().unwrap())
        .collect()
}

pub fn paths(resp: &Value) -> Vec<Vec<String>> {
    resp["flow_table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| serde_json::from_value(f["path"].clone()).unwrap())
        .collect()
}
