#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use tutor_core::clock::ManualClock;
use tutor_core::context::{load_corpus, HashingEmbedder, SharedIndex, VectorIndex};
use tutor_core::llm::{Gateway, ScriptedProvider};
use tutor_core::log::EventStore;
use tutor_core::Tutor;
use tutor_service::registry::Registry;
use tutor_service::{router, App, AppOptions};

pub const INSTRUCTOR: &str = "instructor-token-for-tests";

pub fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/hw1.corpus")
}

pub struct Harness {
    pub app: Arc<App>,
    pub router: Router,
    pub provider: Arc<ScriptedProvider>,
    pub clock: Arc<ManualClock>,
}

pub fn harness_with(options: AppOptions, log: EventStore) -> Harness {
    let corpus = load_corpus(corpus_path()).expect("fixture corpus loads");
    let embedder = Arc::new(HashingEmbedder::default());
    let index = VectorIndex::build(corpus.documents(), embedder.as_ref()).unwrap();
    let provider = Arc::new(ScriptedProvider::new());
    let gateway = Arc::new(Gateway::new(provider.clone()).with_sleeper(|_| {}));
    let clock = Arc::new(ManualClock::at_millis(1_738_000_000_000));
    let tutor = Tutor::new(
        Arc::new(corpus),
        SharedIndex::new(index),
        embedder,
        gateway,
        Arc::new(log),
        clock.clone(),
    );
    let app = Arc::new(App::new(tutor, Registry::in_memory([INSTRUCTOR.to_string()]), options));
    Harness {
        router: router(Arc::clone(&app)),
        app,
        provider,
        clock,
    }
}

pub fn harness() -> Harness {
    harness_with(AppOptions::default(), EventStore::in_memory())
}

pub struct Reply {
    pub status: StatusCode,
    pub json: Value,
    pub text: String,
}

impl Harness {
    pub async fn call(&self, method: Method, uri: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let json = serde_json::from_str(&text).unwrap_or(Value::Null);
        Reply { status, json, text }
    }

    pub async fn post(&self, uri: &str, token: Option<&str>, body: Value) -> Reply {
        self.call(Method::POST, uri, token, Some(body)).await
    }

    pub async fn get(&self, uri: &str, token: Option<&str>) -> Reply {
        self.call(Method::GET, uri, token, None).await
    }

    /// Registers a student and returns `(student_id, token)`.
    pub async fn register(&self, alias: &str) -> (String, String) {
        let r = self.post("/register", None, serde_json::json!({ "alias": alias })).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
        (
            r.json["student_id"].as_str().unwrap().to_string(),
            r.json["token"].as_str().unwrap().to_string(),
        )
    }

    pub async fn start(&self, token: &str, problem: &str) -> String {
        let r = self
            .post("/sessions", Some(token), serde_json::json!({ "problem_index": problem }))
            .await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.text);
        r.json["session_id"].as_str().unwrap().to_string()
    }
}

/// Five scripted replies for one evaluation.
pub fn feedback_script() -> Vec<&'static str> {
    vec![
        "VERDICT: PASS\nFinal answers i = 1 A and p = 6 W are correct.",
        "VERDICT: PASS\nBoth requested quantities are answered.",
        "VERDICT: PASS\nCurrent division is applied correctly.",
        "VERDICT: ISSUE\nThe power is reported without its unit in one line.",
        "Your method and answers are correct. Add the unit W wherever you report power.",
    ]
}
