#![allow(dead_code)]

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Arc;

use serde_json::Value;
use taletailor_service::commands::build_index;
use taletailor_service::engine::{Engine, EngineConfig};
use taletailor_service::{AppState, Store};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data")).join(rel)
}

/// A server on an ephemeral localhost port, stopped when dropped.
pub struct Server {
    pub url: String,
    _rt: tokio::runtime::Runtime,
}

pub fn spawn(router: axum::Router) -> Server {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    rt.spawn(async move { axum::serve(listener, router).await.unwrap() });
    Server { url, _rt: rt }
}

/// Built-in provider over the sample tales, sample scoring context and the
/// 100-image caption index.
pub fn sample_engine(seed: u64) -> Engine {
    let engine = Engine::from_config(&EngineConfig {
        corpus: Some(data("tales.txt")),
        ctx_dir: Some(data("ctx")),
        seed,
        ..Default::default()
    })
    .unwrap();
    let mut index = build_index(&data("images/captions.tsv"), 256, None).unwrap();
    let f = fs::File::open(data("images/attribution.tsv")).unwrap();
    index.read_attribution(BufReader::new(f)).unwrap();
    engine.swap_index(index);
    engine
}

pub fn story_server(engine: Engine, store: Store) -> Server {
    let mut state = AppState::new(Arc::new(engine), Arc::new(store));
    state.public_url = "http://stories.test".into();
    spawn(taletailor_service::router(Arc::new(state)))
}

pub struct Client {
    agent: ureq::Agent,
    base: String,
}

pub struct Reply {
    pub status: u16,
    pub headers: ureq::http::HeaderMap,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

impl Client {
    pub fn new(base: &str) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self {
            agent,
            base: base.to_owned(),
        }
    }

    fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
        let mut resp = resp.unwrap();
        Reply {
            status: resp.status().as_u16(),
            headers: resp.headers().clone(),
            body: resp.body_mut().read_to_string().unwrap(),
        }
    }

    pub fn get(&self, path: &str) -> Reply {
        Self::finish(self.agent.get(format!("{}{path}", self.base)).call())
    }

    pub fn post(&self, path: &str, body: Value) -> Reply {
        Self::finish(self.agent.post(format!("{}{path}", self.base)).send_json(body))
    }

    pub fn patch(&self, path: &str, body: Value) -> Reply {
        Self::finish(self.agent.patch(format!("{}{path}", self.base)).send_json(body))
    }

    pub fn post_raw(&self, path: &str, body: &str) -> Reply {
        Self::finish(
            self.agent
                .post(format!("{}{path}", self.base))
                .header("content-type", "application/json")
                .send(body),
        )
    }
}

pub fn complete_feedback() -> Value {
    serde_json::json!({
        "ratings": {
            "correct_grammar": 4, "plausible_order": 4, "makes_sense": 3, "avoids_repetition": 5,
            "interesting_language": 4, "high_quality": 3, "enjoyable": 5, "one_theme": 4
        },
        "decline_rate": "25_percent",
        "mode_usage": "both",
        "writing_experience": "some",
        "mode_explanation": "fast for drafts",
        "image_usage": "one per scene",
        "liked": "the pictures",
        "disliked": "repetition"
    })
}
