//! A full co-writing session against an in-process story service: write,
//! ask for suggestions, accept one, add a picture, publish.
//!
//!     cargo run -p taletailor-service --example story_session

use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};
use taletailor_service::commands::build_index;
use taletailor_service::engine::{Engine, EngineConfig};
use taletailor_service::{router, AppState, Store};

fn call(
    agent: &ureq::Agent,
    method: &str,
    url: &str,
    body: Option<Value>,
) -> Result<Value, Box<dyn std::error::Error>> {
    let mut resp = match (method, body) {
        ("GET", _) => agent.get(url).call()?,
        (_, Some(b)) => agent.post(url).send_json(b)?,
        _ => agent.post(url).send_empty()?,
    };
    Ok(resp.body_mut().read_json()?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let engine = Engine::from_config(&EngineConfig {
        corpus: Some(data.join("tales.txt")),
        ctx_dir: Some(data.join("ctx")),
        ..Default::default()
    })?;
    engine.swap_index(build_index(&data.join("images/captions.tsv"), 256, None)?);
    let mut state = AppState::new(Arc::new(engine), Arc::new(Store::in_memory()));
    state.public_url = "http://localhost".into();

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    rt.spawn(async move { axum::serve(listener, router(Arc::new(state))).await });

    let agent = ureq::Agent::new_with_defaults();
    let story = call(
        &agent,
        "POST",
        &format!("{base}/stories"),
        Some(
            json!({"title": "The Lantern Fox", "blocks": [{"text": "Once upon a time a little fox carried a lantern into the dark forest."}]}),
        ),
    )?;
    let id = story["id"].as_str().unwrap_or_default().to_owned();
    let stories = format!("{base}/stories/{id}");

    let hq = call(
        &agent,
        "POST",
        &format!("{stories}/autocomplete"),
        Some(json!({"mode": "hq", "seed": 5})),
    )?;
    println!("suggestions:");
    for s in hq["suggestions"].as_array().into_iter().flatten() {
        println!(
            "  {:.3}  {}",
            s["score"]["normalized_score"].as_f64().unwrap_or(0.0),
            s["text"].as_str().unwrap_or("")
        );
    }
    call(
        &agent,
        "POST",
        &format!("{stories}/accept"),
        Some(json!({"ref": hq["suggestions"][0]["ref"]})),
    )?;

    let images = call(
        &agent,
        "POST",
        &format!("{stories}/images/suggest"),
        Some(json!({"query": "a red fox in a dark forest", "k": 3})),
    )?;
    println!("\nimages:");
    for s in images["suggestions"].as_array().into_iter().flatten() {
        println!(
            "  {}  {:.3}",
            s["image_id"].as_str().unwrap_or(""),
            s["score"].as_f64().unwrap_or(0.0)
        );
    }
    call(
        &agent,
        "POST",
        &format!("{stories}/accept"),
        Some(json!({"ref": images["suggestions"][0]["ref"]})),
    )?;

    let feedback = json!({
        "ratings": {
            "correct_grammar": 4, "plausible_order": 4, "makes_sense": 4, "avoids_repetition": 3,
            "interesting_language": 4, "high_quality": 3, "enjoyable": 5, "one_theme": 5
        },
        "decline_rate": "25_percent",
        "mode_usage": "both",
        "writing_experience": "none",
        "mode_explanation": "quality mode for the important parts",
        "image_usage": "one picture per scene",
        "liked": "the pictures",
        "disliked": "odd word order"
    });
    let published = call(
        &agent,
        "POST",
        &format!("{stories}/publish"),
        Some(json!({"feedback": feedback})),
    )?;
    println!("\nshared at {}", published["share_url"].as_str().unwrap_or(""));

    let analytics = call(&agent, "GET", &format!("{stories}/analytics"), None)?;
    println!("{}", serde_json::to_string_pretty(&analytics)?);
    Ok(())
}
