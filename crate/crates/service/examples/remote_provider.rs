//! Serves the built-in models over the provider protocol and drives them
//! through the remote client, the way the story service talks to an external
//! model adapter.
//!
//!     cargo run -p taletailor-service --example remote_provider

use std::path::PathBuf;
use std::sync::Arc;

use taletailor::generation::{
    model_tokens, CompletionRequest, Embedder, Generator, GeneratorConfig, LogitSource, RemoteProvider,
};
use taletailor::metrics::tale_like;
use taletailor_service::engine::load_corpus_texts;
use taletailor_service::{provider_server, BuiltinProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts = load_corpus_texts(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/tales.txt"))?;
    let provider = BuiltinProvider::train(&texts, 3, 64)?;

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let url = format!("http://{}", listener.local_addr()?);
    rt.spawn(async move { axum::serve(listener, provider_server::router(Arc::new(provider))).await });

    let remote = RemoteProvider::new(url.clone());
    println!("provider at {url}\n");
    let req = CompletionRequest::new("The brave knight", GeneratorConfig::default().with_seed(1), 3);
    for c in remote.complete(&req)?.candidates {
        println!("  The brave knight {c}");
    }

    let text = "The little fox was happy, and the king followed.";
    let tokens = model_tokens(text);
    let finetuned = remote.logit_source("finetuned").logits(&tokens)?;
    let preset = remote.logit_source("preset").logits(&tokens)?;
    println!(
        "\n{} positions over {} tokens",
        finetuned.distributions.len(),
        finetuned.vocabulary.len()
    );
    println!(
        "tale-likeness of {text:?}: {:.4}",
        tale_like(&preset.distributions, &finetuned.distributions)?
    );

    let vectors = remote.embed(&["a wise owl".to_owned(), "an owl, wise and old".to_owned()])?;
    let cos: f32 = vectors[0].iter().zip(&vectors[1]).map(|(a, b)| a * b).sum();
    println!("embedding cosine: {cos:.4}");
    Ok(())
}
