//! Trains an n-gram model on the sample tales and samples continuations.
//!
//!     cargo run -p taletailor --example generate -- "The little fox"

use std::path::PathBuf;

use taletailor::generation::{model_tokens, CompletionRequest, Generator, GeneratorConfig, LogitSource, NGramModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let context = std::env::args().nth(1).unwrap_or_else(|| "Once upon a time".into());
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/tales.txt");
    let corpus = std::fs::read_to_string(path)?;
    let lines: Vec<&str> = corpus.lines().filter(|l| !l.trim().is_empty()).collect();
    let model = NGramModel::train_texts(&lines, 3)?;
    println!("vocabulary: {} tokens", model.vocabulary().len());

    for (label, config) in [
        ("nucleus p=0.9", GeneratorConfig::nucleus(0.9)),
        ("top-k k=5", GeneratorConfig::top_k(5)),
    ] {
        let req = CompletionRequest::new(context.as_str(), config.with_seed(7), 3);
        println!("\n{label}:");
        for c in model.complete(&req)?.candidates {
            println!("  {context} {c}");
        }
    }

    // Next-token distribution after the context.
    let logits = model.logits(&model_tokens(&context))?;
    let last = logits.distributions.last().expect("one distribution per token");
    let mut top: Vec<(&str, f64)> = logits
        .vocabulary
        .iter()
        .map(String::as_str)
        .zip(last.probs().iter().copied())
        .collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nmost likely next tokens:");
    for (tok, p) in top.into_iter().take(5) {
        println!("  {tok:<10} {p:.3}");
    }
    Ok(())
}
