//! High-quality autocomplete and iterative re-ranking with the built-in
//! n-gram models.
//!
//!     cargo run -p taletailor --example rerank

use std::path::PathBuf;
use std::sync::Arc;

use taletailor::generation::{GeneratorConfig, NGramModel};
use taletailor::metrics::{LogitPair, ScoringContext};
use taletailor::rerank::{RerankConfig, Reranker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let corpus = std::fs::read_to_string(data.join("tales.txt"))?;
    let lines: Vec<&str> = corpus.lines().filter(|l| !l.trim().is_empty()).collect();
    let finetuned = Arc::new(NGramModel::train_texts(&lines, 3)?);
    // A unigram model stands in for the general-purpose reference model.
    let preset = Arc::new(NGramModel::train_texts(&lines, 1)?);
    let ctx = ScoringContext::load_dir(data.join("ctx"))?.with_logits(LogitPair::new(preset, finetuned.clone()));

    let context = "Once upon a time a little fox lived near the dark forest.";
    let config = RerankConfig {
        population: 8,
        rounds: 3,
        generator: GeneratorConfig::default().with_seed(2024),
        ..RerankConfig::default()
    };
    let reranker = Reranker::new(finetuned.as_ref(), &ctx, config)?;

    println!("{context}\n\nbest of ten:");
    for c in reranker.autocomplete_hq(context)? {
        println!("  {:.3}  {}", c.normalized_score, c.text);
    }

    println!("\nre-ranked growth:");
    let run = reranker.run(context);
    for (round, step) in run.steps.iter().enumerate() {
        let best = &step.ranked[0];
        println!("  round {round}: {:.3}  {}", best.normalized_score, best.text);
    }
    Ok(())
}
