//! Cleans and segments the sample Gutenberg tales into training samples and
//! prints corpus statistics.
//!
//!     cargo run -p taletailor --example ingest_corpus

use std::path::PathBuf;

use taletailor::corpus::{
    build_frequent_words, corpus_stats, ingest, load_stories, IngestConfig, OffensiveWords, Source,
};
use taletailor::text::StopWords;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let stories = load_stories(data.join("gutenberg"), Source::Gutenberg)?;
    let config = IngestConfig {
        extract_tokens: 40,
        offensive: OffensiveWords::load(data.join("offensive.txt"))?,
        ..IngestConfig::default()
    };
    let (extracts, report) = ingest(&stories, &config);
    println!("{report:?}\n");
    for e in extracts.iter().take(3) {
        println!(
            "[{} #{}] {} tokens\n  prompt: {}\n  sample: {}\n",
            e.story, e.index, e.token_count, e.prompt, e.sample
        );
    }

    let bodies: Vec<&str> = extracts.iter().map(|e| e.body.as_str()).collect();
    let frequent = build_frequent_words(&bodies, 0.07, &StopWords::builtin())?;
    println!("frequent words: {}", frequent.sorted().join(" "));
    let stats = corpus_stats(&bodies)?;
    println!(
        "{} extracts, {} tokens, vocabulary {}, hapax fraction {:.3}, mean sentences {:.2}",
        stats.documents(),
        stats.total_tokens,
        stats.vocabulary(),
        stats.hapax_fraction,
        stats.mean_sentences()
    );
    Ok(())
}
