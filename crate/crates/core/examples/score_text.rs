//! Scores a few texts on the six features and ranks them.
//!
//!     cargo run -p taletailor --example score_text

use std::path::PathBuf;

use taletailor::metrics::{ScoringContext, FEATURE_NAMES};
use taletailor::rerank::rank;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ctx");
    let ctx = ScoringContext::load_dir(&ctx_dir)?;

    let texts = [
        "The little fox was happy. The fox sang a sweet song in the warm light.",
        "Dark dark dark. The wicked night was lost.",
        "Once upon a time a kind old king lived in a castle by the forest.",
    ];
    for text in &texts {
        let m = ctx.score(text)?;
        println!("{text}");
        for (name, v) in FEATURE_NAMES.iter().zip(m.values()) {
            println!("  {name:<12} {v:>8.4}");
        }
    }

    // No logit pair configured, so tale_like is constant and adds 0.5 to
    // every total.
    println!("\nranked:");
    for c in rank(&texts, &ctx)? {
        println!("  {:.3}  {}", c.normalized_score, c.text);
    }
    Ok(())
}
