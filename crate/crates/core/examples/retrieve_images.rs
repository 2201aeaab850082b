//! Builds an image index from captions, queries it, and scores the visual
//! consistency of a set of images.
//!
//!     cargo run -p taletailor --example retrieve_images -- "an owl under the moon"

use std::path::PathBuf;

use taletailor::generation::{Embedder, HashingEmbedder};
use taletailor::retrieval::{consistency, ClassDistribution, EmbeddingIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "a silver dragon over a stormy sea".into());
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/images");
    let captions = std::fs::read_to_string(data.join("captions.tsv"))?;
    let (ids, texts): (Vec<String>, Vec<String>) = captions
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(id, c)| (id.to_owned(), c.to_owned()))
        .unzip();

    let embedder = HashingEmbedder::new(256);
    let index = EmbeddingIndex::from_entries(256, ids.into_iter().zip(embedder.embed(&texts)?))?;

    // Round trip through the on-disk format.
    let mut bytes = Vec::new();
    index.write_to(&mut bytes)?;
    let index = EmbeddingIndex::read_from(&bytes[..])?;
    println!("{} images, {} bytes on disk", index.len(), bytes.len());

    println!("\n{query}:");
    for hit in index.retrieve_text(&query, &embedder, 5)?.hits {
        println!("  {}  {:.4}", hit.image_id, hit.score);
    }

    // Class distributions would come from an image classifier; these are
    // made up to show the scale of the score (lower is more consistent).
    let close = [
        ClassDistribution::new("img040", vec![0.7, 0.2, 0.1])?,
        ClassDistribution::new("img048", vec![0.6, 0.3, 0.1])?,
    ];
    let far = [
        ClassDistribution::new("img040", vec![0.7, 0.2, 0.1])?,
        ClassDistribution::new("img091", vec![0.05, 0.15, 0.8])?,
    ];
    println!(
        "\nconsistency: similar {:.4}, dissimilar {:.4}",
        consistency(&close)?,
        consistency(&far)?
    );
    Ok(())
}
