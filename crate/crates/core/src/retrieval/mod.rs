//! Text-to-image retrieval over precomputed embeddings, and the visual
//! consistency score of a story's images.

mod consistency;
mod index;

pub use consistency::{
    consistency, load_class_distributions, rank_stories_by_consistency, read_class_distributions, story_distributions,
    ClassDistribution, ConsistencyError, RankedStory,
};
pub use index::{
    embed_query, EmbeddingIndex, Hit, IndexError, RetrievalResult, NORM_TOLERANCE, TTIX_MAGIC, TTIX_VERSION,
};
