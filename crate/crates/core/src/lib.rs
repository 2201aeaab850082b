//! Story co-creation engine.
//!
//! * [`metrics`] scores a text on readability, positivity, diversity,
//!   simplicity, coherency and tale-likeness.
//! * [`generation`] produces candidate continuations with nucleus or top-k
//!   sampling, from a built-in n-gram model or a remote provider.
//! * [`rerank`] ranks candidate batches and runs keep-top-half re-ranking.
//! * [`retrieval`] finds images for a text by exact cosine search and scores
//!   the visual consistency of a story.
//! * [`corpus`] cleans, segments and summarizes training stories.
//! * [`story`] is the co-written document model with provenance analytics.

pub mod corpus;
pub mod generation;
pub mod metrics;
pub mod rerank;
pub mod retrieval;
pub mod story;
pub mod text;
