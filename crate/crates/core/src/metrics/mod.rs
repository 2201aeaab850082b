//! The six text quality features and their batch normalization.
//!
//! Every function here is pure. A [`ScoringContext`] bundles the read-only
//! resources (stop words, sentiment lexicon, frequent-word set and an optional
//! pair of logit sources) and is meant to be built once and shared.

mod coherency;
mod kl;
mod lexical;
mod lexicon;
mod normalize;
mod readability;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coherency::{coherency, coherency_of_sentences, idf, lsa_embeddings, tfidf_matrix, MAX_LSA_RANK};
pub use kl::{kl_divergence, symmetric_kl, tale_like, TokenDistribution, MASS_TOLERANCE, PROB_EPSILON};
pub use lexical::{diversity, simplicity, FrequentWordSet, DEFAULT_FREQUENT_FRACTION};
pub use lexicon::{positivity, LexiconError, Polarity, SentimentLexicon};
pub use normalize::{min_max_normalize, CONSTANT_FEATURE_VALUE};
pub use readability::{readability, ReadabilityBreakdown, EMPTY_PENALTY};

use crate::generation::{model_tokens, LogitSource, Logits, ProviderError};
use crate::text::{tokenize, StopWords, TokenizedText};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("non-finite score")]
    NonFinite,
    #[error("logit provider: {0}")]
    Provider(#[from] ProviderError),
}

/// Number of features in a [`MetricVector`].
pub const FEATURE_COUNT: usize = 6;

/// Feature names in [`MetricVector::values`] order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "readability",
    "positivity",
    "diversity",
    "simplicity",
    "coherency",
    "tale_like",
];

/// Raw (unnormalized) feature scores of one text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub readability: f64,
    pub positivity: f64,
    pub diversity: f64,
    pub simplicity: f64,
    pub coherency: f64,
    pub tale_like: f64,
    /// Set when no logit pair was available and `tale_like` is a placeholder 0.
    #[serde(default)]
    pub partial: bool,
}

impl MetricVector {
    pub fn values(&self) -> [f64; FEATURE_COUNT] {
        [
            self.readability,
            self.positivity,
            self.diversity,
            self.simplicity,
            self.coherency,
            self.tale_like,
        ]
    }

    pub fn from_values(v: [f64; FEATURE_COUNT], partial: bool) -> Self {
        Self {
            readability: v[0],
            positivity: v[1],
            diversity: v[2],
            simplicity: v[3],
            coherency: v[4],
            tale_like: v[5],
            partial,
        }
    }
}

/// Preset and fine-tuned logit sources used by the tale-like feature.
#[derive(Clone)]
pub struct LogitPair {
    pub preset: Arc<dyn LogitSource>,
    pub finetuned: Arc<dyn LogitSource>,
}

impl std::fmt::Debug for LogitPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LogitPair")
    }
}

impl LogitPair {
    pub fn new(preset: Arc<dyn LogitSource>, finetuned: Arc<dyn LogitSource>) -> Self {
        Self { preset, finetuned }
    }

    /// Tale-likeness of `text` under the model tokenization; 0 for a text
    /// without tokens.
    pub fn tale_like(&self, text: &str) -> Result<f64, MetricError> {
        let tokens = model_tokens(text);
        if tokens.is_empty() {
            return Ok(0.0);
        }
        let preset = self.preset.logits(&tokens)?;
        let finetuned = self.finetuned.logits(&tokens)?;
        let (p, q) = align(preset, finetuned)?;
        tale_like(&p, &q)
    }
}

/// Re-expresses two logit responses over a common vocabulary. Tokens absent
/// from one side get probability 0 there.
pub fn align(a: Logits, b: Logits) -> Result<(Vec<TokenDistribution>, Vec<TokenDistribution>), MetricError> {
    if a.vocabulary == b.vocabulary {
        return Ok((a.distributions, b.distributions));
    }
    let mut union: Vec<&str> = a
        .vocabulary
        .iter()
        .chain(b.vocabulary.iter())
        .map(String::as_str)
        .collect();
    union.sort_unstable();
    union.dedup();
    let remap = |l: &Logits| -> Result<Vec<TokenDistribution>, MetricError> {
        let index: Vec<usize> = l
            .vocabulary
            .iter()
            .map(|t| union.binary_search(&t.as_str()).expect("token in union"))
            .collect();
        l.distributions
            .iter()
            .map(|d| {
                let mut probs = vec![0.0; union.len()];
                for (&i, &p) in index.iter().zip(d.probs()) {
                    probs[i] += p;
                }
                TokenDistribution::from_probabilities(probs)
            })
            .collect()
    };
    Ok((remap(&a)?, remap(&b)?))
}

/// Read-only resources needed to score a text.
#[derive(Debug, Clone)]
pub struct ScoringContext {
    pub stop_words: StopWords,
    pub lexicon: SentimentLexicon,
    pub frequent: FrequentWordSet,
    pub logits: Option<LogitPair>,
}

impl ScoringContext {
    pub fn new(lexicon: SentimentLexicon, frequent: FrequentWordSet) -> Self {
        Self {
            stop_words: StopWords::builtin(),
            lexicon,
            frequent,
            logits: None,
        }
    }

    pub fn with_stop_words(mut self, stop_words: StopWords) -> Self {
        self.stop_words = stop_words;
        self
    }

    pub fn with_logits(mut self, pair: LogitPair) -> Self {
        self.logits = Some(pair);
        self
    }

    /// Loads `lexicon.tsv`, `frequent_words.txt` and, when present,
    /// `stopwords.txt` from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, ContextLoadError> {
        let dir = dir.as_ref();
        let lexicon = SentimentLexicon::load(dir.join("lexicon.tsv"))?;
        let frequent = FrequentWordSet::load(dir.join("frequent_words.txt"))
            .map_err(|e| ContextLoadError::Io("frequent_words.txt", e))?;
        let stop_path = dir.join("stopwords.txt");
        let stop_words = if stop_path.exists() {
            StopWords::load(&stop_path).map_err(|e| ContextLoadError::Io("stopwords.txt", e))?
        } else {
            StopWords::builtin()
        };
        Ok(Self::new(lexicon, frequent).with_stop_words(stop_words))
    }

    pub fn tokenize(&self, text: &str) -> TokenizedText {
        tokenize(text, &self.stop_words)
    }

    pub fn score(&self, text: &str) -> Result<MetricVector, MetricError> {
        score_text(&self.tokenize(text), self)
    }
}

#[derive(Debug, Error)]
pub enum ContextLoadError {
    #[error("lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("{0}: {1}")]
    Io(&'static str, std::io::Error),
}

/// All six raw features of `t`. Without a logit pair, `tale_like` is 0 and the
/// vector is flagged partial.
pub fn score_text(t: &TokenizedText, ctx: &ScoringContext) -> Result<MetricVector, MetricError> {
    let (tale, partial) = match &ctx.logits {
        Some(pair) => (pair.tale_like(&t.raw)?, false),
        None => (0.0, true),
    };
    let v = MetricVector {
        readability: readability(t),
        positivity: positivity(t, &ctx.lexicon),
        diversity: diversity(t),
        simplicity: simplicity(t, &ctx.frequent),
        coherency: coherency(t),
        tale_like: tale,
        partial,
    };
    if v.values().iter().any(|x| !x.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(v)
}
