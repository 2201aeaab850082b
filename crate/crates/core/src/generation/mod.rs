//! Candidate generation and logit access behind one contract.
//!
//! [`Generator`], [`LogitSource`] and [`Embedder`] are implemented by the
//! built-in [`NGramModel`] / [`HashingEmbedder`] for offline use and by
//! [`RemoteProvider`], which speaks the JSON wire protocol in [`wire`].

mod embed;
mod ngram;
mod remote;
mod rng;
mod sampling;
pub mod wire;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{fnv1a64, HashingEmbedder};
pub use ngram::{NGramModel, TrainError};
pub use remote::{RemoteLogits, RemoteProvider};
pub use rng::{derive_seed, stream_rng, StreamRng};
pub use sampling::{nucleus_sample, sample_with, top_k_sample, SamplingError, TruncationRule};

use crate::metrics::TokenDistribution;

/// Sentinel token separating prompt and story and closing a story.
pub const EOS: &str = "<|eos|>";

/// Default nucleus threshold.
pub const DEFAULT_TOP_P: f64 = 0.9;
/// Default top-k cutoff.
pub const DEFAULT_TOP_K: usize = 50;
/// Default generation length, in model tokens.
pub const DEFAULT_MAX_TOKENS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    /// The remote endpoint could not be reached.
    #[error("transport: {0}")]
    Transport(String),
    /// The remote endpoint answered with an error status.
    #[error("provider returned status {status}: {message}")]
    Status { status: u16, message: String },
    /// The response did not follow the wire protocol.
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl ProviderError {
    /// True when the failure is about reaching the provider rather than the
    /// provider's own output.
    pub fn is_transport(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Nucleus,
    TopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub mode: SamplingMode,
    /// Nucleus threshold in `(0, 1]`; used in nucleus mode.
    pub p: f64,
    /// Cutoff; used in top-k mode.
    pub k: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Nucleus,
            p: DEFAULT_TOP_P,
            k: DEFAULT_TOP_K,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn nucleus(p: f64) -> Self {
        Self {
            mode: SamplingMode::Nucleus,
            p,
            ..Self::default()
        }
    }

    pub fn top_k(k: usize) -> Self {
        Self {
            mode: SamplingMode::TopK,
            k,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: usize) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn truncation(&self) -> TruncationRule {
        match self.mode {
            SamplingMode::Nucleus => TruncationRule::Nucleus(self.p),
            SamplingMode::TopK => TruncationRule::TopK(self.k),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_tokens == 0 {
            return Err(ProviderError::InvalidConfig("max_tokens must be at least 1".into()));
        }
        self.truncation()
            .validate()
            .map_err(|e| ProviderError::InvalidConfig(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub context: String,
    pub config: GeneratorConfig,
    pub n_candidates: usize,
}

impl CompletionRequest {
    pub fn new(context: impl Into<String>, config: GeneratorConfig, n_candidates: usize) -> Self {
        Self {
            context: context.into(),
            config,
            n_candidates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub candidates: Vec<String>,
}

/// Per-position next-token distributions over a named vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub vocabulary: Vec<String>,
    pub distributions: Vec<TokenDistribution>,
}

/// Produces candidate continuations.
pub trait Generator: Send + Sync {
    /// `n_candidates` continuations of `req.context`. Candidate `i` draws from
    /// the random stream `(seed, i)`, so equal requests give equal responses.
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ProviderError>;
}

/// Exposes a model's conditional next-token distributions.
pub trait LogitSource: Send + Sync {
    /// One distribution per input token: the distribution of the token that
    /// follows `tokens[..=i]`.
    fn logits(&self, tokens: &[String]) -> Result<Logits, ProviderError>;
}

/// Maps texts into a shared embedding space.
pub trait Embedder: Send + Sync {
    /// One unit-norm vector per text, all of the same length.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;
}

fn is_sentence_end(token: &str) -> bool {
    matches!(token, "." | "!" | "?")
}

/// True for tokens that close a generated candidate.
pub fn is_end_of_sentence(token: &str) -> bool {
    token == EOS || is_sentence_end(token)
}

/// Model tokenization: words (as in [`crate::text::words`]), single
/// punctuation characters, and the [`EOS`] sentinel.
pub fn model_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
        } else if rest.starts_with(EOS) {
            out.push(EOS.to_owned());
            rest = &rest[EOS.len()..];
        } else if c.is_alphanumeric() {
            let end = word_end(rest);
            out.push(rest[..end].to_owned());
            rest = &rest[end..];
        } else {
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

fn word_end(s: &str) -> usize {
    let mut end = 0;
    let mut chars = s.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c.is_alphanumeric() {
            end = i + c.len_utf8();
        } else if matches!(c, '\'' | '-' | '\u{2019}') && chars.peek().is_some_and(|&(_, n)| n.is_alphanumeric()) {
            continue;
        } else {
            break;
        }
    }
    end
}

fn attaches_left(token: &str) -> bool {
    matches!(token, "." | "," | "!" | "?" | ";" | ":" | ")" | "]" | "'" | "\u{2019}")
}

/// Joins model tokens back into text. Closing punctuation attaches to the
/// preceding token; [`EOS`] sentinels are dropped.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = false;
    for t in tokens {
        let t = t.as_ref();
        if t == EOS {
            continue;
        }
        if !out.is_empty() && !attaches_left(t) && !glue_next {
            out.push(' ');
        }
        out.push_str(t);
        glue_next = matches!(t, "(" | "[");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_split_punctuation_and_keep_sentinel() {
        assert_eq!(
            model_tokens("The king's cat sat.<|eos|> Then, it ran!"),
            vec!["The", "king's", "cat", "sat", ".", EOS, "Then", ",", "it", "ran", "!"]
        );
        assert!(model_tokens("   ").is_empty());
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        let toks = model_tokens("Once, upon a time (long ago) they sang.");
        assert_eq!(detokenize(&toks), "Once, upon a time (long ago) they sang.");
        assert_eq!(detokenize(&["a", EOS, "b"]), "a b");
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig::default().validate().is_ok());
        assert!(GeneratorConfig::nucleus(0.0).validate().is_err());
        assert!(GeneratorConfig::nucleus(1.5).validate().is_err());
        assert!(GeneratorConfig::top_k(0).validate().is_err());
        assert!(GeneratorConfig::default().with_max_tokens(0).validate().is_err());
    }

    #[test]
    fn config_serde_names() {
        let json = serde_json::to_string(&GeneratorConfig::top_k(50)).unwrap();
        assert!(json.contains("\"top_k\""));
    }
}
