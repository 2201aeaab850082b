//! JSON bodies of the provider wire protocol.
//!
//! ```text
//! POST /v1/complete {context, n, mode, p, k, max_tokens, seed} -> {candidates}
//! POST /v1/logits   {tokens, model?}                           -> {distributions, vocabulary}
//! POST /v1/embed    {texts}                                    -> {vectors, dim}
//! ```
//!
//! `model` on `/v1/logits` selects `"preset"` or `"finetuned"` on servers
//! hosting both language models; servers with one model ignore it.

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, GeneratorConfig, ProviderError, SamplingMode};
use crate::metrics::MASS_TOLERANCE;

pub const COMPLETE_PATH: &str = "/v1/complete";
pub const LOGITS_PATH: &str = "/v1/logits";
pub const EMBED_PATH: &str = "/v1/embed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteRequest {
    pub context: String,
    pub n: usize,
    pub mode: SamplingMode,
    pub p: f64,
    pub k: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl From<&CompletionRequest> for CompleteRequest {
    fn from(r: &CompletionRequest) -> Self {
        Self {
            context: r.context.clone(),
            n: r.n_candidates,
            mode: r.config.mode,
            p: r.config.p,
            k: r.config.k,
            max_tokens: r.config.max_tokens,
            seed: r.config.seed,
        }
    }
}

impl From<CompleteRequest> for CompletionRequest {
    fn from(r: CompleteRequest) -> Self {
        CompletionRequest {
            context: r.context,
            config: GeneratorConfig {
                mode: r.mode,
                p: r.p,
                k: r.k,
                max_tokens: r.max_tokens,
                seed: r.seed,
            },
            n_candidates: r.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteResponse {
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogitsRequest {
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitsResponse {
    pub distributions: Vec<Vec<f64>>,
    pub vocabulary: Vec<String>,
}

impl LogitsResponse {
    /// Every row must span the vocabulary and be a probability vector.
    pub fn validate(&self, expected_rows: usize) -> Result<(), ProviderError> {
        if self.distributions.len() != expected_rows {
            return Err(ProviderError::Protocol(format!(
                "expected {expected_rows} distributions, got {}",
                self.distributions.len()
            )));
        }
        for (i, row) in self.distributions.iter().enumerate() {
            if row.len() != self.vocabulary.len() {
                return Err(ProviderError::Protocol(format!(
                    "distribution {i} has {} entries for a vocabulary of {}",
                    row.len(),
                    self.vocabulary.len()
                )));
            }
            let mass: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (mass - 1.0).abs() > MASS_TOLERANCE {
                return Err(ProviderError::Protocol(format!(
                    "distribution {i} is not a probability vector"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f32>>,
    pub dim: usize,
}

impl EmbedResponse {
    /// One finite vector of length `dim` per requested text.
    pub fn validate(&self, expected: usize) -> Result<(), ProviderError> {
        check_batch(&self.vectors, Some(self.dim))?;
        if self.vectors.len() != expected {
            return Err(ProviderError::Protocol(format!(
                "expected {expected} vectors, got {}",
                self.vectors.len()
            )));
        }
        Ok(())
    }
}

/// Rejects batches whose vectors disagree in length (or with `dim`, when
/// given) or contain non-finite values. Returns the common dimension.
pub fn check_batch(vectors: &[Vec<f32>], dim: Option<usize>) -> Result<usize, ProviderError> {
    let dim = match dim.or_else(|| vectors.first().map(Vec::len)) {
        Some(d) => d,
        None => return Ok(0),
    };
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ProviderError::Protocol(format!(
                "vector {i} has dimension {} instead of {dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::Protocol(format!("vector {i} has non-finite values")));
        }
    }
    Ok(dim)
}

/// Error body returned by protocol servers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_request_field_names() {
        let req = CompletionRequest::new("Once", GeneratorConfig::default().with_seed(4), 3);
        let v = serde_json::to_value(CompleteRequest::from(&req)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "context": "Once", "n": 3, "mode": "nucleus", "p": 0.9, "k": 50,
                "max_tokens": 40, "seed": 4
            })
        );
        let back: CompletionRequest = serde_json::from_value::<CompleteRequest>(v).unwrap().into();
        assert_eq!(back, req);
    }

    #[test]
    fn logits_model_field_is_optional() {
        let r: LogitsRequest = serde_json::from_str(r#"{"tokens":["a"]}"#).unwrap();
        assert_eq!(r.model, None);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"tokens":["a"]}"#);
    }

    #[test]
    fn inconsistent_batches_are_rejected() {
        assert!(check_batch(&[vec![1.0, 0.0], vec![1.0]], None).is_err());
        assert!(check_batch(&[vec![f32::NAN]], None).is_err());
        assert_eq!(check_batch(&[vec![1.0, 0.0]], None).unwrap(), 2);
        let resp = EmbedResponse {
            vectors: vec![vec![1.0, 0.0]],
            dim: 3,
        };
        assert!(resp.validate(1).is_err());
    }

    #[test]
    fn logits_validation() {
        let ok = LogitsResponse {
            distributions: vec![vec![0.5, 0.5]],
            vocabulary: vec!["a".into(), "b".into()],
        };
        assert!(ok.validate(1).is_ok());
        assert!(ok.validate(2).is_err());
        let bad = LogitsResponse {
            distributions: vec![vec![0.5, 0.6]],
            vocabulary: vec!["a".into(), "b".into()],
        };
        assert!(bad.validate(1).is_err());
    }
}
