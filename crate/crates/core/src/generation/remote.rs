//! Blocking client for the provider wire protocol.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{
    CompleteRequest, CompleteResponse, EmbedRequest, EmbedResponse, LogitsRequest, LogitsResponse, COMPLETE_PATH,
    EMBED_PATH, LOGITS_PATH,
};
use super::{CompletionRequest, CompletionResponse, Embedder, Generator, LogitSource, Logits, ProviderError};
use crate::metrics::TokenDistribution;

const MAX_RESPONSE_BYTES: u64 = 512 * 1024 * 1024;

/// A provider reached over HTTP (plain `http://` only).
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    base_url: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            agent,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ProviderError> {
        let url = format!("{}{}", self.base_url, path);
        let mut resp = self.agent.post(&url).send_json(body).map_err(transport)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let message = resp
                .body_mut()
                .read_to_string()
                .unwrap_or_else(|_| String::from("<unreadable body>"));
            return Err(ProviderError::Status { status, message });
        }
        resp.body_mut()
            .with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_json()
            .map_err(|e| match e {
                ureq::Error::Json(e) => ProviderError::Protocol(e.to_string()),
                other => transport(other),
            })
    }

    /// Logits of one named model on a server that hosts several.
    pub fn logits_for(&self, tokens: &[String], model: Option<&str>) -> Result<Logits, ProviderError> {
        let req = LogitsRequest {
            tokens: tokens.to_vec(),
            model: model.map(str::to_owned),
        };
        let resp: LogitsResponse = self.post(LOGITS_PATH, &req)?;
        resp.validate(tokens.len())?;
        let distributions = resp
            .distributions
            .into_iter()
            .map(TokenDistribution::from_probabilities)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        Ok(Logits {
            vocabulary: resp.vocabulary,
            distributions,
        })
    }

    /// A [`LogitSource`] view bound to one model name.
    pub fn logit_source(&self, model: impl Into<String>) -> RemoteLogits {
        RemoteLogits {
            provider: self.clone(),
            model: Some(model.into()),
        }
    }
}

fn transport(e: ureq::Error) -> ProviderError {
    ProviderError::Transport(e.to_string())
}

impl Generator for RemoteProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        req.config.validate()?;
        let resp: CompleteResponse = self.post(COMPLETE_PATH, &CompleteRequest::from(req))?;
        if resp.candidates.len() != req.n_candidates {
            return Err(ProviderError::Protocol(format!(
                "asked for {} candidates, got {}",
                req.n_candidates,
                resp.candidates.len()
            )));
        }
        Ok(CompletionResponse {
            candidates: resp.candidates,
        })
    }
}

impl LogitSource for RemoteProvider {
    fn logits(&self, tokens: &[String]) -> Result<Logits, ProviderError> {
        self.logits_for(tokens, None)
    }
}

impl Embedder for RemoteProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let resp: EmbedResponse = self.post(EMBED_PATH, &EmbedRequest { texts: texts.to_vec() })?;
        resp.validate(texts.len())?;
        Ok(resp.vectors)
    }
}

/// Remote logits of a fixed model name.
#[derive(Debug, Clone)]
pub struct RemoteLogits {
    provider: RemoteProvider,
    model: Option<String>,
}

impl LogitSource for RemoteLogits {
    fn logits(&self, tokens: &[String]) -> Result<Logits, ProviderError> {
        self.provider.logits_for(tokens, self.model.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::GeneratorConfig;

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let port = {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let url = format!("http://127.0.0.1:{port}/");
        let p = RemoteProvider::with_timeout(&url, Duration::from_secs(2));
        assert_eq!(p.base_url(), url.trim_end_matches('/'));
        let err = p
            .complete(&CompletionRequest::new("x", GeneratorConfig::default(), 1))
            .unwrap_err();
        assert!(err.is_transport(), "{err:?}");
    }

    #[test]
    fn invalid_config_fails_before_any_request() {
        let p = RemoteProvider::new("http://127.0.0.1:9");
        let err = p
            .complete(&CompletionRequest::new("x", GeneratorConfig::top_k(0), 1))
            .unwrap_err();
        assert!(matches!(err, ProviderError::InvalidConfig(_)));
    }
}
