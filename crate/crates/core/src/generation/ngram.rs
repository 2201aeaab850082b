//! Order-n Markov model with back-off to shorter contexts.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use super::{
    detokenize, is_end_of_sentence, model_tokens, sample_with, stream_rng, CompletionRequest, CompletionResponse,
    Generator, LogitSource, Logits, ProviderError, EOS,
};
use crate::metrics::TokenDistribution;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("model order must be at least 1")]
    ZeroOrder,
}

/// Successor counts of one context, sorted by token id.
#[derive(Debug, Clone, Default, PartialEq)]
struct Successors {
    total: u64,
    next: Vec<(u32, u64)>,
}

/// Token counts for every context of length `0..order`.
///
/// The conditional distribution of a history is the count ratio of its longest
/// suffix that was seen in training; unseen contexts back off one token at a
/// time down to the unigram table.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocabulary: Vec<String>,
    index: HashMap<String, u32>,
    /// `tables[c]` maps contexts of length `c` to successor counts.
    tables: Vec<HashMap<Vec<u32>, Successors>>,
}

impl NGramModel {
    /// Counts every window of up to `order` tokens in each sequence.
    pub fn train<S: AsRef<str>>(corpus: &[Vec<S>], order: usize) -> Result<Self, TrainError> {
        if order == 0 {
            return Err(TrainError::ZeroOrder);
        }
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(TrainError::EmptyCorpus);
        }
        let mut vocab: Vec<String> = corpus.iter().flatten().map(|t| t.as_ref().to_owned()).collect();
        vocab.sort_unstable();
        vocab.dedup();
        let index: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

        let mut raw: Vec<HashMap<Vec<u32>, HashMap<u32, u64>>> = vec![HashMap::new(); order];
        for seq in corpus {
            let ids: Vec<u32> = seq.iter().map(|t| index[t.as_ref()]).collect();
            for i in 0..ids.len() {
                for c in 0..order.min(i + 1) {
                    let ctx = ids[i - c..i].to_vec();
                    *raw[c].entry(ctx).or_default().entry(ids[i]).or_default() += 1;
                }
            }
        }
        let tables = raw
            .into_iter()
            .map(|table| {
                table
                    .into_iter()
                    .map(|(ctx, counts)| {
                        let mut next: Vec<(u32, u64)> = counts.into_iter().collect();
                        next.sort_unstable();
                        let total = next.iter().map(|&(_, n)| n).sum();
                        (ctx, Successors { total, next })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            order,
            vocabulary: vocab,
            index,
            tables,
        })
    }

    /// Trains on texts, tokenized with [`model_tokens`].
    pub fn train_texts<S: AsRef<str>>(texts: &[S], order: usize) -> Result<Self, TrainError> {
        let corpus: Vec<Vec<String>> = texts.iter().map(|t| model_tokens(t.as_ref())).collect();
        Self::train(&corpus, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Number of stored contexts across all orders.
    pub fn context_count(&self) -> usize {
        self.tables.iter().map(HashMap::len).sum()
    }

    fn ids(&self, tokens: &[String]) -> Vec<Option<u32>> {
        tokens.iter().map(|t| self.token_id(t)).collect()
    }

    /// Successors of the longest seen suffix of `history`.
    fn successors(&self, history: &[Option<u32>]) -> &Successors {
        let longest = (self.order - 1).min(history.len());
        for c in (1..=longest).rev() {
            let tail = &history[history.len() - c..];
            if tail.iter().any(Option::is_none) {
                continue;
            }
            let ctx: Vec<u32> = tail.iter().map(|t| t.unwrap()).collect();
            if let Some(s) = self.tables[c].get(&ctx) {
                return s;
            }
        }
        &self.tables[0][&Vec::new()]
    }

    /// Sparse `(token id, probability)` successors of `history`.
    pub fn next_probabilities(&self, history: &[String]) -> Vec<(usize, f64)> {
        self.sparse(&self.ids(history))
    }

    fn sparse(&self, history: &[Option<u32>]) -> Vec<(usize, f64)> {
        let s = self.successors(history);
        let total = s.total as f64;
        s.next.iter().map(|&(t, n)| (t as usize, n as f64 / total)).collect()
    }

    /// Dense conditional distribution over the whole vocabulary.
    pub fn distribution(&self, history: &[String]) -> TokenDistribution {
        self.dense(&self.ids(history))
    }

    fn dense(&self, history: &[Option<u32>]) -> TokenDistribution {
        let s = self.successors(history);
        let mut weights = vec![0.0; self.vocabulary.len()];
        for &(t, n) in &s.next {
            weights[t as usize] = n as f64;
        }
        TokenDistribution::from_weights(weights).expect("stored contexts have positive counts")
    }

    /// Generates one candidate from the random stream `(seed, stream)`.
    ///
    /// Stops after a sentence-ending token or `max_tokens` tokens; a sampled
    /// [`EOS`] ends the candidate without being emitted.
    pub fn generate(
        &self,
        context: &str,
        config: &super::GeneratorConfig,
        stream: u64,
    ) -> Result<Vec<String>, ProviderError> {
        let rule = config.truncation();
        let mut rng = stream_rng(config.seed, stream);
        let mut history = self.ids(&model_tokens(context));
        let mut out = Vec::new();
        while out.len() < config.max_tokens {
            let items = self.sparse(&history);
            let id = sample_with(&items, rule, &mut rng).map_err(|e| ProviderError::Generation(e.to_string()))?;
            let token = &self.vocabulary[id];
            if token == EOS {
                break;
            }
            out.push(token.clone());
            history.push(Some(id as u32));
            if is_end_of_sentence(token) {
                break;
            }
        }
        Ok(out)
    }
}

impl Generator for NGramModel {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        req.config.validate()?;
        let candidates = (0..req.n_candidates as u64)
            .into_par_iter()
            .map(|i| self.generate(&req.context, &req.config, i).map(|t| detokenize(&t)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompletionResponse { candidates })
    }
}

impl LogitSource for NGramModel {
    fn logits(&self, tokens: &[String]) -> Result<Logits, ProviderError> {
        if tokens.is_empty() {
            return Err(ProviderError::InvalidConfig("logits need at least one token".into()));
        }
        let ids = self.ids(tokens);
        let distributions = (1..=ids.len()).map(|i| self.dense(&ids[..i])).collect();
        Ok(Logits {
            vocabulary: self.vocabulary.clone(),
            distributions,
        })
    }
}
