//! Candidate ranking, keep-top-half re-ranking, and the two autocomplete
//! modes.
//!
//! Ranking min-max normalizes each raw feature across the batch and sums the
//! normalized features (equal weights by default), so a batch total lies in
//! `[0, 6]`. Sorting is stable: ties keep their original order.
//!
//! Candidates are always scored on the full text so far, i.e. the story
//! context followed by the candidate's continuation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{derive_seed, CompletionRequest, Generator, GeneratorConfig, ProviderError};
use crate::metrics::{min_max_normalize, MetricError, MetricVector, ScoringContext, FEATURE_COUNT};

#[derive(Debug, Error)]
pub enum RerankError {
    #[error("nothing to rank")]
    Empty,
    #[error("invalid rerank config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// A generated continuation and its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// The continuation, without the story context.
    pub text: String,
    pub raw_metrics: MetricVector,
    /// Weighted sum of the batch-normalized features.
    pub normalized_score: f64,
    /// Population slot of the ancestor at each re-ranking step.
    pub lineage: Vec<u32>,
}

impl Candidate {
    /// An unscored candidate, as seeded into a re-ranking population.
    pub fn unscored(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            raw_metrics: MetricVector::from_values([0.0; FEATURE_COUNT], true),
            normalized_score: 0.0,
            lineage: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankConfig {
    /// Re-ranking population; even and at least 2.
    pub population: usize,
    pub rounds: usize,
    /// Candidates generated by high-quality autocomplete.
    pub hq_generate: usize,
    /// Candidates returned by either autocomplete mode.
    pub hq_return: usize,
    /// Per-feature weights applied after normalization.
    pub weights: [f64; FEATURE_COUNT],
    pub generator: GeneratorConfig,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            population: 8,
            rounds: 3,
            hq_generate: 10,
            hq_return: 3,
            weights: [1.0; FEATURE_COUNT],
            generator: GeneratorConfig::default(),
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<(), RerankError> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(RerankError::InvalidConfig(format!(
                "population must be even and at least 2, got {}",
                self.population
            )));
        }
        if self.hq_return == 0 || self.hq_return > self.hq_generate {
            return Err(RerankError::InvalidConfig(format!(
                "need 1 <= hq_return ({}) <= hq_generate ({})",
                self.hq_return, self.hq_generate
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(RerankError::InvalidConfig("weights must be finite".into()));
        }
        self.generator.validate()?;
        Ok(())
    }
}

/// Orders a batch of raw metric vectors. Returns `(original index, total)`
/// pairs, best first; equal totals keep input order.
pub fn rank_metrics(
    metrics: &[MetricVector],
    weights: &[f64; FEATURE_COUNT],
) -> Result<Vec<(usize, f64)>, RerankError> {
    if metrics.is_empty() {
        return Err(RerankError::Empty);
    }
    let mut totals = vec![0.0; metrics.len()];
    for (f, weight) in weights.iter().enumerate() {
        let column: Vec<f64> = metrics.iter().map(|m| m.values()[f]).collect();
        for (total, scaled) in totals.iter_mut().zip(min_max_normalize(&column)?) {
            *total += weight * scaled;
        }
    }
    let mut order: Vec<(usize, f64)> = totals.into_iter().enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(order)
}

/// Appends a continuation to a context with a single separating space.
pub fn join_text(context: &str, continuation: &str) -> String {
    let context = context.trim_end();
    let continuation = continuation.trim_start();
    if context.is_empty() {
        return continuation.to_owned();
    }
    if continuation.is_empty() {
        return context.to_owned();
    }
    let glue = continuation.starts_with(['.', ',', '!', '?', ';', ':']);
    let mut s = String::with_capacity(context.len() + continuation.len() + 1);
    s.push_str(context);
    if !glue {
        s.push(' ');
    }
    s.push_str(continuation);
    s
}

/// Scores and orders texts as given (equal weights).
pub fn rank<S: AsRef<str> + Sync>(texts: &[S], ctx: &ScoringContext) -> Result<Vec<Candidate>, RerankError> {
    rank_weighted("", texts, ctx, &[1.0; FEATURE_COUNT])
}

/// Scores `context + continuation` for each continuation and orders the
/// continuations best first.
pub fn rank_continuations<S: AsRef<str> + Sync>(
    context: &str,
    continuations: &[S],
    ctx: &ScoringContext,
) -> Result<Vec<Candidate>, RerankError> {
    rank_weighted(context, continuations, ctx, &[1.0; FEATURE_COUNT])
}

pub fn rank_weighted<S: AsRef<str> + Sync>(
    context: &str,
    continuations: &[S],
    ctx: &ScoringContext,
    weights: &[f64; FEATURE_COUNT],
) -> Result<Vec<Candidate>, RerankError> {
    let candidates: Vec<Candidate> = continuations.iter().map(|c| Candidate::unscored(c.as_ref())).collect();
    rank_candidates(context, &candidates, ctx, weights)
}

/// Scores a batch of candidates and returns scored copies, best first.
pub fn rank_candidates(
    context: &str,
    candidates: &[Candidate],
    ctx: &ScoringContext,
    weights: &[f64; FEATURE_COUNT],
) -> Result<Vec<Candidate>, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::Empty);
    }
    let metrics = candidates
        .par_iter()
        .map(|c| ctx.score(&join_text(context, &c.text)))
        .collect::<Result<Vec<_>, _>>()?;
    let order = rank_metrics(&metrics, weights)?;
    Ok(order
        .into_iter()
        .map(|(i, total)| Candidate {
            raw_metrics: metrics[i],
            normalized_score: total,
            ..candidates[i].clone()
        })
        .collect())
}

/// Result of one re-ranking step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Every extended candidate, best first.
    pub ranked: Vec<Candidate>,
    /// The better half of `ranked`.
    pub survivors: Vec<Candidate>,
    /// Next population: each survivor branched into two slots.
    pub population: Vec<Candidate>,
    /// Set when the provider or scorer failed; the input population is then
    /// carried over unchanged.
    pub degraded: Option<String>,
}

/// Result of a full re-ranking run.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankRun {
    pub steps: Vec<StepOutcome>,
    /// Survivors of the last step, best first (the initial population when no
    /// step ran).
    pub best: Vec<Candidate>,
}

/// Drives generation and ranking against one generator and scoring context.
pub struct Reranker<'a> {
    generator: &'a dyn Generator,
    scoring: &'a ScoringContext,
    config: RerankConfig,
}

impl<'a> Reranker<'a> {
    pub fn new(
        generator: &'a dyn Generator,
        scoring: &'a ScoringContext,
        config: RerankConfig,
    ) -> Result<Self, RerankError> {
        config.validate()?;
        Ok(Self {
            generator,
            scoring,
            config,
        })
    }

    pub fn config(&self) -> &RerankConfig {
        &self.config
    }

    /// Extends every candidate by one sentence, ranks the extended set, keeps
    /// the top half and branches each survivor into two.
    pub fn rerank_step(&self, context: &str, population: &[Candidate], round: usize) -> StepOutcome {
        match self.try_step(context, population, round) {
            Ok(outcome) => outcome,
            Err(e) => {
                log::warn!("re-ranking step {round} degraded: {e}");
                StepOutcome {
                    ranked: Vec::new(),
                    survivors: population.to_vec(),
                    population: population.to_vec(),
                    degraded: Some(e.to_string()),
                }
            }
        }
    }

    fn try_step(&self, context: &str, population: &[Candidate], round: usize) -> Result<StepOutcome, RerankError> {
        if population.is_empty() || population.len() % 2 != 0 {
            return Err(RerankError::InvalidConfig(format!(
                "population of {} is not even",
                population.len()
            )));
        }
        let extended = population
            .par_iter()
            .enumerate()
            .map(|(slot, cand)| {
                let config = GeneratorConfig {
                    seed: derive_seed(self.config.generator.seed, &[round as u64, slot as u64]),
                    ..self.config.generator.clone()
                };
                let req = CompletionRequest::new(join_text(context, &cand.text), config, 1);
                let ext = self.generator.complete(&req)?;
                let sentence = ext.candidates.into_iter().next().unwrap_or_default();
                let mut lineage = cand.lineage.clone();
                lineage.push(slot as u32);
                Ok(Candidate {
                    text: join_text(&cand.text, &sentence),
                    lineage,
                    ..cand.clone()
                })
            })
            .collect::<Result<Vec<_>, RerankError>>()?;
        let ranked = rank_candidates(context, &extended, self.scoring, &self.config.weights)?;
        let survivors: Vec<Candidate> = ranked[..ranked.len() / 2].to_vec();
        let population = survivors.iter().flat_map(|s| [s.clone(), s.clone()]).collect();
        Ok(StepOutcome {
            ranked,
            survivors,
            population,
            degraded: None,
        })
    }

    /// Runs `rounds` steps starting from `population`.
    pub fn rerank_from(&self, context: &str, population: Vec<Candidate>, rounds: usize) -> RerankRun {
        let mut steps = Vec::with_capacity(rounds);
        let mut current = population;
        let mut best = current.clone();
        for round in 0..rounds {
            let outcome = self.rerank_step(context, &current, round);
            current = outcome.population.clone();
            best = outcome.survivors.clone();
            steps.push(outcome);
        }
        RerankRun { steps, best }
    }

    /// Grows a story from `context` with the configured population and rounds.
    pub fn run(&self, context: &str) -> RerankRun {
        let seed = vec![Candidate::unscored(""); self.config.population];
        self.rerank_from(context, seed, self.config.rounds)
    }

    /// Unranked completions straight from the generator.
    pub fn autocomplete_fast(&self, context: &str) -> Result<Vec<String>, RerankError> {
        let req = CompletionRequest::new(context, self.config.generator.clone(), self.config.hq_return);
        Ok(self.generator.complete(&req)?.candidates)
    }

    /// Generates `hq_generate` completions and returns the best `hq_return`.
    pub fn autocomplete_hq(&self, context: &str) -> Result<Vec<Candidate>, RerankError> {
        let req = CompletionRequest::new(context, self.config.generator.clone(), self.config.hq_generate);
        let all = self.generator.complete(&req)?.candidates;
        let mut ranked = rank_weighted(context, &all, self.scoring, &self.config.weights)?;
        ranked.truncate(self.config.hq_return);
        Ok(ranked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{FrequentWordSet, Polarity, SentimentLexicon};

    fn ctx() -> ScoringContext {
        ScoringContext::new(
            SentimentLexicon::from_senses([(
                "kind",
                None,
                Polarity {
                    positive: 0.5,
                    negative: 0.0,
                },
            )]),
            FrequentWordSet::new(["king", "queen"], 0.07),
        )
    }

    fn mv(v: [f64; 6]) -> MetricVector {
        MetricVector::from_values(v, false)
    }

    #[test]
    fn single_candidate_scores_three() {
        let r = rank(&["The king smiled."], &ctx()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].normalized_score, 3.0);
    }

    #[test]
    fn dominant_candidate() {
        let order = rank_metrics(
            &[mv([1.0, 0.0, 0.1, 0.0, 0.0, 0.0]), mv([2.0, 1.0, 0.9, 3.0, 1.0, 0.5])],
            &[1.0; 6],
        )
        .unwrap();
        assert_eq!(order, vec![(1, 6.0), (0, 0.0)]);
    }

    #[test]
    fn ties_keep_input_order() {
        let same = mv([1.0; 6]);
        let order = rank_metrics(&[same, same, same], &[1.0; 6]).unwrap();
        assert_eq!(order.iter().map(|o| o.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(order.iter().all(|o| o.1 == 3.0));
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(matches!(rank::<&str>(&[], &ctx()), Err(RerankError::Empty)));
    }

    #[test]
    fn permutation_keeps_text_order() {
        let texts = [
            "The king was kind. The queen smiled.",
            "Rain.",
            "A kind queen and a king met a fox.",
        ];
        let a: Vec<String> = rank(&texts, &ctx()).unwrap().into_iter().map(|c| c.text).collect();
        let rev: Vec<&str> = texts.iter().rev().copied().collect();
        let b: Vec<String> = rank(&rev, &ctx()).unwrap().into_iter().map(|c| c.text).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn join_rules() {
        assert_eq!(join_text("", "Hi."), "Hi.");
        assert_eq!(join_text("Once. ", " Then."), "Once. Then.");
        assert_eq!(join_text("Once", ", then"), "Once, then");
        assert_eq!(join_text("Once.", ""), "Once.");
    }

    #[test]
    fn config_validation() {
        assert!(RerankConfig::default().validate().is_ok());
        let odd = RerankConfig {
            population: 7,
            ..RerankConfig::default()
        };
        assert!(odd.validate().is_err());
        let greedy = RerankConfig {
            hq_return: 11,
            ..RerankConfig::default()
        };
        assert!(greedy.validate().is_err());
    }
}
