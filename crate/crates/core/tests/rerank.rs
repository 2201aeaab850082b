use rand::seq::IndexedRandom;
use rand::Rng;
use taletailor::generation::{stream_rng, CompletionRequest, CompletionResponse, Generator, ProviderError};
use taletailor::metrics::{FrequentWordSet, MetricVector, Polarity, ScoringContext, SentimentLexicon, FEATURE_COUNT};
use taletailor::rerank::{join_text, rank, rank_metrics, Candidate, RerankConfig, Reranker};

/// Seeded word salad: candidate `i` of a request draws from stream `(seed, i)`.
struct Salad;

const WORDS: &[&str] = &[
    "the", "happy", "king", "dark", "forest", "sang", "a", "little", "dragon", "slept", "old", "castle", "sad",
    "queen", "went", "home", "and", "bright", "moon",
];

impl Generator for Salad {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let candidates = (0..req.n_candidates as u64)
            .map(|i| {
                let mut rng = stream_rng(req.config.seed, i);
                let n = rng.random_range(0..8);
                let mut s: Vec<&str> = (0..n).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
                if s.is_empty() {
                    return String::new();
                }
                s.push(".");
                s.join(" ").replace(" .", ".")
            })
            .collect();
        Ok(CompletionResponse { candidates })
    }
}

fn ctx() -> ScoringContext {
    ScoringContext::new(
        SentimentLexicon::from_senses([
            (
                "happy",
                None,
                Polarity {
                    positive: 0.75,
                    negative: 0.0,
                },
            ),
            (
                "bright",
                None,
                Polarity {
                    positive: 0.5,
                    negative: 0.0,
                },
            ),
            (
                "sad",
                None,
                Polarity {
                    positive: 0.0,
                    negative: 0.75,
                },
            ),
            (
                "dark",
                None,
                Polarity {
                    positive: 0.0,
                    negative: 0.5,
                },
            ),
        ]),
        FrequentWordSet::new(["king", "queen", "home", "old"], 0.07),
    )
}

/// Independent ranking oracle: min-max each feature, sum, stable sort.
fn oracle(raw: &[MetricVector]) -> Vec<(usize, f64)> {
    let mut totals = vec![0.0; raw.len()];
    for f in 0..FEATURE_COUNT {
        let col: Vec<f64> = raw.iter().map(|m| m.values()[f]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (t, x) in totals.iter_mut().zip(&col) {
            *t += if hi == lo { 0.5 } else { (x - lo) / (hi - lo) };
        }
    }
    let mut idx: Vec<(usize, f64)> = totals.into_iter().enumerate().collect();
    idx.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    idx
}

#[test]
fn single_candidate_scores_three() {
    let r = rank(&["The king sang."], &ctx()).unwrap();
    assert_eq!(r[0].normalized_score, 3.0);
}

#[test]
fn dominant_candidate_scores_six() {
    let hi = MetricVector::from_values([5.0, 1.0, 1.0, 3.0, 2.0, 0.4], false);
    let lo = MetricVector::from_values([1.0, -1.0, 0.2, 0.0, 0.0, 0.1], false);
    let order = rank_metrics(&[lo, hi], &[1.0; FEATURE_COUNT]).unwrap();
    assert_eq!(order, vec![(1, 6.0), (0, 0.0)]);
}

#[test]
fn ranking_is_permutation_invariant() {
    let texts = [
        "The happy king sang.",
        "Dark dark dark.",
        "The queen went home and the moon was bright.",
    ];
    let a: Vec<String> = rank(&texts, &ctx()).unwrap().into_iter().map(|c| c.text).collect();
    let rev: Vec<&str> = texts.iter().rev().copied().collect();
    let b: Vec<String> = rank(&rev, &ctx()).unwrap().into_iter().map(|c| c.text).collect();
    assert_eq!(a, b);
}

#[test]
fn hq_matches_exhaustive_oracle() {
    let ctx = ctx();
    for seed in 0..40 {
        let config = RerankConfig {
            generator: taletailor::generation::GeneratorConfig::default().with_seed(seed),
            ..Default::default()
        };
        let r = Reranker::new(&Salad, &ctx, config.clone()).unwrap();
        let context = "Once upon a time the old king lived in a castle.";
        let top = r.autocomplete_hq(context).unwrap();
        let all = Salad
            .complete(&CompletionRequest::new(context, config.generator.clone(), 10))
            .unwrap()
            .candidates;
        let raw: Vec<MetricVector> = all.iter().map(|c| ctx.score(&join_text(context, c)).unwrap()).collect();
        let expected: Vec<&str> = oracle(&raw).into_iter().take(3).map(|(i, _)| all[i].as_str()).collect();
        let got: Vec<&str> = top.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(got, expected, "seed {seed}");
    }
}

#[test]
fn population_law_and_survivors() {
    let ctx = ctx();
    for population in [4, 8, 16] {
        let config = RerankConfig {
            population,
            rounds: 5,
            ..Default::default()
        };
        let r = Reranker::new(&Salad, &ctx, config).unwrap();
        let run = r.run("The story begins.");
        assert_eq!(run.steps.len(), 5);
        for step in &run.steps {
            assert!(step.degraded.is_none());
            assert_eq!(step.ranked.len(), population);
            assert_eq!(step.survivors.len(), population / 2);
            assert_eq!(step.population.len(), population);
            let raw: Vec<MetricVector> = step.ranked.iter().map(|c| c.raw_metrics).collect();
            // The ranked list is already in rank order, so the oracle must
            // return the identity permutation (ties keep order).
            let order: Vec<usize> = oracle(&raw).into_iter().map(|(i, _)| i).collect();
            assert_eq!(order, (0..population).collect::<Vec<_>>());
            assert_eq!(step.survivors[..], step.ranked[..population / 2]);
        }
    }
}

#[test]
fn empty_extension_loses() {
    let ctx = ctx();
    let ranked = rank(&["", "The king went home."], &ctx).unwrap();
    assert_eq!(ranked[0].text, "The king went home.");
    assert_eq!(ranked[1].raw_metrics.readability, -15.0);
}

#[test]
fn zero_rounds_is_identity() {
    let ctx = ctx();
    let r = Reranker::new(&Salad, &ctx, RerankConfig::default()).unwrap();
    let seed = vec![Candidate::unscored("a"), Candidate::unscored("b")];
    let run = r.rerank_from("x", seed.clone(), 0);
    assert_eq!(run.best, seed);
}

#[test]
fn ten_identical_candidates_tie() {
    let texts = vec!["The king sang."; 10];
    let ranked = rank(&texts, &ctx()).unwrap();
    assert!(ranked.iter().all(|c| c.normalized_score == 3.0));
}
