//! Truncated sampling: nucleus (top-p) and top-k.
//!
//! Tokens are ordered by descending probability with ties broken by ascending
//! token id, the retained prefix is renormalized, and one uniform draw walks
//! the cumulative mass. Zero-probability tokens are never retained.

use rand::Rng;
use thiserror::Error;

use crate::metrics::TokenDistribution;

/// Slack when comparing cumulative mass against the nucleus threshold.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("nucleus threshold p = {0} outside (0, 1]")]
    InvalidP(f64),
    #[error("top-k cutoff must be at least 1, got {0}")]
    InvalidK(usize),
    #[error("distribution has no positive mass")]
    NoSupport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationRule {
    Nucleus(f64),
    TopK(usize),
}

impl TruncationRule {
    pub fn validate(&self) -> Result<(), SamplingError> {
        match *self {
            TruncationRule::Nucleus(p) if !(p > 0.0 && p <= 1.0) => Err(SamplingError::InvalidP(p)),
            TruncationRule::TopK(0) => Err(SamplingError::InvalidK(0)),
            _ => Ok(()),
        }
    }

    /// The retained `(token, probability)` pairs, most probable first.
    pub fn truncate(&self, items: &[(usize, f64)]) -> Result<Vec<(usize, f64)>, SamplingError> {
        self.validate()?;
        let mut sorted: Vec<(usize, f64)> = items.iter().copied().filter(|&(_, p)| p > 0.0).collect();
        if sorted.is_empty() {
            return Err(SamplingError::NoSupport);
        }
        sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        match *self {
            TruncationRule::TopK(k) => sorted.truncate(k),
            TruncationRule::Nucleus(p) => {
                let mut cum = 0.0;
                let mut keep = sorted.len();
                for (i, &(_, prob)) in sorted.iter().enumerate() {
                    cum += prob;
                    if cum >= p - MASS_SLACK {
                        keep = i + 1;
                        break;
                    }
                }
                sorted.truncate(keep);
            }
        }
        Ok(sorted)
    }
}

/// Samples a token id from sparse `(token, probability)` pairs. The weights
/// need not sum to 1; the nucleus threshold applies to their normalized mass.
pub fn sample_with<R: Rng + ?Sized>(
    items: &[(usize, f64)],
    rule: TruncationRule,
    rng: &mut R,
) -> Result<usize, SamplingError> {
    let total: f64 = items.iter().map(|&(_, p)| p.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(SamplingError::NoSupport);
    }
    let normalized: Vec<(usize, f64)>;
    let items = if (total - 1.0).abs() > 1e-12 {
        normalized = items.iter().map(|&(t, p)| (t, p / total)).collect();
        &normalized[..]
    } else {
        items
    };
    let kept = rule.truncate(items)?;
    let mass: f64 = kept.iter().map(|&(_, p)| p).sum();
    let u = rng.random::<f64>() * mass;
    let mut cum = 0.0;
    for &(token, p) in &kept {
        cum += p;
        if u < cum {
            return Ok(token);
        }
    }
    Ok(kept[kept.len() - 1].0)
}

fn dense(d: &TokenDistribution) -> Vec<(usize, f64)> {
    d.probs().iter().copied().enumerate().collect()
}

/// Samples from the smallest most-probable prefix holding mass ≥ `p`.
pub fn nucleus_sample<R: Rng + ?Sized>(d: &TokenDistribution, p: f64, rng: &mut R) -> Result<usize, SamplingError> {
    sample_with(&dense(d), TruncationRule::Nucleus(p), rng)
}

/// Samples from the `k` most probable tokens.
pub fn top_k_sample<R: Rng + ?Sized>(d: &TokenDistribution, k: usize, rng: &mut R) -> Result<usize, SamplingError> {
    sample_with(&dense(d), TruncationRule::TopK(k), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::stream_rng;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> TokenDistribution {
        TokenDistribution::from_probabilities(v.to_vec()).unwrap()
    }

    #[test]
    fn invalid_parameters() {
        let d = dist(&[0.5, 0.5]);
        let mut rng = stream_rng(0, 0);
        assert_eq!(nucleus_sample(&d, 0.0, &mut rng), Err(SamplingError::InvalidP(0.0)));
        assert_eq!(nucleus_sample(&d, 1.01, &mut rng), Err(SamplingError::InvalidP(1.01)));
        assert!(nucleus_sample(&d, f64::NAN, &mut rng).is_err());
        assert_eq!(top_k_sample(&d, 0, &mut rng), Err(SamplingError::InvalidK(0)));
    }

    #[test]
    fn dominant_token_fills_the_nucleus() {
        let d = dist(&[0.95, 0.05]);
        let mut rng = stream_rng(3, 0);
        for _ in 0..1000 {
            assert_eq!(nucleus_sample(&d, 0.9, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn top_one_is_argmax() {
        let d = dist(&[0.2, 0.5, 0.3]);
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            assert_eq!(top_k_sample(&d, 1, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn top_k_excludes_the_tail() {
        let d = dist(&[0.4, 0.4, 0.2]);
        let mut rng = stream_rng(11, 0);
        let mut seen = [0usize; 3];
        for _ in 0..5000 {
            seen[top_k_sample(&d, 2, &mut rng).unwrap()] += 1;
        }
        assert_eq!(seen[2], 0);
        assert!(seen[0] > 0 && seen[1] > 0);
    }

    #[test]
    fn ties_keep_the_lower_token_id() {
        let kept = TruncationRule::TopK(1).truncate(&[(4, 0.5), (2, 0.5)]).unwrap();
        assert_eq!(kept, vec![(2, 0.5)]);
    }

    #[test]
    fn nucleus_prefix_by_hand() {
        let kept = TruncationRule::Nucleus(0.75)
            .truncate(&[(0, 0.5), (1, 0.3), (2, 0.2)])
            .unwrap();
        assert_eq!(kept, vec![(0, 0.5), (1, 0.3)]);
    }

    #[test]
    fn zero_mass_tokens_are_never_drawn() {
        let d = dist(&[0.0, 1.0, 0.0]);
        let mut rng = stream_rng(5, 2);
        for _ in 0..100 {
            assert_eq!(nucleus_sample(&d, 1.0, &mut rng).unwrap(), 1);
            assert_eq!(top_k_sample(&d, 3, &mut rng).unwrap(), 1);
        }
    }

    proptest! {
        #[test]
        fn full_nucleus_equals_full_top_k(
            weights in prop::collection::vec(0.0f64..1.0, 1..30),
            seed in any::<u64>(),
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let d = TokenDistribution::from_weights(weights.clone()).unwrap();
            let mut a = stream_rng(seed, 0);
            let mut b = stream_rng(seed, 0);
            for _ in 0..20 {
                let x = nucleus_sample(&d, 1.0, &mut a).unwrap();
                let y = top_k_sample(&d, weights.len(), &mut b).unwrap();
                prop_assert_eq!(x, y);
                prop_assert!(d.probs()[x] > 0.0);
            }
        }
    }
}
