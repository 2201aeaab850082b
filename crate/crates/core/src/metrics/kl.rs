//! Probability vectors and KL divergence.

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Floor applied to a reference probability before taking its logarithm.
pub const PROB_EPSILON: f64 = 1e-12;

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A probability vector over a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    /// Validates finiteness, nonnegativity and unit mass (± 1e-9).
    pub fn from_probabilities(probs: Vec<f64>) -> Result<Self, MetricError> {
        if probs.is_empty() {
            return Err(MetricError::InvalidDistribution("empty vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(MetricError::InvalidDistribution(format!(
                "probability {bad} is negative or not finite"
            )));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(MetricError::InvalidDistribution(format!("mass {mass} differs from 1")));
        }
        Ok(Self { probs })
    }

    /// Scales nonnegative weights to unit mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, MetricError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MetricError::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MetricError::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Softmax of raw logits.
    pub fn from_logits(logits: &[f64]) -> Result<Self, MetricError> {
        if logits.is_empty() || logits.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(MetricError::InvalidDistribution("logits must be finite".into()));
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        Self::from_weights(exps)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TokenDistribution {
    type Error = MetricError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_probabilities(v)
    }
}

impl From<TokenDistribution> for Vec<f64> {
    fn from(d: TokenDistribution) -> Self {
        d.probs
    }
}

/// `D_KL(q ‖ p) = Σ q ln(q / p)` in nats. Terms with `q = 0` contribute
/// nothing; `p` is floored at [`PROB_EPSILON`].
pub fn kl_divergence(q: &[f64], p: &[f64]) -> Result<f64, MetricError> {
    if q.len() != p.len() {
        return Err(MetricError::LengthMismatch {
            left: q.len(),
            right: p.len(),
        });
    }
    let mut total = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            total += qi * (qi.ln() - pi.max(PROB_EPSILON).ln());
        }
    }
    // Rounding can push the sum of a near-identical pair a hair below zero.
    Ok(total.max(0.0))
}

/// `D_KL(q ‖ p) + D_KL(p ‖ q)`.
pub fn symmetric_kl(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    Ok(kl_divergence(p, q)? + kl_divergence(q, p)?)
}

/// Mean over positions of `D_KL(finetuned ‖ preset)`.
///
/// Higher means the text looks more like the fine-tuned model's domain than
/// the preset model's.
pub fn tale_like(preset: &[TokenDistribution], finetuned: &[TokenDistribution]) -> Result<f64, MetricError> {
    if preset.len() != finetuned.len() {
        return Err(MetricError::LengthMismatch {
            left: preset.len(),
            right: finetuned.len(),
        });
    }
    if preset.is_empty() {
        return Err(MetricError::EmptyInput("tale_like needs at least one position"));
    }
    let mut total = 0.0;
    for (p, q) in preset.iter().zip(finetuned) {
        total += kl_divergence(q.probs(), p.probs())?;
    }
    Ok(total / preset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> TokenDistribution {
        TokenDistribution::from_probabilities(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_lists_score_zero() {
        let a = vec![dist(&[0.2, 0.3, 0.5]), dist(&[0.6, 0.4, 0.0])];
        assert_eq!(tale_like(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_position_hand_value() {
        let v = tale_like(&[dist(&[0.5, 0.5])], &[dist(&[0.9, 0.1])]).unwrap();
        let expected = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.3681).abs() < 1e-4);
    }

    #[test]
    fn mean_over_positions() {
        let p = [dist(&[0.5, 0.5]), dist(&[0.25, 0.75])];
        let q = [dist(&[0.9, 0.1]), dist(&[0.5, 0.5])];
        let a = tale_like(&p[..1], &q[..1]).unwrap();
        let b = tale_like(&p[1..], &q[1..]).unwrap();
        assert!((tale_like(&p, &q).unwrap() - (a + b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let p = [dist(&[1.0])];
        assert!(matches!(tale_like(&p, &[]), Err(MetricError::LengthMismatch { .. })));
        assert!(kl_divergence(&[0.5, 0.5], &[1.0]).is_err());
    }

    #[test]
    fn zero_reference_mass_is_clamped() {
        let v = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        let expected = 0.5 * (0.5f64.ln()) + 0.5 * (0.5f64.ln() - PROB_EPSILON.ln());
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(TokenDistribution::from_probabilities(vec![0.5, 0.4]).is_err());
        assert!(TokenDistribution::from_probabilities(vec![1.5, -0.5]).is_err());
        assert!(TokenDistribution::from_probabilities(vec![f64::NAN]).is_err());
        let d = TokenDistribution::from_logits(&[0.0, 0.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn serde_validates() {
        let d: TokenDistribution = serde_json::from_str("[0.25,0.75]").unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<TokenDistribution>("[0.25,0.7]").is_err());
    }
}
