use super::MetricError;

/// Value assigned to every element of a constant batch.
pub const CONSTANT_FEATURE_VALUE: f64 = 0.5;

/// Rescales a batch onto `[0, 1]` with `(x − min) / (max − min)`.
///
/// A constant batch maps to 0.5 everywhere so the feature neither rewards nor
/// penalizes any element.
pub fn min_max_normalize(scores: &[f64]) -> Result<Vec<f64>, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyInput("min-max normalization of an empty batch"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![CONSTANT_FEATURE_VALUE; scores.len()]);
    }
    let span = max - min;
    Ok(scores.iter().map(|&s| ((s - min) / span).clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(min_max_normalize(&[7.0; 3]).unwrap(), vec![0.5; 3]);
        assert_eq!(min_max_normalize(&[-3.0, 11.0]).unwrap(), vec![0.0, 1.0]);
        assert!(min_max_normalize(&[]).is_err());
        assert!(min_max_normalize(&[1.0, f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_order_preserving(xs in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let ys = min_max_normalize(&xs).unwrap();
            prop_assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)));
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max > min {
                let argmax = xs.iter().position(|&x| x == max).unwrap();
                let argmin = xs.iter().position(|&x| x == min).unwrap();
                prop_assert_eq!(ys[argmax], 1.0);
                prop_assert_eq!(ys[argmin], 0.0);
            }
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    if xs[i] < xs[j] {
                        prop_assert!(ys[i] <= ys[j]);
                    }
                }
            }
        }
    }
}
