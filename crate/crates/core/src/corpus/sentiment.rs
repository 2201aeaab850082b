use crate::metrics::{positivity, SentimentLexicon};
use crate::text::{tokenize, StopWords};

pub const DEFAULT_SENTIMENT_THRESHOLD: f64 = 0.9;

pub type ScoreError = Box<dyn std::error::Error + Send + Sync>;

/// Maps a text to a sentiment score in `[0, 1]`, higher is more positive.
pub trait SentimentScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, ScoreError>;
}

impl<F> SentimentScorer for F
where
    F: Fn(&str) -> Result<f64, ScoreError> + Send + Sync,
{
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        self(text)
    }
}

/// Mean lexicon polarity of the content words, mapped from `[-1, 1]` to
/// `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LexiconSentimentScorer {
    lexicon: SentimentLexicon,
    stop_words: StopWords,
}

impl LexiconSentimentScorer {
    pub fn new(lexicon: SentimentLexicon, stop_words: StopWords) -> Self {
        Self { lexicon, stop_words }
    }
}

impl SentimentScorer for LexiconSentimentScorer {
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        let t = tokenize(text, &self.stop_words);
        if t.filtered_words.is_empty() {
            return Err("no content words to score".into());
        }
        Ok((1.0 + positivity(&t, &self.lexicon)) / 2.0)
    }
}

/// Keeps stories scoring strictly above `threshold`, in order. Stories the
/// scorer fails on, or scores outside `[0, 1]`, are dropped with a warning.
pub fn filter_by_sentiment<T: AsRef<str>>(stories: Vec<T>, scorer: &dyn SentimentScorer, threshold: f64) -> Vec<T> {
    stories
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| match scorer.score(s.as_ref()) {
            Ok(v) if (0.0..=1.0).contains(&v) => (v > threshold).then_some(s),
            Ok(v) => {
                log::warn!("story {i}: sentiment score {v} outside [0, 1], excluded");
                None
            }
            Err(e) => {
                log::warn!("story {i}: sentiment scoring failed ({e}), excluded");
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Polarity;

    fn constant(v: f64) -> impl Fn(&str) -> Result<f64, ScoreError> + Send + Sync {
        move |_| Ok(v)
    }

    #[test]
    fn constant_scorers() {
        assert_eq!(filter_by_sentiment(vec!["a", "b"], &constant(1.0), 0.9), vec!["a", "b"]);
        assert!(filter_by_sentiment(vec!["a", "b"], &constant(0.5), 0.9).is_empty());
    }

    #[test]
    fn threshold_is_strict() {
        let scorer = |s: &str| -> Result<f64, ScoreError> { Ok(s.parse()?) };
        let kept = filter_by_sentiment(vec!["0.95", "0.9", "0.2", "oops", "1.5"], &scorer, 0.9);
        assert_eq!(kept, vec!["0.95"]);
    }

    #[test]
    fn lexicon_scorer_maps_polarity() {
        let lex = SentimentLexicon::from_senses([
            (
                "happy",
                Some('a'),
                Polarity {
                    positive: 0.75,
                    negative: 0.0,
                },
            ),
            (
                "sad",
                Some('a'),
                Polarity {
                    positive: 0.0,
                    negative: 0.75,
                },
            ),
        ]);
        let s = LexiconSentimentScorer::new(lex, StopWords::builtin());
        assert!((s.score("happy happy").unwrap() - 0.875).abs() < 1e-12);
        assert!((s.score("happy sad").unwrap() - 0.5).abs() < 1e-12);
        assert!(s.score("the of").is_err());
    }
}
