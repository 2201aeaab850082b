use serde::{Deserialize, Serialize};

use crate::text::TokenizedText;

/// Substituted for a mean whose denominator is zero.
pub const EMPTY_PENALTY: f64 = -10.0;

/// The two means that feed [`readability`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityBreakdown {
    /// Mean characters per word.
    pub word_chars: f64,
    /// Mean words per sentence.
    pub sent_words: f64,
}

impl ReadabilityBreakdown {
    pub fn of(t: &TokenizedText) -> Self {
        let words = t.words.len();
        let sentences = t.sentences.len();
        let word_chars = if words == 0 {
            EMPTY_PENALTY
        } else {
            let chars: usize = t.words.iter().map(|w| w.chars().count()).sum();
            chars as f64 / words as f64
        };
        let sent_words = if sentences == 0 {
            EMPTY_PENALTY
        } else {
            words as f64 / sentences as f64
        };
        Self { word_chars, sent_words }
    }

    pub fn score(&self) -> f64 {
        0.5 * self.word_chars + self.sent_words
    }
}

/// `0.5 * word_chars + sent_words`, with −10 standing in for either mean when
/// the text has no words or no sentences.
pub fn readability(t: &TokenizedText) -> f64 {
    ReadabilityBreakdown::of(t).score()
}
