use std::collections::HashSet;
use std::io::{self, BufRead};
use std::path::Path;

use crate::text::TokenizedText;

/// Fraction of the corpus vocabulary kept as frequent words by default.
pub const DEFAULT_FREQUENT_FRACTION: f64 = 0.07;

/// The most frequent content words of a reference corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentWordSet {
    words: HashSet<String>,
    source_fraction: f64,
}

impl FrequentWordSet {
    pub fn new<I, S>(words: I, source_fraction: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
            source_fraction,
        }
    }

    /// One word per line. The fraction is not recorded in the file and is
    /// reported as the default.
    pub fn from_reader(reader: impl BufRead) -> io::Result<Self> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                words.insert(w.to_lowercase());
            }
        }
        Ok(Self {
            words,
            source_fraction: DEFAULT_FREQUENT_FRACTION,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::from_reader(io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source_fraction(&self) -> f64 {
        self.source_fraction
    }

    /// Words in alphabetical order.
    pub fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

/// Unique content words over total content words; 0 without content words.
pub fn diversity(t: &TokenizedText) -> f64 {
    if t.filtered_words.is_empty() {
        return 0.0;
    }
    let unique: HashSet<&str> = t.filtered_words.iter().map(String::as_str).collect();
    unique.len() as f64 / t.filtered_words.len() as f64
}

/// Number of distinct content words that are frequent words.
///
/// This is a count, not a fraction: `|set(filtered_words) ∩ freq_words|`.
pub fn simplicity(t: &TokenizedText, freq: &FrequentWordSet) -> f64 {
    let unique: HashSet<&str> = t.filtered_words.iter().map(String::as_str).collect();
    unique.iter().filter(|w| freq.words.contains(**w)).count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, StopWords};

    fn filtered(words: &[&str]) -> TokenizedText {
        TokenizedText {
            raw: words.join(" "),
            sentences: vec![words.join(" ")],
            words: words.iter().map(|s| s.to_string()).collect(),
            filtered_words: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn diversity_cases() {
        assert_eq!(diversity(&filtered(&["cat", "dog", "owl"])), 1.0);
        assert!((diversity(&filtered(&["cat", "cat", "cat"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(diversity(&tokenize("at in is", &StopWords::builtin())), 0.0);
    }

    #[test]
    fn simplicity_cases() {
        let freq = FrequentWordSet::new(["old", "king", "little"], 0.07);
        assert_eq!(simplicity(&filtered(&["king", "dragon"]), &freq), 1.0);
        assert_eq!(simplicity(&filtered(&["sword", "dragon"]), &freq), 0.0);
        let freq = FrequentWordSet::new(["a1", "b1", "c1", "d1", "e1"], 0.07);
        assert_eq!(simplicity(&filtered(&["a1", "b1", "c1", "d1", "a1"]), &freq), 4.0);
    }

    #[test]
    fn membership_is_case_insensitive() {
        let freq = FrequentWordSet::new(["King"], 0.07);
        assert!(freq.contains("KING"));
        assert!(freq.contains("king"));
    }

    #[test]
    fn reads_one_word_per_line() {
        let f = FrequentWordSet::from_reader("king\n\nQueen\n# note\n".as_bytes()).unwrap();
        assert_eq!(f.sorted(), vec!["king", "queen"]);
    }
}
