use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::keywords::content_words;
use super::CorpusError;
use crate::metrics::FrequentWordSet;
use crate::text::{split_sentences, words, StopWords};

/// Number of words kept out of a vocabulary of `vocabulary` for `fraction`:
/// the ceiling of the product, ignoring floating-point noise in the last
/// place (0.07 · 100 is 7, not 8).
pub fn frequent_word_count(fraction: f64, vocabulary: usize) -> usize {
    let exact = fraction * vocabulary as f64;
    ((exact - 1e-9).ceil().max(0.0) as usize).min(vocabulary)
}

/// The most frequent `⌈fraction · |V|⌉` content words of `corpus`, ties
/// broken alphabetically.
pub fn build_frequent_words<S: AsRef<str>>(
    corpus: &[S],
    fraction: f64,
    stop_words: &StopWords,
) -> Result<FrequentWordSet, CorpusError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for doc in corpus {
        for w in content_words(doc.as_ref(), stop_words) {
            *counts.entry(w).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n = frequent_word_count(fraction, ranked.len());
    Ok(FrequentWordSet::new(
        ranked.into_iter().take(n).map(|(w, _)| w),
        fraction,
    ))
}

/// Sentence and word-frequency statistics of a corpus. Words are lowercased
/// word tokens, stop words included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Sentences per document, in input order.
    pub sentence_counts: Vec<usize>,
    /// Sentence count → number of documents.
    pub sentence_histogram: BTreeMap<usize, usize>,
    pub frequencies: BTreeMap<String, u64>,
    pub total_tokens: u64,
    /// Share of the vocabulary occurring exactly once.
    pub hapax_fraction: f64,
}

impl CorpusStats {
    pub fn documents(&self) -> usize {
        self.sentence_counts.len()
    }

    pub fn vocabulary(&self) -> usize {
        self.frequencies.len()
    }

    pub fn mean_sentences(&self) -> f64 {
        if self.sentence_counts.is_empty() {
            return 0.0;
        }
        self.sentence_counts.iter().sum::<usize>() as f64 / self.sentence_counts.len() as f64
    }

    /// Words by descending count, ties alphabetical.
    pub fn ranked_words(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.frequencies.iter().map(|(w, &n)| (w.as_str(), n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Long-format table `section \t key \t value`: a summary, the sentence
    /// histogram and the ranked frequency table.
    pub fn write_tsv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "section\tkey\tvalue")?;
        writeln!(w, "summary\tdocuments\t{}", self.documents())?;
        writeln!(w, "summary\ttokens\t{}", self.total_tokens)?;
        writeln!(w, "summary\tvocabulary\t{}", self.vocabulary())?;
        writeln!(w, "summary\thapax_fraction\t{:.6}", self.hapax_fraction)?;
        writeln!(w, "summary\tmean_sentences\t{:.6}", self.mean_sentences())?;
        for (k, v) in &self.sentence_histogram {
            writeln!(w, "sentences\t{k}\t{v}")?;
        }
        for (word, n) in self.ranked_words() {
            writeln!(w, "frequency\t{word}\t{n}")?;
        }
        Ok(())
    }

    /// `word \t count`, ranked.
    pub fn write_frequency_tsv(&self, mut w: impl Write) -> io::Result<()> {
        for (word, n) in self.ranked_words() {
            writeln!(w, "{word}\t{n}")?;
        }
        Ok(())
    }
}

pub fn corpus_stats<S: AsRef<str>>(corpus: &[S]) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut sentence_counts = Vec::with_capacity(corpus.len());
    let mut sentence_histogram = BTreeMap::new();
    let mut frequencies: BTreeMap<String, u64> = BTreeMap::new();
    let mut total_tokens = 0;
    for doc in corpus {
        let doc = doc.as_ref();
        let n = split_sentences(doc).len();
        sentence_counts.push(n);
        *sentence_histogram.entry(n).or_default() += 1;
        for w in words(doc) {
            *frequencies.entry(w.to_lowercase()).or_default() += 1;
            total_tokens += 1;
        }
    }
    let hapax = frequencies.values().filter(|&&n| n == 1).count();
    let hapax_fraction = if frequencies.is_empty() {
        0.0
    } else {
        hapax as f64 / frequencies.len() as f64
    };
    Ok(CorpusStats {
        sentence_counts,
        sentence_histogram,
        frequencies,
        total_tokens,
        hapax_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_arithmetic() {
        assert_eq!(frequent_word_count(0.07, 100), 7);
        assert_eq!(frequent_word_count(0.07, 101), 8);
        assert_eq!(frequent_word_count(0.07, 1), 1);
        assert_eq!(frequent_word_count(1.0, 13), 13);
    }

    #[test]
    fn frequent_words() {
        let corpus: Vec<String> = (0..100).map(|i| format!("dragon dragon word{i}")).collect();
        let set = build_frequent_words(&corpus, 0.07, &StopWords::builtin()).unwrap();
        // 101 content words → 8.
        assert_eq!(set.len(), 8);
        assert!(set.contains("dragon"));
        assert!(set.contains("word0") && set.contains("word14") && !set.contains("word2"));
        let all = build_frequent_words(&corpus, 1.0, &StopWords::builtin()).unwrap();
        assert_eq!(all.len(), 101);
        assert!(matches!(
            build_frequent_words(&["the a"], 0.5, &StopWords::builtin()),
            Err(CorpusError::EmptyCorpus)
        ));
        assert!(matches!(
            build_frequent_words(&["x"], 0.0, &StopWords::builtin()),
            Err(CorpusError::InvalidFraction(_))
        ));
    }

    #[test]
    fn single_sentence_story() {
        let s = corpus_stats(&["The end."]).unwrap();
        assert_eq!(s.sentence_histogram, BTreeMap::from([(1, 1)]));
        assert_eq!(s.total_tokens, 2);
        assert_eq!(s.hapax_fraction, 1.0);
    }

    #[test]
    fn frequencies_sum_to_tokens() {
        let s = corpus_stats(&["A cat. A dog! Hi", "cat cat"]).unwrap();
        assert_eq!(s.frequencies.values().sum::<u64>(), s.total_tokens);
        assert_eq!(s.sentence_counts, vec![3, 1]);
        assert_eq!(s.frequencies["cat"], 3);
        assert_eq!(s.ranked_words()[0], ("cat", 3));
        let from_hist: usize = s.sentence_histogram.iter().map(|(k, v)| k * v).sum();
        assert_eq!(from_hist as f64 / s.documents() as f64, s.mean_sentences());
    }
}
