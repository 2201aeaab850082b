use std::collections::{BTreeMap, HashMap, HashSet};

use crate::text::{words, StopWords};

pub const DEFAULT_KEYWORDS: usize = 5;

/// Content words of `text`, lowercased.
pub(crate) fn content_words(text: &str, stop_words: &StopWords) -> Vec<String> {
    words(text)
        .into_iter()
        .map(str::to_lowercase)
        .filter(|w| !stop_words.contains(w))
        .collect()
}

/// Document frequencies of content words over a corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentFrequencies {
    documents: usize,
    df: HashMap<String, usize>,
}

impl DocumentFrequencies {
    pub fn from_documents<S: AsRef<str>>(docs: &[S], stop_words: &StopWords) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let unique: HashSet<String> = content_words(doc.as_ref(), stop_words).into_iter().collect();
            for w in unique {
                *df.entry(w).or_default() += 1;
            }
        }
        Self {
            documents: docs.len(),
            df,
        }
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn df(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// `ln(N / max(df, 1)) + 1`; a word missing from the corpus counts as
    /// appearing in one document.
    pub fn idf(&self, word: &str) -> f64 {
        let n = self.documents.max(1) as f64;
        (n / self.df(word).max(1) as f64).ln() + 1.0
    }
}

/// Content words of `extract` weighted by term frequency × idf, highest
/// first, ties alphabetical.
pub fn keyword_weights(extract: &str, corpus: &DocumentFrequencies, stop_words: &StopWords) -> Vec<(String, f64)> {
    let mut tf: BTreeMap<String, usize> = BTreeMap::new();
    for w in content_words(extract, stop_words) {
        *tf.entry(w).or_default() += 1;
    }
    let mut weighted: Vec<(String, f64)> = tf
        .into_iter()
        .map(|(w, n)| {
            let weight = n as f64 * corpus.idf(&w);
            (w, weight)
        })
        .collect();
    weighted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    weighted
}

/// The `k` heaviest keywords of `extract`, space separated. Empty when the
/// extract has no content words.
pub fn keyword_prompt(extract: &str, corpus: &DocumentFrequencies, k: usize, stop_words: &StopWords) -> String {
    keyword_weights(extract, corpus, stop_words)
        .into_iter()
        .take(k)
        .map(|(w, _)| w)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rare_repeated_words_lead() {
        let docs = [
            "The dragon circled the castle. The dragon roared at the castle gate and the king.",
            "The king walked to the market with the queen.",
            "A king and a queen lived by the river.",
        ];
        let sw = StopWords::builtin();
        let df = DocumentFrequencies::from_documents(&docs, &sw);
        let prompt = keyword_prompt(docs[0], &df, 3, &sw);
        assert!(
            prompt.starts_with("castle dragon") || prompt.starts_with("dragon castle"),
            "{prompt}"
        );
        // Equal tf and df: alphabetical.
        assert!(prompt.starts_with("castle dragon"));
        assert_eq!(keyword_prompt(docs[0], &df, 3, &sw), prompt);
    }

    #[test]
    fn k_larger_than_vocabulary() {
        let sw = StopWords::builtin();
        let df = DocumentFrequencies::from_documents(&["red fox"], &sw);
        assert_eq!(keyword_prompt("red fox", &df, 10, &sw), "fox red");
        assert_eq!(keyword_prompt("the and of", &df, 10, &sw), "");
    }
}
