//! SentiWordNet-style lexicon and the positivity metric.

use std::collections::HashMap;
use std::io::{self, BufRead};
use std::path::Path;

use thiserror::Error;

use crate::text::TokenizedText;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Positive and negative polarity of a word, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Polarity {
    pub positive: f64,
    pub negative: f64,
}

impl Polarity {
    pub fn net(&self) -> f64 {
        self.positive - self.negative
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    positive: f64,
    negative: f64,
    senses: u32,
}

impl Accumulator {
    fn add(&mut self, p: Polarity) {
        self.positive += p.positive;
        self.negative += p.negative;
        self.senses += 1;
    }

    fn mean(&self) -> Polarity {
        let n = f64::from(self.senses.max(1));
        Polarity {
            positive: self.positive / n,
            negative: self.negative / n,
        }
    }
}

/// Word polarity table. Words with several senses carry the mean over senses.
#[derive(Debug, Clone, Default)]
pub struct SentimentLexicon {
    by_pos: HashMap<(String, char), Polarity>,
    by_word: HashMap<String, Polarity>,
}

impl SentimentLexicon {
    /// Builds a lexicon from `(word, part of speech, polarity)` senses.
    pub fn from_senses<I, S>(senses: I) -> Self
    where
        I: IntoIterator<Item = (S, Option<char>, Polarity)>,
        S: AsRef<str>,
    {
        let mut by_pos: HashMap<(String, char), Accumulator> = HashMap::new();
        let mut by_word: HashMap<String, Accumulator> = HashMap::new();
        for (word, pos, polarity) in senses {
            let word = word.as_ref().to_lowercase();
            if let Some(pos) = pos {
                by_pos.entry((word.clone(), pos)).or_default().add(polarity);
            }
            by_word.entry(word).or_default().add(polarity);
        }
        Self {
            by_pos: by_pos.into_iter().map(|(k, a)| (k, a.mean())).collect(),
            by_word: by_word.into_iter().map(|(k, a)| (k, a.mean())).collect(),
        }
    }

    /// Parses the SentiWordNet 3.0 layout:
    /// `POS \t ID \t PosScore \t NegScore \t SynsetTerms \t Gloss`.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, LexiconError> {
        let mut senses = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 5 {
                return Err(LexiconError::Malformed {
                    line: lineno,
                    reason: format!("expected at least 5 tab-separated columns, found {}", cols.len()),
                });
            }
            let pos = cols[0].trim().chars().next();
            let positive = parse_score(cols[2], lineno)?;
            let negative = parse_score(cols[3], lineno)?;
            for term in cols[4].split_whitespace() {
                let lemma = term.split('#').next().unwrap_or(term);
                if lemma.is_empty() {
                    continue;
                }
                senses.push((lemma.to_owned(), pos, Polarity { positive, negative }));
            }
        }
        Ok(Self::from_senses(senses))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(io::BufReader::new(file))
    }

    /// Mean polarity of `word` across all senses; neutral when absent.
    pub fn lookup(&self, word: &str) -> Polarity {
        self.by_word.get(&word.to_lowercase()).copied().unwrap_or_default()
    }

    pub fn lookup_pos(&self, word: &str, pos: char) -> Polarity {
        self.by_pos
            .get(&(word.to_lowercase(), pos))
            .copied()
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.by_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_word.is_empty()
    }
}

fn parse_score(s: &str, line: usize) -> Result<f64, LexiconError> {
    let v: f64 = s.trim().parse().map_err(|_| LexiconError::Malformed {
        line,
        reason: format!("score {s:?} is not a number"),
    })?;
    if !(0.0..=1.0).contains(&v) {
        return Err(LexiconError::Malformed {
            line,
            reason: format!("score {v} outside [0, 1]"),
        });
    }
    Ok(v)
}

/// Mean net polarity (positive − negative) over the content words; 0 for a
/// text without content words.
pub fn positivity(t: &TokenizedText, lex: &SentimentLexicon) -> f64 {
    if t.filtered_words.is_empty() {
        return 0.0;
    }
    let total: f64 = t.filtered_words.iter().map(|w| lex.lookup(w).net()).sum();
    total / t.filtered_words.len() as f64
}
