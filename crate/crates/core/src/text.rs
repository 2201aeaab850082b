//! Sentence and word tokenization shared by the metrics and the corpus tools.

use std::collections::HashSet;
use std::io::{self, BufRead};
use std::path::Path;

use serde::{Deserialize, Serialize};

const BUILTIN_STOP_WORDS: &str = include_str!("../data/stopwords.txt");

/// A case-insensitive stop-word list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    /// The fixed English list shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_lines(BUILTIN_STOP_WORDS.lines())
    }

    pub fn empty() -> Self {
        Self { words: HashSet::new() }
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let words = lines
            .into_iter()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_reader(reader: impl BufRead) -> io::Result<Self> {
        let lines = reader.lines().collect::<io::Result<Vec<_>>>()?;
        Ok(Self::from_lines(lines.iter().map(String::as_str)))
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(io::BufReader::new(file))
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::builtin()
    }
}

/// A text split into sentences, words and content words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub raw: String,
    pub sentences: Vec<String>,
    /// Word tokens in their original case. Punctuation is not a word.
    pub words: Vec<String>,
    /// Lowercased words with stop words removed.
    pub filtered_words: Vec<String>,
}

impl TokenizedText {
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }
}

/// Splits `raw` into sentences and words and removes stop words.
pub fn tokenize(raw: &str, stop_words: &StopWords) -> TokenizedText {
    let sentences = split_sentences(raw).into_iter().map(str::to_owned).collect();
    let words: Vec<String> = words(raw).into_iter().map(str::to_owned).collect();
    let filtered_words = words
        .iter()
        .map(|w| w.to_lowercase())
        .filter(|w| !stop_words.contains(w))
        .collect();
    TokenizedText {
        raw: raw.to_owned(),
        sentences,
        words,
        filtered_words,
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Sentence slices of `raw`, trimmed. A sentence ends at a run of `.`, `!` or
/// `?` (plus closing quotes or brackets) followed by whitespace or the end of
/// the text.
pub fn split_sentences(raw: &str) -> Vec<&str> {
    sentence_spans(raw)
        .into_iter()
        .map(|(start, end)| &raw[start..end])
        .collect()
}

/// Byte ranges of the trimmed sentences of `raw`.
pub fn sentence_spans(raw: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut chars = raw.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminal(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, n)) = chars.peek() {
            if is_terminal(n) || is_closing(n) {
                end = j + n.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        let at_boundary = chars.peek().map_or(true, |&(_, n)| n.is_whitespace());
        if at_boundary {
            push_trimmed(raw, start, end, &mut spans);
            start = end;
        }
    }
    push_trimmed(raw, start, raw.len(), &mut spans);
    spans
}

fn push_trimmed(raw: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let piece = &raw[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '-' | '\u{2019}')
}

/// Word tokens of `raw`: runs of letters and digits, joined across single
/// internal apostrophes or hyphens ("don't", "well-known").
pub fn words(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_end = 0;
    let mut chars = raw.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
            }
            last_end = i + c.len_utf8();
            continue;
        }
        if let Some(s) = start {
            let joins = is_joiner(c) && chars.peek().is_some_and(|&(_, n)| is_word_char(n));
            if joins {
                continue;
            }
            out.push(&raw[s..last_end]);
            start = None;
        }
    }
    if let Some(s) = start {
        out.push(&raw[s..last_end]);
    }
    out
}
