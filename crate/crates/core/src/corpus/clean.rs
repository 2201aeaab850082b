use std::collections::HashSet;
use std::io::{self, BufRead};
use std::path::Path;

use crate::text::words;

pub const DEFAULT_MAX_WORDS: usize = 1000;

/// Case-insensitive list of words removed during cleaning. No list ships with
/// the crate; load one from a file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OffensiveWords {
    words: HashSet<String>,
}

impl OffensiveWords {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One word per line; `#` starts a comment line.
    pub fn from_reader(reader: impl BufRead) -> io::Result<Self> {
        let lines = reader.lines().collect::<io::Result<Vec<_>>>()?;
        Ok(Self::new(lines.iter().filter(|l| !l.trim_start().starts_with('#'))))
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
}

const KEPT_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '\'', '"', '(', ')', '-'];

/// Replaces typographic variants with ASCII and drops every character that is
/// not a letter, digit, standard punctuation or whitespace. Carriage returns
/// become newlines and other whitespace becomes a space.
pub fn strip_special(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '\u{2018}' | '\u{2019}' | '\u{201a}' | '\u{2032}' => out.push('\''),
            '\u{201c}' | '\u{201d}' | '\u{201e}' | '\u{2033}' => out.push('"'),
            '\u{2010}'..='\u{2015}' => out.push('-'),
            '\u{2026}' => out.push_str("..."),
            '\n' | '\r' => out.push('\n'),
            c if c.is_whitespace() => out.push(' '),
            c if c.is_alphanumeric() || KEPT_PUNCTUATION.contains(&c) => out.push(c),
            _ => {}
        }
    }
    out
}

/// Removes listed words, matched whole-word and case-insensitively.
pub fn remove_offensive(text: &str, offensive: &OffensiveWords) -> String {
    if offensive.is_empty() {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for w in words(text) {
        if offensive.contains(w) {
            let start = w.as_ptr() as usize - text.as_ptr() as usize;
            out.push_str(&text[last..start]);
            last = start + w.len();
        }
    }
    out.push_str(&text[last..]);
    out
}

/// Collapses runs of spaces, trims every line and drops blank lines.
pub fn normalize_whitespace(text: &str) -> String {
    let lines: Vec<String> = text
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect();
    lines.join("\n")
}

/// Cuts `text` after its `max_words`-th whitespace-delimited word.
pub fn trim_words(text: &str, max_words: usize) -> &str {
    if max_words == 0 {
        return "";
    }
    let mut count = 0;
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_word && count == max_words {
                return &text[..i];
            }
            in_word = false;
        } else if !in_word {
            in_word = true;
            count += 1;
        }
    }
    text
}

/// Strips special characters, removes offensive words, normalizes whitespace
/// and keeps at most `max_words` words. Cleaning is idempotent.
pub fn clean_text(raw: &str, offensive: &OffensiveWords, max_words: usize) -> String {
    let stripped = strip_special(raw);
    let kept = remove_offensive(&stripped, offensive);
    let normalized = normalize_whitespace(&kept);
    trim_words(&normalized, max_words).to_owned()
}

/// Keeps only the text between the Project Gutenberg START and END markers.
/// Text without markers is returned whole.
pub fn strip_gutenberg(raw: &str) -> &str {
    let is_marker = |line: &str, kind: &str| {
        let l = line.trim_start_matches('*').trim_start().to_ascii_uppercase();
        line.trim_start().starts_with("***") && l.starts_with(kind) && l.contains("PROJECT GUTENBERG")
    };
    let mut start = 0;
    let mut end = raw.len();
    let mut offset = 0;
    let mut seen_start = false;
    for line in raw.split_inclusive('\n') {
        if !seen_start && is_marker(line, "START OF") {
            start = offset + line.len();
            seen_start = true;
        } else if is_marker(line, "END OF") {
            end = offset;
            break;
        }
        offset += line.len();
    }
    if start > end {
        return "";
    }
    &raw[start..end]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_characters_and_blank_lines() {
        let out = clean_text("he said \x07 hello\n\n\nworld", &OffensiveWords::empty(), 1000);
        assert_eq!(out, "he said hello\nworld");
    }

    #[test]
    fn trims_to_word_limit() {
        let text: Vec<String> = (0..1500).map(|i| format!("w{i}")).collect();
        let out = clean_text(&text.join(" "), &OffensiveWords::empty(), 1000);
        assert_eq!(out, text[..1000].join(" "));
        assert_eq!(trim_words("a b\nc d", 3), "a b\nc");
        assert_eq!(trim_words("a b", 0), "");
        assert_eq!(trim_words("a b ", 5), "a b ");
    }

    #[test]
    fn offensive_words_are_removed_whole_word() {
        let list = OffensiveWords::new(["darn", "Heck"]);
        assert_eq!(clean_text("Darn it, heck! darned", &list, 1000), "it, ! darned");
        assert_eq!(clean_text("darn HECK\n darn", &list, 1000), "");
    }

    #[test]
    fn typographic_characters() {
        assert_eq!(
            strip_special("\u{201c}Don\u{2019}t\u{201d} \u{2014} wait\u{2026}"),
            "\"Don't\" - wait..."
        );
        assert_eq!(strip_special("a*b_c <d> #1\r\n"), "abc d 1\n\n");
    }

    #[test]
    fn idempotent_on_examples() {
        let list = OffensiveWords::new(["bad"]);
        for s in [
            "x-bad y",
            "a- bad -b",
            "bad'bad bad",
            " \t\n\u{a0}bad\u{2019}s …",
            "bad",
        ] {
            let once = clean_text(s, &list, 3);
            assert_eq!(clean_text(&once, &list, 3), once, "{s:?}");
        }
    }

    #[test]
    fn gutenberg_markers() {
        let raw = "Title: Tales\n*** START OF THE PROJECT GUTENBERG EBOOK TALES ***\nOnce upon a time.\n*** END OF THE PROJECT GUTENBERG EBOOK TALES ***\nLicense text\n";
        assert_eq!(strip_gutenberg(raw), "Once upon a time.\n");
        assert_eq!(strip_gutenberg("no markers"), "no markers");
    }
}
