//! Corpus preparation: cleaning, 500-token extracts, keyword prompts,
//! sentiment filtering, the frequent-word set and corpus statistics.
//!
//! Cleaned text never contains `<`, `|` or `>`, so the [`EOS`] sentinel can
//! only appear where [`merge_prompt_story`] puts it.

mod clean;
mod keywords;
mod segment;
mod sentiment;
mod stats;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::EOS;
use crate::text::StopWords;

pub use clean::{
    clean_text, normalize_whitespace, remove_offensive, strip_gutenberg, strip_special, trim_words, OffensiveWords,
    DEFAULT_MAX_WORDS,
};
pub use keywords::{keyword_prompt, keyword_weights, DocumentFrequencies, DEFAULT_KEYWORDS};
pub use segment::{segment_extracts, token_count, DEFAULT_EXTRACT_TOKENS};
pub use sentiment::{
    filter_by_sentiment, LexiconSentimentScorer, ScoreError, SentimentScorer, DEFAULT_SENTIMENT_THRESHOLD,
};
pub use stats::{build_frequent_words, corpus_stats, frequent_word_count, CorpusStats};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("extract {index}: {}", problems.join("; "))]
    InvalidExtract { index: usize, problems: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reddit,
    Gutenberg,
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reddit" => Ok(Self::Reddit),
            "gutenberg" => Ok(Self::Gutenberg),
            other => Err(format!("unknown source format {other:?}")),
        }
    }
}

/// A story as loaded, before cleaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStory {
    /// File name, with `:line` for rows of a prompt TSV.
    pub id: String,
    pub source: Source,
    pub prompt: Option<String>,
    pub body: String,
}

/// One training sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanExtract {
    pub story: String,
    pub index: usize,
    pub source: Source,
    pub prompt: String,
    pub body: String,
    pub token_count: usize,
    /// `prompt <|eos|> body <|eos|>`.
    pub sample: String,
}

impl CleanExtract {
    /// Lists every broken invariant; empty when the extract is valid.
    pub fn problems(&self, offensive: &OffensiveWords, limit: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (name, text) in [("prompt", &self.prompt), ("body", &self.body)] {
            if text.chars().any(|c| c.is_control() && c != '\n') {
                out.push(format!("{name} contains control characters"));
            }
            if let Some(w) = crate::text::words(text).into_iter().find(|w| offensive.contains(w)) {
                out.push(format!("{name} contains listed word {w:?}"));
            }
            if text.contains(EOS) {
                out.push(format!("{name} contains the end-of-sentence sentinel"));
            }
        }
        if self.body.trim().is_empty() {
            out.push("body is empty".into());
        }
        let n = token_count(&self.body);
        if n != self.token_count {
            out.push(format!("token_count {} but body has {n} tokens", self.token_count));
        }
        if n > limit {
            out.push(format!("{n} tokens exceed the limit of {limit}"));
        }
        if self.sample != merge_prompt_story(&self.prompt, &self.body) {
            out.push("sample is not the merged prompt and body".into());
        }
        out
    }
}

/// `prompt <|eos|> story <|eos|>`; an empty prompt is omitted.
pub fn merge_prompt_story(prompt: &str, story: &str) -> String {
    if prompt.is_empty() {
        format!("{EOS} {story} {EOS}")
    } else {
        format!("{prompt} {EOS} {story} {EOS}")
    }
}

/// Inverse of [`merge_prompt_story`] for prompts and stories without
/// surrounding whitespace.
pub fn split_sample(sample: &str) -> Option<(&str, &str)> {
    let inner = sample.strip_suffix(EOS)?;
    let (prompt, story) = inner.split_once(EOS)?;
    let prompt = prompt.strip_suffix(' ').unwrap_or(prompt);
    let story = story.strip_prefix(' ').unwrap_or(story);
    Some((prompt, story.strip_suffix(' ').unwrap_or(story)))
}

/// Settings of [`ingest`].
pub struct IngestConfig<'a> {
    pub max_words: usize,
    pub extract_tokens: usize,
    pub keywords: usize,
    pub offensive: OffensiveWords,
    pub stop_words: StopWords,
    /// Stories must score strictly above the threshold to be kept.
    pub sentiment: Option<(&'a dyn SentimentScorer, f64)>,
}

impl Default for IngestConfig<'_> {
    fn default() -> Self {
        Self {
            max_words: DEFAULT_MAX_WORDS,
            extract_tokens: DEFAULT_EXTRACT_TOKENS,
            keywords: DEFAULT_KEYWORDS,
            offensive: OffensiveWords::empty(),
            stop_words: StopWords::builtin(),
            sentiment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct IngestReport {
    pub stories_loaded: usize,
    pub stories_empty: usize,
    pub stories_filtered: usize,
    pub extracts: usize,
}

/// Cleans, filters and segments `stories` and prefixes each extract with a
/// prompt: the story's own prompt when it has one, otherwise keywords of the
/// extract weighted against all extracts.
pub fn ingest(stories: &[RawStory], config: &IngestConfig<'_>) -> (Vec<CleanExtract>, IngestReport) {
    let mut report = IngestReport {
        stories_loaded: stories.len(),
        ..Default::default()
    };
    let cleaned: Vec<(&RawStory, String, String)> = stories
        .par_iter()
        .map(|s| {
            let prompt = s
                .prompt
                .as_deref()
                .map(|p| {
                    clean_text(
                        &strip_prompt_tags(p).replace('\n', " "),
                        &config.offensive,
                        config.max_words,
                    )
                })
                .unwrap_or_default();
            (s, prompt, clean_text(&s.body, &config.offensive, config.max_words))
        })
        .collect();
    let mut kept = Vec::new();
    for (story, prompt, body) in cleaned {
        if body.is_empty() {
            report.stories_empty += 1;
            continue;
        }
        kept.push((story, prompt, body));
    }
    if let Some((scorer, threshold)) = config.sentiment {
        let before = kept.len();
        kept = filter_by_sentiment(kept.into_iter().map(Scored).collect(), scorer, threshold)
            .into_iter()
            .map(|s| s.0)
            .collect();
        report.stories_filtered = before - kept.len();
    }

    let mut pieces: Vec<(&RawStory, &str, usize, &str)> = Vec::new();
    for (story, prompt, body) in &kept {
        for (i, e) in segment_extracts(body, config.extract_tokens).into_iter().enumerate() {
            pieces.push((story, prompt.as_str(), i, e));
        }
    }
    let bodies: Vec<&str> = pieces.iter().map(|p| p.3).collect();
    let df = DocumentFrequencies::from_documents(&bodies, &config.stop_words);
    let extracts: Vec<CleanExtract> = pieces
        .par_iter()
        .map(|&(story, prompt, index, body)| {
            let prompt = if prompt.is_empty() {
                keyword_prompt(body, &df, config.keywords, &config.stop_words)
            } else {
                prompt.to_owned()
            };
            CleanExtract {
                story: story.id.clone(),
                index,
                source: story.source,
                sample: merge_prompt_story(&prompt, body),
                prompt,
                body: body.to_owned(),
                token_count: token_count(body),
            }
        })
        .collect();
    report.extracts = extracts.len();
    (extracts, report)
}

struct Scored<'a>((&'a RawStory, String, String));

impl AsRef<str> for Scored<'_> {
    fn as_ref(&self) -> &str {
        &self.0 .2
    }
}

/// Drops leading `[WP]`-style tags from a prompt.
fn strip_prompt_tags(prompt: &str) -> &str {
    let mut p = prompt.trim_start();
    while let Some(rest) = p.strip_prefix('[') {
        match rest.find(']') {
            Some(end) if end <= 4 => p = rest[end + 1..].trim_start(),
            _ => break,
        }
    }
    p
}

/// Loads every story under `dir` in file-name order.
///
/// Gutenberg: each `.txt` file is one story, with the license header and
/// footer removed. Reddit: `.txt` files are one story each, and each line of
/// a `.tsv` file is `prompt \t story`, with `<newline>` markers turned back
/// into line breaks.
pub fn load_stories(dir: impl AsRef<Path>, source: Source) -> Result<Vec<RawStory>, CorpusError> {
    let dir = dir.as_ref();
    let file_err = |path: &Path| {
        let path = path.to_owned();
        move |source| CorpusError::File { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(file_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()
        .map_err(file_err(dir))?;
    paths.retain(|p| p.is_file());
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
        match (source, ext) {
            (_, "txt") => {
                let raw = fs::read_to_string(&path).map_err(file_err(&path))?;
                let body = match source {
                    Source::Gutenberg => strip_gutenberg(&raw).to_owned(),
                    Source::Reddit => raw.replace("<newline>", "\n"),
                };
                out.push(RawStory {
                    id: name,
                    source,
                    prompt: None,
                    body,
                });
            }
            (Source::Reddit, "tsv") => {
                let raw = fs::read_to_string(&path).map_err(file_err(&path))?;
                for (i, line) in raw.lines().enumerate() {
                    let Some((prompt, body)) = line.split_once('\t') else {
                        if !line.trim().is_empty() {
                            log::warn!("{name}:{}: no tab, skipped", i + 1);
                        }
                        continue;
                    };
                    out.push(RawStory {
                        id: format!("{name}:{}", i + 1),
                        source,
                        prompt: Some(prompt.replace("<newline>", " ")),
                        body: body.replace("<newline>", "\n"),
                    });
                }
            }
            _ => log::debug!("skipping {}", path.display()),
        }
    }
    Ok(out)
}

pub fn write_jsonl(extracts: &[CleanExtract], mut w: impl Write) -> io::Result<()> {
    for e in extracts {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl(r: impl BufRead) -> Result<Vec<CleanExtract>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

/// Checks every extract, failing on the first invalid one.
pub fn validate_extracts(
    extracts: &[CleanExtract],
    offensive: &OffensiveWords,
    limit: usize,
) -> Result<(), CorpusError> {
    for (index, e) in extracts.iter().enumerate() {
        let problems = e.problems(offensive, limit);
        if !problems.is_empty() {
            return Err(CorpusError::InvalidExtract { index, problems });
        }
    }
    Ok(())
}
