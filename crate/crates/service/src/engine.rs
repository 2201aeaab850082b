//! The shared, read-only machinery behind the story API: generator, scoring
//! context, embedder and image index.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use taletailor::corpus::{build_frequent_words, read_jsonl};
use taletailor::generation::{Embedder, Generator, HashingEmbedder, LogitSource, NGramModel, RemoteProvider, EOS};
use taletailor::metrics::{FrequentWordSet, LogitPair, ScoringContext, SentimentLexicon, DEFAULT_FREQUENT_FRACTION};
use taletailor::rerank::RerankConfig;
use taletailor::retrieval::EmbeddingIndex;
use taletailor::text::StopWords;
use thiserror::Error;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_EMBED_DIM: usize = 256;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
}

fn load_err(path: &Path) -> impl Fn(String) -> EngineError + '_ {
    move |message| EngineError::Load {
        path: path.to_owned(),
        message,
    }
}

/// Training texts from a corpus file: the `sample` of every line of a
/// JSON-lines corpus, or the non-empty lines of a plain-text file.
pub fn load_corpus_texts(path: &Path) -> Result<Vec<String>, EngineError> {
    let err = load_err(path);
    if path.extension().is_some_and(|e| e == "jsonl") {
        let file = fs::File::open(path).map_err(|e| err(e.to_string()))?;
        let extracts = read_jsonl(BufReader::new(file)).map_err(|e| err(e.to_string()))?;
        return Ok(extracts.into_iter().map(|e| e.sample).collect());
    }
    let raw = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    Ok(raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// The built-in provider: an n-gram model of the corpus generates and acts as
/// the fine-tuned model; a unigram model of the same corpus is the preset
/// model; a hashing projector embeds text.
pub struct BuiltinProvider {
    pub finetuned: Arc<NGramModel>,
    pub preset: Arc<NGramModel>,
    pub embedder: Arc<HashingEmbedder>,
}

impl BuiltinProvider {
    pub fn train(texts: &[String], order: usize, embed_dim: usize) -> Result<Self, EngineError> {
        let finetuned = NGramModel::train_texts(texts, order).map_err(|e| EngineError::Config(e.to_string()))?;
        let preset = NGramModel::train_texts(texts, 1).map_err(|e| EngineError::Config(e.to_string()))?;
        if embed_dim == 0 {
            return Err(EngineError::Config("embedding dimension must be positive".into()));
        }
        Ok(Self {
            finetuned: Arc::new(finetuned),
            preset: Arc::new(preset),
            embedder: Arc::new(HashingEmbedder::new(embed_dim)),
        })
    }

    pub fn logit_pair(&self) -> LogitPair {
        LogitPair::new(self.preset.clone(), self.finetuned.clone())
    }
}

#[derive(Debug, Clone, Default)]
pub struct EngineConfig {
    /// Corpus for the built-in provider and, without `ctx_dir`, the
    /// frequent-word set.
    pub corpus: Option<PathBuf>,
    /// Remote provider; the built-in one is used when absent.
    pub provider_url: Option<String>,
    /// Directory with `lexicon.tsv`, `frequent_words.txt` and optionally
    /// `stopwords.txt`.
    pub ctx_dir: Option<PathBuf>,
    pub index: Option<PathBuf>,
    /// `id \t attribution` lines for the index.
    pub attribution: Option<PathBuf>,
    pub order: Option<usize>,
    pub embed_dim: Option<usize>,
    pub seed: u64,
}

pub struct Engine {
    pub generator: Arc<dyn Generator>,
    pub embedder: Arc<dyn Embedder>,
    pub scoring: Arc<ScoringContext>,
    pub rerank: RerankConfig,
    index: RwLock<Arc<EmbeddingIndex>>,
}

impl Engine {
    pub fn new(
        generator: Arc<dyn Generator>,
        embedder: Arc<dyn Embedder>,
        scoring: ScoringContext,
        index: EmbeddingIndex,
        rerank: RerankConfig,
    ) -> Self {
        Self {
            generator,
            embedder,
            scoring: Arc::new(scoring),
            rerank,
            index: RwLock::new(Arc::new(index)),
        }
    }

    pub fn from_config(cfg: &EngineConfig) -> Result<Self, EngineError> {
        let texts = match &cfg.corpus {
            Some(p) => Some(load_corpus_texts(p)?),
            None => None,
        };
        let index = match &cfg.index {
            Some(p) => {
                let mut idx = EmbeddingIndex::load(p).map_err(|e| load_err(p)(e.to_string()))?;
                if let Some(a) = &cfg.attribution {
                    let f = fs::File::open(a).map_err(|e| load_err(a)(e.to_string()))?;
                    idx.read_attribution(BufReader::new(f))
                        .map_err(|e| load_err(a)(e.to_string()))?;
                }
                idx
            }
            None => EmbeddingIndex::new(cfg.embed_dim.unwrap_or(DEFAULT_EMBED_DIM)).expect("positive dimension"),
        };

        let mut scoring = match &cfg.ctx_dir {
            Some(dir) => ScoringContext::load_dir(dir).map_err(|e| load_err(dir)(e.to_string()))?,
            None => {
                let frequent = match &texts {
                    Some(t) => {
                        let plain: Vec<String> = t.iter().map(|s| s.replace(EOS, " ")).collect();
                        build_frequent_words(&plain, DEFAULT_FREQUENT_FRACTION, &StopWords::builtin())
                            .map_err(|e| EngineError::Config(e.to_string()))?
                    }
                    None => FrequentWordSet::new(Vec::<String>::new(), DEFAULT_FREQUENT_FRACTION),
                };
                log::warn!("no scoring context directory: positivity uses an empty lexicon");
                ScoringContext::new(SentimentLexicon::default(), frequent)
            }
        };

        let (generator, embedder): (Arc<dyn Generator>, Arc<dyn Embedder>) = match &cfg.provider_url {
            Some(url) => {
                let remote = RemoteProvider::new(url.clone());
                let preset: Arc<dyn LogitSource> = Arc::new(remote.logit_source("preset"));
                let finetuned: Arc<dyn LogitSource> = Arc::new(remote.logit_source("finetuned"));
                scoring = scoring.with_logits(LogitPair::new(preset, finetuned));
                let remote = Arc::new(remote);
                (remote.clone(), remote)
            }
            None => {
                let texts =
                    texts.ok_or_else(|| EngineError::Config("either a corpus or a provider URL is required".into()))?;
                let dim = cfg.embed_dim.unwrap_or(index.dim());
                if dim != index.dim() {
                    return Err(EngineError::Config(format!(
                        "embedding dimension {dim} does not match the index dimension {}",
                        index.dim()
                    )));
                }
                let builtin = BuiltinProvider::train(&texts, cfg.order.unwrap_or(DEFAULT_ORDER), dim)?;
                scoring = scoring.with_logits(builtin.logit_pair());
                (builtin.finetuned.clone(), builtin.embedder.clone())
            }
        };
        let rerank = RerankConfig {
            generator: taletailor::generation::GeneratorConfig::default().with_seed(cfg.seed),
            ..RerankConfig::default()
        };
        Ok(Self::new(generator, embedder, scoring, index, rerank))
    }

    pub fn index(&self) -> Arc<EmbeddingIndex> {
        self.index.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Replaces the index; queries already running keep the old one.
    pub fn swap_index(&self, index: EmbeddingIndex) -> Arc<EmbeddingIndex> {
        let mut guard = self.index.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, Arc::new(index))
    }
}
