//! The work behind each CLI subcommand, callable without a process boundary.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use taletailor::corpus::{
    build_frequent_words, corpus_stats, ingest, load_stories, read_jsonl, write_jsonl, CleanExtract, CorpusStats,
    IngestConfig, IngestReport, LexiconSentimentScorer, OffensiveWords, Source, DEFAULT_EXTRACT_TOKENS,
    DEFAULT_KEYWORDS, DEFAULT_MAX_WORDS, DEFAULT_SENTIMENT_THRESHOLD,
};
use taletailor::generation::{Embedder, HashingEmbedder, RemoteProvider};
use taletailor::metrics::{ScoringContext, SentimentLexicon, DEFAULT_FREQUENT_FRACTION, FEATURE_NAMES};
use taletailor::rerank::rank_continuations;
use taletailor::retrieval::{EmbeddingIndex, RetrievalResult};
use taletailor::text::StopWords;
use thiserror::Error;

use crate::api::{self, AppState};
use crate::engine::{BuiltinProvider, Engine, EngineConfig, EngineError};
use crate::provider_server;
use crate::store::Store;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_owned(),
        source,
    }
}

fn invalid(e: impl std::fmt::Display) -> CommandError {
    CommandError::Invalid(e.to_string())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CommandError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn read_lines(path: &Path) -> Result<Vec<String>, CommandError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    BufReader::new(f)
        .lines()
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(path))
}

/// Scores the non-empty lines of `input` (as continuations of `context`) and
/// writes them best first as TSV: rank, total, the six raw features, text.
pub fn rank(input: &Path, ctx_dir: &Path, context: &str, out: impl Write) -> Result<usize, CommandError> {
    let ctx = ScoringContext::load_dir(ctx_dir).map_err(invalid)?;
    let lines: Vec<String> = read_lines(input)?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Err(CommandError::Invalid(format!("{}: no candidates", input.display())));
    }
    let ranked = rank_continuations(context, &lines, &ctx).map_err(invalid)?;
    let mut out = BufWriter::new(out);
    let w = io_err(input);
    write!(out, "rank\ttotal").map_err(&w)?;
    for name in FEATURE_NAMES {
        write!(out, "\t{name}").map_err(&w)?;
    }
    writeln!(out, "\ttext").map_err(&w)?;
    for (i, c) in ranked.iter().enumerate() {
        write!(out, "{}\t{:.6}", i + 1, c.normalized_score).map_err(&w)?;
        for v in c.raw_metrics.values() {
            write!(out, "\t{v:.6}").map_err(&w)?;
        }
        writeln!(out, "\t{}", c.text.replace(['\t', '\n'], " ")).map_err(&w)?;
    }
    out.flush().map_err(&w)?;
    Ok(ranked.len())
}

fn embedder_for(provider_url: Option<&str>, dim: usize) -> Arc<dyn Embedder> {
    match provider_url {
        Some(url) => Arc::new(RemoteProvider::new(url)),
        None => Arc::new(HashingEmbedder::new(dim)),
    }
}

/// Builds an index from `id \t caption` lines, embedding the captions.
pub fn build_index(captions: &Path, dim: usize, provider_url: Option<&str>) -> Result<EmbeddingIndex, CommandError> {
    let mut ids = Vec::new();
    let mut texts = Vec::new();
    for (n, line) in read_lines(captions)?.into_iter().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, caption) = line.split_once('\t').ok_or_else(|| {
            CommandError::Invalid(format!("{}:{}: expected `id<TAB>caption`", captions.display(), n + 1))
        })?;
        ids.push(id.trim().to_owned());
        texts.push(caption.trim().to_owned());
    }
    let embedder = embedder_for(provider_url, dim);
    let mut vectors = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(provider_server::MAX_BATCH) {
        vectors.extend(embedder.embed(chunk).map_err(invalid)?);
    }
    let dim = vectors.first().map_or(dim, Vec::len);
    EmbeddingIndex::from_entries(dim, ids.into_iter().zip(vectors)).map_err(invalid)
}

pub fn retrieve(
    index: &Path,
    query: &str,
    k: usize,
    provider_url: Option<&str>,
    attribution: Option<&Path>,
) -> Result<(EmbeddingIndex, RetrievalResult), CommandError> {
    let mut idx = EmbeddingIndex::load(index).map_err(invalid)?;
    if let Some(a) = attribution {
        let f = fs::File::open(a).map_err(io_err(a))?;
        idx.read_attribution(BufReader::new(f)).map_err(invalid)?;
    }
    let embedder = embedder_for(provider_url, idx.dim());
    let result = idx.retrieve_text(query, &*embedder, k).map_err(invalid)?;
    Ok((idx, result))
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub src: PathBuf,
    pub source: Source,
    pub out: PathBuf,
    pub offensive: Option<PathBuf>,
    /// SentiWordNet-format lexicon enabling the sentiment filter.
    pub lexicon: Option<PathBuf>,
    pub threshold: f64,
    pub max_words: usize,
    pub extract_tokens: usize,
    pub keywords: usize,
    /// Where to write the frequent-word list, one word per line.
    pub frequent_out: Option<PathBuf>,
    pub fraction: f64,
}

impl IngestOptions {
    pub fn new(src: impl Into<PathBuf>, source: Source, out: impl Into<PathBuf>) -> Self {
        Self {
            src: src.into(),
            source,
            out: out.into(),
            offensive: None,
            lexicon: None,
            threshold: DEFAULT_SENTIMENT_THRESHOLD,
            max_words: DEFAULT_MAX_WORDS,
            extract_tokens: DEFAULT_EXTRACT_TOKENS,
            keywords: DEFAULT_KEYWORDS,
            frequent_out: None,
            fraction: DEFAULT_FREQUENT_FRACTION,
        }
    }
}

pub fn run_ingest(opts: &IngestOptions) -> Result<(Vec<CleanExtract>, IngestReport), CommandError> {
    let stories = load_stories(&opts.src, opts.source).map_err(invalid)?;
    let offensive = match &opts.offensive {
        Some(p) => OffensiveWords::load(p).map_err(io_err(p))?,
        None => OffensiveWords::empty(),
    };
    let scorer = match &opts.lexicon {
        Some(p) => Some(LexiconSentimentScorer::new(
            SentimentLexicon::load(p).map_err(invalid)?,
            StopWords::builtin(),
        )),
        None => None,
    };
    if opts.max_words == 0 || opts.extract_tokens == 0 {
        return Err(CommandError::Invalid("word and token limits must be positive".into()));
    }
    let config = IngestConfig {
        max_words: opts.max_words,
        extract_tokens: opts.extract_tokens,
        keywords: opts.keywords,
        offensive,
        stop_words: StopWords::builtin(),
        sentiment: scorer.as_ref().map(|s| (s as _, opts.threshold)),
    };
    let (extracts, report) = ingest(&stories, &config);
    let mut w = create(&opts.out)?;
    write_jsonl(&extracts, &mut w).map_err(io_err(&opts.out))?;
    w.flush().map_err(io_err(&opts.out))?;
    if let Some(path) = &opts.frequent_out {
        let bodies: Vec<&str> = extracts.iter().map(|e| e.body.as_str()).collect();
        let set = build_frequent_words(&bodies, opts.fraction, &config.stop_words).map_err(invalid)?;
        let mut w = create(path)?;
        for word in set.sorted() {
            writeln!(w, "{word}").map_err(io_err(path))?;
        }
        w.flush().map_err(io_err(path))?;
    }
    Ok((extracts, report))
}

/// Statistics of the extract bodies of a JSON-lines corpus.
pub fn stats(input: &Path) -> Result<CorpusStats, CommandError> {
    let f = fs::File::open(input).map_err(io_err(input))?;
    let extracts = read_jsonl(BufReader::new(f)).map_err(invalid)?;
    let bodies: Vec<&str> = extracts.iter().map(|e| e.body.as_str()).collect();
    corpus_stats(&bodies).map_err(invalid)
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    pub engine: EngineConfig,
    /// Story persistence; in memory when absent.
    pub data_dir: Option<PathBuf>,
    pub image_base: String,
    pub public_url: Option<String>,
}

pub fn app_state(opts: &ServeOptions) -> Result<AppState, CommandError> {
    let engine = Engine::from_config(&opts.engine)?;
    let store = match &opts.data_dir {
        Some(dir) => Store::open(dir).map_err(invalid)?,
        None => Store::in_memory(),
    };
    let mut state = AppState::new(Arc::new(engine), Arc::new(store));
    state.image_base = opts.image_base.clone();
    state.public_url = opts
        .public_url
        .clone()
        .unwrap_or_else(|| format!("http://{}", opts.addr));
    Ok(state)
}

async fn serve_router(addr: SocketAddr, router: axum::Router) -> Result<(), CommandError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CommandError::Invalid(format!("cannot bind {addr}: {e}")))?;
    log::info!("listening on {}", listener.local_addr().map_err(invalid)?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(invalid)
}

pub async fn serve(opts: ServeOptions) -> Result<(), CommandError> {
    let addr = opts.addr;
    let state = tokio::task::spawn_blocking(move || app_state(&opts))
        .await
        .map_err(invalid)??;
    serve_router(addr, api::router(Arc::new(state))).await
}

pub async fn serve_provider(
    addr: SocketAddr,
    corpus: &Path,
    order: usize,
    embed_dim: usize,
) -> Result<(), CommandError> {
    let texts = crate::engine::load_corpus_texts(corpus)?;
    let provider = BuiltinProvider::train(&texts, order, embed_dim)?;
    serve_router(addr, provider_server::router(Arc::new(provider))).await
}
