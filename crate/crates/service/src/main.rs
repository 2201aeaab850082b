use std::io;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use taletailor::corpus::{
    Source, DEFAULT_EXTRACT_TOKENS, DEFAULT_KEYWORDS, DEFAULT_MAX_WORDS, DEFAULT_SENTIMENT_THRESHOLD,
};
use taletailor::metrics::DEFAULT_FREQUENT_FRACTION;
use taletailor_service::commands::{self, CommandError, IngestOptions, ServeOptions};
use taletailor_service::engine::{EngineConfig, DEFAULT_EMBED_DIM, DEFAULT_ORDER};

#[derive(Parser)]
#[command(name = "taletailor", version, about = "Story co-creation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the story HTTP API.
    Serve {
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Corpus for the built-in provider (.jsonl extracts or plain lines).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Image index (TTIX).
        #[arg(long)]
        index: Option<PathBuf>,
        /// `id<TAB>attribution` lines for the index.
        #[arg(long)]
        attribution: Option<PathBuf>,
        /// Remote provider; replaces the built-in one.
        #[arg(long, env = "TALETAILOR_PROVIDER_URL")]
        provider_url: Option<String>,
        /// Story persistence directory; stories are kept in memory without it.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Scoring context directory (lexicon.tsv, frequent_words.txt).
        #[arg(long)]
        ctx: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "/images/")]
        image_base: String,
        /// Public base URL used in share links.
        #[arg(long)]
        public_url: Option<String>,
    },
    /// Serve the provider protocol from the built-in models.
    ServeProvider {
        #[arg(long, env = "PORT", default_value_t = 8090)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_EMBED_DIM)]
        embed_dim: usize,
    },
    /// Score and order candidate continuations, one per line.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ctx: PathBuf,
        /// Story text the candidates continue.
        #[arg(long, default_value = "")]
        context: String,
    },
    /// Retrieve the images closest to a text query.
    Retrieve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        provider_url: Option<String>,
        #[arg(long)]
        attribution: Option<PathBuf>,
    },
    /// Clean, filter and segment a raw corpus into JSON-lines extracts.
    Ingest {
        #[arg(long)]
        src: PathBuf,
        #[arg(long, value_parser = ["gutenberg", "reddit"])]
        format: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        offensive: Option<PathBuf>,
        /// SentiWordNet-format lexicon; enables the sentiment filter.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SENTIMENT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_WORDS)]
        max_words: usize,
        #[arg(long, default_value_t = DEFAULT_EXTRACT_TOKENS)]
        extract_tokens: usize,
        #[arg(long, default_value_t = DEFAULT_KEYWORDS)]
        keywords: usize,
        #[arg(long)]
        frequent_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_FREQUENT_FRACTION)]
        fraction: f64,
    },
    /// Sentence and word statistics of an ingested corpus.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        frequency_out: Option<PathBuf>,
    },
    /// Build an image index from `id<TAB>caption` lines.
    Index {
        #[arg(long)]
        captions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EMBED_DIM)]
        dim: usize,
        #[arg(long)]
        provider_url: Option<String>,
    },
}

fn run(cmd: Command) -> Result<(), CommandError> {
    match cmd {
        Command::Serve {
            port,
            host,
            corpus,
            index,
            attribution,
            provider_url,
            data_dir,
            ctx,
            order,
            seed,
            image_base,
            public_url,
        } => {
            let opts = ServeOptions {
                addr: SocketAddr::new(host, port),
                engine: EngineConfig {
                    corpus,
                    provider_url,
                    ctx_dir: ctx,
                    index,
                    attribution,
                    order: Some(order),
                    embed_dim: None,
                    seed,
                },
                data_dir,
                image_base,
                public_url,
            };
            runtime()?.block_on(commands::serve(opts))
        }
        Command::ServeProvider {
            port,
            host,
            corpus,
            order,
            embed_dim,
        } => runtime()?.block_on(commands::serve_provider(
            SocketAddr::new(host, port),
            &corpus,
            order,
            embed_dim,
        )),
        Command::Rank { input, ctx, context } => commands::rank(&input, &ctx, &context, io::stdout().lock()).map(drop),
        Command::Retrieve {
            index,
            query,
            k,
            provider_url,
            attribution,
        } => {
            let (idx, result) = commands::retrieve(&index, &query, k, provider_url.as_deref(), attribution.as_deref())?;
            for (i, hit) in result.hits.iter().enumerate() {
                let attr = idx.attribution(&hit.image_id).unwrap_or("");
                println!("{}\t{}\t{:.6}\t{attr}", i + 1, hit.image_id, hit.score);
            }
            Ok(())
        }
        Command::Ingest {
            src,
            format,
            out,
            offensive,
            lexicon,
            threshold,
            max_words,
            extract_tokens,
            keywords,
            frequent_out,
            fraction,
        } => {
            let source: Source = format.parse().map_err(|e| CommandError::Invalid(format!("{e}")))?;
            let opts = IngestOptions {
                offensive,
                lexicon,
                threshold,
                max_words,
                extract_tokens,
                keywords,
                frequent_out,
                fraction,
                ..IngestOptions::new(src, source, out)
            };
            let (_, report) = commands::run_ingest(&opts)?;
            eprintln!(
                "stories: {} loaded, {} empty after cleaning, {} filtered by sentiment; {} extracts",
                report.stories_loaded, report.stories_empty, report.stories_filtered, report.extracts
            );
            Ok(())
        }
        Command::Stats { input, frequency_out } => {
            let stats = commands::stats(&input)?;
            let io_err = |source| CommandError::Io {
                path: input.clone(),
                source,
            };
            stats.write_tsv(io::stdout().lock()).map_err(io_err)?;
            if let Some(path) = frequency_out {
                let f = std::fs::File::create(&path).map_err(|source| CommandError::Io {
                    path: path.clone(),
                    source,
                })?;
                stats
                    .write_frequency_tsv(io::BufWriter::new(f))
                    .map_err(|source| CommandError::Io { path, source })?;
            }
            Ok(())
        }
        Command::Index {
            captions,
            out,
            dim,
            provider_url,
        } => {
            let idx = commands::build_index(&captions, dim, provider_url.as_deref())?;
            idx.save(&out).map_err(|e| CommandError::Invalid(e.to_string()))?;
            eprintln!(
                "{} vectors of dimension {} written to {}",
                idx.len(),
                idx.dim(),
                out.display()
            );
            Ok(())
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CommandError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CommandError::Invalid(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
