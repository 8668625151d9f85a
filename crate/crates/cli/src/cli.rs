use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Content-addressed web provenance with trusty URIs.
///
/// Every flag can also be set through the environment variable shown in its
/// help (prefix `TRUSTY_`). A flag given on the command line wins.
#[derive(Debug, Parser)]
#[command(name = "trusty", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Trust context JSON: {trusted_sources, trusted_hosts, validators}.
    #[arg(long, global = true, env = "TRUSTY_CONFIG")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Output::Text, env = "TRUSTY_OUTPUT")]
    pub output: Output,

    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    InMemory,
    Streaming,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the trusty URI of a file under a base URI.
    Mint {
        #[arg(long, env = "TRUSTY_BASE")]
        base: String,
        file: PathBuf,
    },
    /// Check content against a trusty URI. Reads FILE, or fetches the URI.
    Verify { uri: String, file: Option<PathBuf> },
    /// Publish a file to a publisher.
    Publish {
        #[arg(long, env = "TRUSTY_STORE")]
        store: String,
        #[arg(long, env = "TRUSTY_AUTHOR")]
        author: String,
        /// `root` or the trusty URI of the resource this one supersedes.
        #[arg(long)]
        parent: Option<String>,
        /// The parent lives on another publisher.
        #[arg(long, requires = "parent")]
        external_parent: bool,
        #[arg(long, default_value = "application/octet-stream")]
        media_type: String,
        file: PathBuf,
    },
    /// Run a publisher.
    ServeStore {
        #[arg(long, env = "TRUSTY_LISTEN", default_value = "127.0.0.1:8080")]
        listen: String,
        /// Base for minted URIs. Defaults to the bound address.
        #[arg(long, env = "TRUSTY_BASE")]
        base: Option<String>,
        #[arg(long, env = "TRUSTY_DATA")]
        data: PathBuf,
    },
    /// Run a validator.
    ServeValidator {
        #[arg(long, env = "TRUSTY_LISTEN", default_value = "127.0.0.1:8081")]
        listen: String,
        #[arg(long, env = "TRUSTY_DATA")]
        data: PathBuf,
        /// Identity reported in validation reports. Defaults to the bound
        /// address.
        #[arg(long)]
        id: Option<String>,
    },
    /// Serve a crawled index for search.
    ServeIndex {
        #[arg(long, env = "TRUSTY_LISTEN", default_value = "127.0.0.1:8082")]
        listen: String,
        #[arg(long, env = "TRUSTY_INDEX")]
        index: PathBuf,
    },
    /// Crawl from seed URIs into an index directory.
    Crawl {
        #[arg(long, env = "TRUSTY_INDEX")]
        index: PathBuf,
        /// One trusty URI per line; `#` starts a comment.
        #[arg(long)]
        seeds: PathBuf,
        /// Fetches allowed per host.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
    },
    /// Query an index directory.
    Search {
        #[arg(long, env = "TRUSTY_INDEX")]
        index: PathBuf,
        #[arg(required = true)]
        terms: Vec<String>,
    },
    /// Ask several validators about a URI.
    Validate {
        #[arg(long, env = "TRUSTY_VALIDATORS", value_delimiter = ',', required = true)]
        validators: Vec<String>,
        /// Agreeing validators required. Defaults to a simple majority.
        #[arg(long)]
        threshold: Option<usize>,
        uri: String,
    },
    /// Resolve search terms or a trusty URI into a trace (JSON lines).
    Resolve {
        #[command(flatten)]
        resolver: ResolverArgs,
        /// Search source authority. Defaults to the first trusted source.
        #[arg(long, env = "TRUSTY_SOURCE")]
        source: Option<String>,
        /// Also write the trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(required = true)]
        query: Vec<String>,
    },
    /// Follow trusty link LINK_INDEX (0-based) of a trusted trace's page.
    Navigate {
        #[command(flatten)]
        resolver: ResolverArgs,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Trace file written by `resolve`; `-` reads standard input.
        trace: PathBuf,
        link_index: usize,
    },
    /// Parse a `surah|ayah|text` corpus.
    Ingest {
        corpus: PathBuf,
        /// Print counts.
        #[arg(long)]
        stats: bool,
    },
    /// Time hashing of every corpus unit.
    Bench {
        corpus: PathBuf,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[arg(long, value_enum, default_value_t = Mode::InMemory)]
        mode: Mode,
        /// Read size for streaming mode.
        #[arg(long, default_value_t = 65536, value_parser = clap::value_parser!(u64).range(1..))]
        chunk_size: u64,
    },
    /// Publish every corpus unit.
    PublishCorpus {
        corpus: PathBuf,
        #[arg(long, env = "TRUSTY_STORE")]
        store: String,
        #[arg(long, env = "TRUSTY_AUTHOR", default_value = "corpus")]
        author: String,
    },
}

#[derive(Debug, Args)]
pub struct ResolverArgs {
    /// Never fetch from an untrusted host before revalidating.
    #[arg(long)]
    pub paranoid: bool,
    /// For a trusted source on an untrusted host, revalidate through trusted
    /// peers instead of checking the digest locally.
    #[arg(long)]
    pub revalidate: bool,
    #[arg(long)]
    pub threshold: Option<usize>,
}
