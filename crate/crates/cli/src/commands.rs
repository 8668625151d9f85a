use std::fs;
use std::io::{self, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;
use tokio::net::TcpListener;

use trusty_core::corpus::{self, bench, BenchConfig, BenchMode};
use trusty_core::fetch::{Fetch, HttpFetcher};
use trusty_core::resolver::{Query, ResolutionTrace, ResolveError, Resolver, ResolverOptions};
use trusty_core::search::{http as search_http, Crawler, SearchIndex};
use trusty_core::service::serve_forever;
use trusty_core::store::client::PublisherClient;
use trusty_core::store::http::{self as store_http, parent_spec};
use trusty_core::trust::UnverifiedHostAction;
use trusty_core::validator::{http as validator_http, quorum_validate, QuorumError, SeenLedger, Validator};
use trusty_core::{mint, Resource, Store, TrustContext, TrustyUri, VerificationOutcome};

use crate::cli::{Cli, Command, Global, Mode, Output, ResolverArgs};

/// Process exit codes. They depend only on the class of outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Io = 2,
    Mismatch = 3,
    QuorumRejected = 4,
    Untrusted = 5,
}

/// Bad arguments discovered after parsing; exits with [`Exit::Usage`].
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn parse_uri(text: &str) -> Result<TrustyUri> {
    TrustyUri::parse(text.trim()).map_err(|e| usage(format!("`{text}`: {e}")))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json<T: Serialize>(value: &T, pretty: bool) -> Result<()> {
    let mut out = io::stdout().lock();
    if pretty {
        serde_json::to_writer_pretty(&mut out, value)?;
    } else {
        serde_json::to_writer(&mut out, value)?;
    }
    writeln!(out)?;
    Ok(())
}

/// One JSON document in json mode, `text` otherwise.
fn emit<T: Serialize>(global: &Global, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match global.output {
        Output::Json => print_json(value, false),
        Output::Text => {
            let mut out = io::stdout().lock();
            writeln!(out, "{}", text().trim_end())?;
            Ok(())
        }
    }
}

fn load_context(global: &Global) -> Result<TrustContext> {
    match &global.config {
        Some(path) => TrustContext::load(path).with_context(|| format!("loading {}", path.display())),
        None => Ok(TrustContext::default()),
    }
}

pub async fn run(cli: Cli) -> Result<Exit> {
    let global = &cli.global;
    match cli.command {
        Command::Mint { base, file } => {
            let uri = mint(&base, &read(&file)?).map_err(|e| usage(e.to_string()))?;
            emit(global, &json!({ "uri": uri }), || uri.to_string())?;
            Ok(Exit::Ok)
        }
        Command::Verify { uri, file } => verify(global, &uri, file.as_deref()).await,
        Command::Publish {
            store,
            author,
            parent,
            external_parent,
            media_type,
            file,
        } => {
            let parent = parent_spec(parent.as_deref(), external_parent).map_err(usage)?;
            let resource = Resource::new(read(&file)?, &media_type).map_err(|e| usage(e.to_string()))?;
            let client = PublisherClient::new(&store).map_err(|e| usage(e.to_string()))?;
            let outcome = client.publish(&resource, &author, &parent, None).await?;
            print_json(&outcome.record, global.output == Output::Text)?;
            Ok(Exit::Ok)
        }
        Command::ServeStore { listen, base, data } => {
            let listener = bind(&listen).await?;
            let addr = listener.local_addr()?;
            let base = base.unwrap_or_else(|| format!("http://{addr}/"));
            let store = Store::open(&data, &base).with_context(|| format!("opening store {}", data.display()))?;
            announce(global, &addr.to_string(), Some(&base))?;
            serve_forever(listener, store_http::router(Arc::new(store))).await?;
            Ok(Exit::Ok)
        }
        Command::ServeValidator { listen, data, id } => {
            let listener = bind(&listen).await?;
            let addr = listener.local_addr()?.to_string();
            let ledger = SeenLedger::open(&data).with_context(|| format!("opening ledger {}", data.display()))?;
            let validator = Validator::new(id.unwrap_or_else(|| addr.clone()), ledger, HttpFetcher::default());
            announce(global, &addr, None)?;
            serve_forever(listener, validator_http::router(Arc::new(validator))).await?;
            Ok(Exit::Ok)
        }
        Command::ServeIndex { listen, index } => {
            let listener = bind(&listen).await?;
            let addr = listener.local_addr()?.to_string();
            let index = SearchIndex::open(&index).with_context(|| format!("opening index {}", index.display()))?;
            announce(global, &addr, None)?;
            serve_forever(listener, search_http::router(Arc::new(RwLock::new(index)))).await?;
            Ok(Exit::Ok)
        }
        Command::Crawl { index, seeds, budget } => {
            let text = String::from_utf8(read(&seeds)?).map_err(|_| usage("seed file is not UTF-8"))?;
            let seeds = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(parse_uri)
                .collect::<Result<Vec<_>>>()?;
            let dir = index;
            let index = RwLock::new(SearchIndex::open(&dir).with_context(|| format!("opening index {}", dir.display()))?);
            let report = Crawler::new(HttpFetcher::default())
                .crawl(&index, &seeds, budget as usize)
                .await
                .map_err(|e| match e {
                    trusty_core::search::CrawlError::CrawlEmpty(_) => anyhow::Error::from(e),
                    other => usage(other.to_string()),
                })?;
            index.read().unwrap_or_else(|e| e.into_inner()).save()?;
            emit(global, &report, || {
                format!(
                    "indexed {}\nrejected {}\nfailed {}\npending {}",
                    report.indexed,
                    report.rejected.len(),
                    report.failed.len(),
                    report.pending.len()
                )
            })?;
            Ok(Exit::Ok)
        }
        Command::Search { index, terms } => {
            let index = SearchIndex::open(&index).with_context(|| format!("opening index {}", index.display()))?;
            let hits = index.query(&terms);
            emit(global, &hits, || {
                hits.iter()
                    .map(|h| format!("{}\t{}", h.score, h.uri))
                    .collect::<Vec<_>>()
                    .join("\n")
            })?;
            Ok(Exit::Ok)
        }
        Command::Validate {
            validators,
            threshold,
            uri,
        } => {
            let uri = parse_uri(&uri)?;
            let outcome = quorum_validate(&uri, &validators, threshold)
                .await
                .map_err(|e| match e {
                    QuorumError::AllValidatorsUnreachable(_) => anyhow::Error::from(e),
                    other => usage(other.to_string()),
                })?;
            emit(global, &outcome, || {
                format!(
                    "{} ({} of {} agree, threshold {})",
                    if outcome.accepted { "accepted" } else { "rejected" },
                    outcome.agreeing,
                    validators.len(),
                    outcome.threshold
                )
            })?;
            Ok(if outcome.accepted {
                Exit::Ok
            } else {
                Exit::QuorumRejected
            })
        }
        Command::Resolve {
            resolver,
            source,
            trace_out,
            query,
        } => {
            let ctx = load_context(global)?;
            let query = build_query(query, source, &ctx)?;
            let result = resolver_for(&resolver).resolve(&query, &ctx).await;
            finish_trace(result, trace_out.as_deref())
        }
        Command::Navigate {
            resolver,
            trace_out,
            trace,
            link_index,
        } => {
            let ctx = load_context(global)?;
            let from = if trace.as_os_str() == "-" {
                ResolutionTrace::read_jsonl(io::stdin().lock())?
            } else {
                let file = fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
                ResolutionTrace::read_jsonl(BufReader::new(file))?
            };
            match resolver_for(&resolver).navigate(&from, link_index, &ctx).await {
                Err(ResolveError::LinkIndexOutOfRange { index, count }) => Err(usage(format!(
                    "link {index} out of range; the page has {count} trusty links"
                ))),
                Err(ResolveError::Propagation(e)) => {
                    eprintln!("error: {e}");
                    Ok(Exit::Untrusted)
                }
                other => finish_trace(other, trace_out.as_deref()),
            }
        }
        Command::Ingest { corpus, stats } => {
            let parsed = corpus::ingest(&corpus)?;
            let s = parsed.stats;
            if stats {
                emit(global, &s, || {
                    format!(
                        "surah_count {}\nayah_count {}\ntotal_words {}\ndistinct_words {}",
                        s.surah_count, s.ayah_count, s.total_words, s.distinct_words
                    )
                })?;
            } else {
                emit(global, &json!({ "units": parsed.units.len() }), || {
                    format!("{} units", parsed.units.len())
                })?;
            }
            Ok(Exit::Ok)
        }
        Command::Bench {
            corpus,
            reps,
            mode,
            chunk_size,
        } => {
            let parsed = corpus::ingest(&corpus)?;
            let config = BenchConfig {
                repetitions: reps as usize,
                mode: match mode {
                    Mode::InMemory => BenchMode::InMemory,
                    Mode::Streaming => BenchMode::StreamingFromFile,
                },
                chunk_size: chunk_size as usize,
            };
            let results = corpus::bench_hash(&parsed.units, &config)?;
            emit(global, &results, || bench::render_table(&results))?;
            if results.iter().all(|r| r.digest_consistency) {
                Ok(Exit::Ok)
            } else {
                eprintln!("error: streaming and in-memory digests disagree");
                Ok(Exit::Mismatch)
            }
        }
        Command::PublishCorpus { corpus, store, author } => {
            let parsed = corpus::ingest(&corpus)?;
            let client = PublisherClient::new(&store).map_err(|e| usage(e.to_string()))?;
            let summary = corpus::publish_corpus(&parsed.units, &client, &author).await;
            let brief = json!({
                "created": summary.created,
                "existing": summary.existing,
                "failed": summary.failed,
            });
            emit(global, &brief, || {
                format!(
                    "created {}\nexisting {}\nfailed {}",
                    summary.created,
                    summary.existing,
                    summary.failed.len()
                )
            })?;
            for (label, error) in &summary.failed {
                eprintln!("failed {label}: {error}");
            }
            Ok(if summary.failed.is_empty() { Exit::Ok } else { Exit::Io })
        }
    }
}

async fn verify(global: &Global, uri: &str, file: Option<&Path>) -> Result<Exit> {
    let uri = parse_uri(uri)?;
    let content = match file {
        Some(path) => read(path)?,
        None => HttpFetcher::default().fetch(&uri).await?.into_content(),
    };
    let outcome = uri.verify(&content);
    let (label, expected, actual) = match &outcome {
        VerificationOutcome::Match => ("Match", *uri.digest(), *uri.digest()),
        VerificationOutcome::Mismatch { expected, actual } => ("Mismatch", *expected, *actual),
    };
    emit(
        global,
        &json!({ "uri": uri, "outcome": label, "expected": expected, "actual": actual }),
        || match &outcome {
            VerificationOutcome::Match => label.to_string(),
            VerificationOutcome::Mismatch { expected, actual } => {
                format!("{label}\nexpected {expected}\nactual   {actual}")
            }
        },
    )?;
    Ok(if outcome.is_match() { Exit::Ok } else { Exit::Mismatch })
}

async fn bind(listen: &str) -> Result<TcpListener> {
    TcpListener::bind(listen)
        .await
        .with_context(|| format!("binding {listen}"))
}

/// First line on standard output of every service: where it listens.
fn announce(global: &Global, addr: &str, base: Option<&str>) -> Result<()> {
    let mut out = io::stdout().lock();
    match global.output {
        Output::Json => {
            serde_json::to_writer(&mut out, &json!({ "listen": addr, "base": base }))?;
            writeln!(out)?;
        }
        Output::Text => writeln!(out, "listening on {addr}")?,
    }
    out.flush()?;
    Ok(())
}

fn build_query(words: Vec<String>, source: Option<String>, ctx: &TrustContext) -> Result<Query> {
    if let [only] = words.as_slice() {
        if only.contains("://") {
            return Ok(Query::Uri {
                uri: parse_uri(only)?,
                via: source,
            });
        }
    }
    let source = source
        .or_else(|| ctx.trusted_sources().next().map(str::to_string))
        .ok_or_else(|| usage("no --source given and the trust context names no trusted source"))?;
    Ok(Query::Terms { terms: words, source })
}

fn resolver_for(args: &ResolverArgs) -> Resolver {
    Resolver::http(ResolverOptions {
        paranoid: args.paranoid,
        unverified_host: if args.revalidate {
            UnverifiedHostAction::RevalidateViaTrusted
        } else {
            UnverifiedHostAction::LocalDigestCheck
        },
        quorum_threshold: args.threshold,
    })
}

fn finish_trace(result: Result<ResolutionTrace, ResolveError>, trace_out: Option<&Path>) -> Result<Exit> {
    let trace = match result {
        Ok(trace) => trace,
        Err(ResolveError::NotFoundAnywhere { subject, trace }) => {
            trace.write_jsonl(io::stdout().lock())?;
            anyhow::bail!("`{subject}` could not be retrieved from anywhere");
        }
        Err(e) => return Err(e.into()),
    };
    trace.write_jsonl(io::stdout().lock())?;
    if let Some(path) = trace_out {
        fs::write(path, trace.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if trace.is_trusted() { Exit::Ok } else { Exit::Untrusted })
}
