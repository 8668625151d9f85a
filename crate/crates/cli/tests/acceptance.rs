//! Acceptance checks, one line per criterion. Exits non-zero when any fail.

use std::io::{BufRead, BufReader, Cursor};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::RwLock;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, ensure, Context, Result};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, RngCore, SeedableRng};

use trusty_core::corpus::{self, bench_hash, chunk_overhead, BenchConfig, BenchMode, UnitKind};
use trusty_core::harness::{run_scenario, FixtureNetwork, FixtureOptions, Scenario};
use trusty_core::resolver::ResolutionTrace;
use trusty_core::search::{Crawler, SearchIndex};
use trusty_core::store::PublishRequest;
use trusty_core::trust::{Rationale, RequiredAction};
use trusty_core::validator::{quorum_validate, ValidatorClient};
use trusty_core::{
    assess, compute_digest, compute_digest_streaming, mint, Fetch, HttpFetcher, ParentSpec, Resource, Store, TrustContext,
    Verdict, VerificationOutcome,
};

// ---------------------------------------------------------------------------
// Reference SHA-256, written from the FIPS 180-4 definition. Shares no code
// with the implementation under test.

const K: [u32; 64] = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98,
    0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8,
    0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819,
    0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2,
];

fn oracle_sha256(message: &[u8]) -> [u8; 32] {
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19,
    ];
    let mut padded = message.to_vec();
    padded.push(0x80);
    while padded.len() % 64 != 56 {
        padded.push(0);
    }
    padded.extend_from_slice(&((message.len() as u64).wrapping_mul(8)).to_be_bytes());
    for block in padded.chunks_exact(64) {
        let mut w = [0u32; 64];
        for (t, word) in block.chunks_exact(4).enumerate() {
            w[t] = u32::from_be_bytes([word[0], word[1], word[2], word[3]]);
        }
        for t in 16..64 {
            let s0 = w[t - 15].rotate_right(7) ^ w[t - 15].rotate_right(18) ^ (w[t - 15] >> 3);
            let s1 = w[t - 2].rotate_right(17) ^ w[t - 2].rotate_right(19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16].wrapping_add(s0).wrapping_add(w[t - 7]).wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for t in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh.wrapping_add(s1).wrapping_add(ch).wrapping_add(K[t]).wrapping_add(w[t]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (slot, v) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *slot = slot.wrapping_add(v);
        }
    }
    let mut out = [0u8; 32];
    for (chunk, v) in out.chunks_exact_mut(4).zip(h) {
        chunk.copy_from_slice(&v.to_be_bytes());
    }
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Length drawn log-uniformly from [0, 1 MiB].
fn log_uniform_len(rng: &mut StdRng) -> usize {
    let exp: f64 = rng.random_range(0.0..=20.0);
    (2f64.powf(exp) as usize - 1).min(1 << 20)
}

fn random_bytes(rng: &mut StdRng, len: usize) -> Vec<u8> {
    let mut buf = vec![0u8; len];
    rng.fill_bytes(&mut buf);
    buf
}

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/quran-uthmani.txt")
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden")
}

async fn fixture(corrupted: usize) -> Result<FixtureNetwork> {
    Ok(FixtureNetwork::start(FixtureOptions {
        validators: 3,
        corrupted_validators: corrupted,
    })
    .await?)
}

// ---------------------------------------------------------------------------

fn c1_digest_oracle() -> Result<String> {
    let vectors: [(Vec<u8>, &str); 5] = [
        (b"".to_vec(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        (b"abc".to_vec(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
        (
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq".to_vec(),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
        ),
        (
            b"abcdefghbcdefghicdefghijdefghijkefghijklfghijklmghijklmnhijklmnoijklmnopjklmnopqklmnopqrlmnopqrsmnopqrstnopqrstu"
                .to_vec(),
            "cf5b16a778af8380036ce59e7b0492370b249b11e8f07a51afac45037afee9d1",
        ),
        (vec![b'a'; 1_000_000], "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0"),
    ];
    for (message, expected) in &vectors {
        ensure!(hex(&oracle_sha256(message)) == *expected, "oracle disagrees with vector {expected}");
        ensure!(compute_digest(message).to_hex() == *expected, "compute_digest disagrees with vector {expected}");
    }
    let mut rng = StdRng::seed_from_u64(1);
    let mut total = 0usize;
    for _ in 0..1000 {
        let len = log_uniform_len(&mut rng);
        total += len;
        let input = random_bytes(&mut rng, len);
        ensure!(
            compute_digest(&input).as_bytes() == oracle_sha256(&input),
            "digest differs from oracle at length {len}"
        );
    }
    Ok(format!("{} vectors, 1000 random inputs ({total} bytes)", vectors.len()))
}

fn mutate(rng: &mut StdRng, content: &[u8]) -> Vec<u8> {
    let mut out = content.to_vec();
    match (out.is_empty(), rng.random_range(0..3)) {
        (true, _) | (false, 0) => {
            let at = rng.random_range(0..=out.len());
            out.insert(at, rng.random());
        }
        (false, 1) => {
            let at = rng.random_range(0..out.len());
            out.remove(at);
        }
        _ => {
            let at = rng.random_range(0..out.len());
            out[at] ^= 1 << rng.random_range(0..8);
        }
    }
    out
}

fn c2_roundtrip_tamper() -> Result<String> {
    let mut rng = StdRng::seed_from_u64(2);
    let hosts = ["http://h/", "https://example.org/pub/", "http://127.0.0.1:9/a/b/"];
    for i in 0..10_000 {
        let len = rng.random_range(0..2048);
        let content = random_bytes(&mut rng, len);
        let base = hosts[i % hosts.len()];
        let uri = mint(base, &content)?;
        ensure!(uri.verify(&content).is_match(), "roundtrip failed for pair {i}");
        let tampered = mutate(&mut rng, &content);
        ensure!(!uri.verify(&tampered).is_match(), "tamper undetected for pair {i}");
    }
    Ok("10000 pairs".into())
}

fn c3_streaming() -> Result<String> {
    let mut rng = StdRng::seed_from_u64(3);
    let corpus_bytes = std::fs::read(corpus_path())?;
    let full_text = corpus::parse(std::str::from_utf8(&corpus_bytes)?)?
        .full_text()
        .published_text()
        .into_bytes();
    let mut inputs = vec![corpus_bytes, full_text];
    for _ in 0..8 {
        let len = log_uniform_len(&mut rng);
        inputs.push(random_bytes(&mut rng, len));
    }
    let dir = tempfile::tempdir()?;
    let mut checks = 0;
    for (i, input) in inputs.iter().enumerate() {
        let whole = compute_digest(input);
        let path = dir.path().join(format!("{i}.bin"));
        std::fs::write(&path, input)?;
        for chunk in [1, 7, 4096, 65536] {
            ensure!(
                compute_digest_streaming(Cursor::new(input), chunk)? == whole,
                "input {i} chunk {chunk} differs in memory"
            );
            let file = BufReader::new(std::fs::File::open(&path)?);
            ensure!(
                compute_digest_streaming(file, chunk)? == whole,
                "input {i} chunk {chunk} differs from file"
            );
            checks += 2;
        }
    }
    Ok(format!("{} inputs, {checks} comparisons", inputs.len()))
}

fn c4_counts() -> Result<String> {
    let corpus = corpus::ingest(&corpus_path())?;
    let s = corpus.stats;
    ensure!(s.surah_count == 114, "surah_count {}", s.surah_count);
    ensure!(s.ayah_count == 6236, "ayah_count {}", s.ayah_count);
    Ok(format!(
        "114 surahs, 6236 ayahs; words {} / distinct {} (reference 78245 / 14870, informational)",
        s.total_words, s.distinct_words
    ))
}

async fn c5_publish_once() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let store = Store::open(dir.path(), "http://publisher.test/")?;
    let first = store.publish(PublishRequest::new(Resource::plain_text("v1"), "a", ParentSpec::Auto))?;
    let size = store.len();
    let again = store.publish(PublishRequest::new(Resource::plain_text("v1"), "a", ParentSpec::Auto))?;
    ensure!(!again.created && store.len() == size, "republish changed the store");
    ensure!(again.record.uri == first.record.uri, "republish minted a new uri");
    let second = store.publish(PublishRequest::new(Resource::plain_text("v2"), "a", ParentSpec::Auto))?;
    ensure!(second.record.uri != first.record.uri, "modified content kept its uri");

    let net = fixture(0).await?;
    net.set_tamper(true);
    let on_h2 = net.resource('C').clone();
    let tampered = HttpFetcher::default()
        .fetch(&on_h2)
        .await?
        .into_content();
    ensure!(!on_h2.verify(&tampered).is_match(), "verify accepted tampered bytes");

    let index = RwLock::new(SearchIndex::new());
    let report = Crawler::new(HttpFetcher::default()).crawl(&index, std::slice::from_ref(&on_h2), 5).await;
    match report {
        Ok(r) => ensure!(r.rejected.iter().any(|x| x.uri == on_h2), "crawler did not reject"),
        Err(trusty_core::search::CrawlError::CrawlEmpty(_)) => {
            bail!("crawler reported nothing instead of a rejection")
        }
        Err(e) => return Err(e.into()),
    }
    ensure!(index.read().unwrap().get(&on_h2).is_none(), "tampered page indexed");

    let client = ValidatorClient::new(&net.validators[0].authority())?;
    ensure!(!client.validate(&on_h2).await?.matches, "validator reported a match");
    Ok("idempotent, new uri on change; verify, crawler, validator all detect tampering".into())
}

fn c6_trust_matrix() -> Result<String> {
    let uri = mint("http://h1/", b"x")?;
    let ctx = TrustContext::new(["s1"], ["h1"]);
    let table = [
        ("s1", "h1", Verdict::Trusted, RequiredAction::None, Rationale::TrustedSourceTrustedHost),
        (
            "s1",
            "h2",
            Verdict::TrustedUriContentUnverified,
            RequiredAction::LocalDigestCheck,
            Rationale::TrustedSourceUntrustedHost,
        ),
        ("s2", "h1", Verdict::Trusted, RequiredAction::None, Rationale::UntrustedSourceTrustedHost),
        (
            "s2",
            "h2",
            Verdict::Untrusted,
            RequiredAction::RevalidateViaTrusted,
            Rationale::UntrustedSourceUntrustedHost,
        ),
    ];
    for (source, host, verdict, action, rationale) in table {
        let d = assess(source, host, &uri, &ctx);
        ensure!(
            (d.verdict, d.required_action, d.rationale) == (verdict, action, rationale),
            "({source}, {host}) gave {d:?}"
        );
    }

    let names = || prop::collection::vec(0u8..6, 0..4);
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(
            &(names(), names(), names(), names(), 0u8..6, 0u8..6),
            |(s, h, extra_s, extra_h, source, host)| {
                let label = |prefix: &str, n: &u8| format!("{prefix}{n}");
                let small = TrustContext::new(s.iter().map(|n| label("s", n)), h.iter().map(|n| label("h", n)));
                let large = TrustContext::new(
                    s.iter().chain(&extra_s).map(|n| label("s", n)),
                    h.iter().chain(&extra_h).map(|n| label("h", n)),
                );
                let (source, host) = (label("s", &source), label("h", &host));
                let before = assess(&source, &host, &uri, &small).verdict;
                let after = assess(&source, &host, &uri, &large).verdict;
                prop_assert!(after >= before, "{before:?} -> {after:?}");
                Ok(())
            },
        )
        .map_err(|e| anyhow!("{e}"))?;
    Ok("4 cells exact, monotone over 512 context extensions".into())
}

fn check_golden(net: &FixtureNetwork, name: &str, trace: &ResolutionTrace) -> Result<()> {
    let path = golden_dir().join(format!("{name}.jsonl"));
    let expected = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    ensure!(net.golden(trace) == expected, "trace {name} differs from golden");
    Ok(())
}

async fn c7_goldens() -> Result<String> {
    let net = fixture(0).await?;
    for scenario in Scenario::ALL {
        let trace = run_scenario(scenario, &net).await?;
        ensure!(trace.is_trusted(), "scenario {} not trusted", scenario.name());
        check_golden(&net, &scenario.name().to_string(), &trace)?;
    }
    net.set_tamper(true);
    for scenario in [Scenario::C, Scenario::E] {
        let trace = run_scenario(scenario, &net).await?;
        if trace.is_trusted() {
            let uri = trace.uri.as_ref().ok_or_else(|| anyhow!("trusted trace without uri"))?;
            let content = trace.content.as_ref().ok_or_else(|| anyhow!("trusted trace without content"))?;
            ensure!(
                uri.verify(content.content()) == VerificationOutcome::Match,
                "scenario {} trusted tampered bytes",
                scenario.name()
            );
        }
        check_golden(&net, &format!("{}-tampered", scenario.name()), &trace)?;
    }
    Ok("A-E and C/E tampered match goldens".into())
}

async fn c8_quorum() -> Result<String> {
    let mut accepted = Vec::new();
    for corrupted in 0..=2 {
        let net = fixture(corrupted).await?;
        let endpoints: Vec<String> = net.validators.iter().map(|v| v.authority()).collect();
        accepted.push(quorum_validate(net.resource('A'), &endpoints, None).await?.accepted);
    }
    ensure!(accepted == [true, true, false], "got {accepted:?}");
    Ok("0/1/2 corrupted -> accepted/accepted/rejected".into())
}

fn c9_bench() -> Result<String> {
    let corpus = corpus::ingest(&corpus_path())?;
    let results = bench_hash(&corpus.units, &BenchConfig::new(20, BenchMode::InMemory))?;
    let streaming = bench_hash(&corpus.units, &BenchConfig::new(3, BenchMode::StreamingFromFile))?;
    ensure!(
        results.iter().chain(&streaming).all(|r| r.digest_consistency),
        "digest inconsistency"
    );
    let max = |kind: UnitKind| {
        results
            .iter()
            .find(|r| r.unit_kind == kind)
            .map(|r| r.max_ms)
            .ok_or_else(|| anyhow!("no result for {kind:?}"))
    };
    let (full, surah, ayah) = (max(UnitKind::FullText)?, max(UnitKind::Surah)?, max(UnitKind::Ayah)?);
    ensure!(
        full >= surah && surah >= ayah,
        "ordering violated: full {full} surah {surah} ayah {ayah}"
    );
    let mut rng = StdRng::seed_from_u64(9);
    let big = random_bytes(&mut rng, 1 << 20);
    let overhead = chunk_overhead(&big, 3)?;
    ensure!(overhead.digest_consistency, "chunk overhead digests differ");
    ensure!(overhead.ratio >= 5.0, "streaming/whole ratio {:.1} < 5", overhead.ratio);
    Ok(format!(
        "max ms full {full:.3} >= surah {surah:.3} >= ayah {ayah:.4}; 1-octet streaming {:.0}x slower",
        overhead.ratio
    ))
}

// ---------------------------------------------------------------------------

struct Service(Child);

impl Drop for Service {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn trusty() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trusty"));
    cmd.env_remove("TRUSTY_CONFIG").stderr(Stdio::inherit());
    cmd
}

/// Starts a `serve-*` command and returns it with its announcement line.
fn serve(args: &[&str]) -> Result<(Service, serde_json::Value)> {
    let mut child = trusty()
        .args(["--output", "json"])
        .args(args)
        .stdout(Stdio::piped())
        .spawn()?;
    let stdout = child.stdout.take().ok_or_else(|| anyhow!("no stdout"))?;
    let service = Service(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line)?;
    let announced = serde_json::from_str(&line).with_context(|| format!("announcement `{line}`"))?;
    Ok((service, announced))
}

fn run_ok(args: &[&str]) -> Result<String> {
    let out = trusty().args(args).output()?;
    ensure!(out.status.success(), "`trusty {}` exited {:?}", args.join(" "), out.status.code());
    Ok(String::from_utf8(out.stdout)?)
}

fn authority_of(base: &str) -> String {
    base.trim_start_matches("http://").trim_end_matches('/').to_string()
}

fn c10_end_to_end() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let at = |name: &str| dir.path().join(name);
    let path = |p: &Path| p.to_str().unwrap().to_string();

    let toy = "1|1|alpha bravo\n1|2|bravo charlie\n";
    std::fs::write(at("toy.txt"), toy)?;
    let (_store, announced) = serve(&["serve-store", "--listen", "127.0.0.1:0", "--data", &path(&at("store"))])?;
    let base = announced["base"].as_str().ok_or_else(|| anyhow!("no base"))?.to_string();
    run_ok(&["publish-corpus", &path(&at("toy.txt")), "--store", &base])?;

    let ayahs: Vec<_> = corpus::parse(toy)?
        .of_kind(UnitKind::Ayah)
        .map(|u| mint(&base, u.published_text().as_bytes()))
        .collect::<Result<_, _>>()?;
    let article = format!(
        "<html><head><title>commentary</title></head><body><p>commentary on the opening</p>{}</body></html>",
        ayahs.iter().map(|u| format!(r#"<a href="{u}">ayah</a>"#)).collect::<String>()
    );
    std::fs::write(at("article.html"), article)?;
    let record: serde_json::Value = serde_json::from_str(&run_ok(&[
        "publish",
        "--store",
        &base,
        "--author",
        "commentator",
        "--media-type",
        "text/html",
        &path(&at("article.html")),
    ])?)?;
    let article_uri = record["uri"].as_str().ok_or_else(|| anyhow!("no uri in {record}"))?.to_string();

    std::fs::write(at("seeds.txt"), format!("{article_uri}\n"))?;
    let index = path(&at("index"));
    run_ok(&["crawl", "--index", &index, "--seeds", &path(&at("seeds.txt"))])?;
    let hits = run_ok(&["search", "--index", &index, "commentary"])?;
    ensure!(hits.contains(&article_uri), "search missed the article: {hits}");

    let (_index, announced) = serve(&["serve-index", "--listen", "127.0.0.1:0", "--index", &index])?;
    let source = announced["listen"].as_str().ok_or_else(|| anyhow!("no listen"))?.to_string();
    let config = serde_json::json!({
        "trusted_sources": [source],
        "trusted_hosts": [authority_of(&base)],
    });
    std::fs::write(at("ctx.json"), config.to_string())?;
    let ctx = path(&at("ctx.json"));
    let trace_file = path(&at("trace.jsonl"));
    run_ok(&["--config", &ctx, "resolve", "--trace-out", &trace_file, "commentary"])?;
    let trace = ResolutionTrace::read_jsonl(BufReader::new(std::fs::File::open(&trace_file)?))?;
    ensure!(trace.is_trusted(), "resolve did not end trusted");

    let next = run_ok(&["--config", &ctx, "navigate", &trace_file, "1"])?;
    let next = ResolutionTrace::read_jsonl(Cursor::new(next))?;
    ensure!(next.is_trusted(), "navigate did not end trusted");
    ensure!(next.uri.as_ref() == Some(&ayahs[1]), "navigate reached {:?}", next.uri);
    Ok("publish, crawl, search, resolve (S+H+), navigate all exit 0 and end trusted".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("runtime");
    type Check<'a> = Box<dyn FnOnce() -> Result<String> + 'a>;
    let budgets: [(u32, Duration, Check<'_>); 10] = [
        (1, Duration::from_secs(10), Box::new(c1_digest_oracle)),
        (2, Duration::from_secs(30), Box::new(c2_roundtrip_tamper)),
        (3, Duration::MAX, Box::new(c3_streaming)),
        (4, Duration::MAX, Box::new(c4_counts)),
        (5, Duration::MAX, Box::new(|| runtime.block_on(c5_publish_once()))),
        (6, Duration::MAX, Box::new(c6_trust_matrix)),
        (7, Duration::from_secs(60), Box::new(|| runtime.block_on(c7_goldens()))),
        (8, Duration::MAX, Box::new(|| runtime.block_on(c8_quorum()))),
        (9, Duration::from_secs(120), Box::new(c9_bench)),
        (10, Duration::from_secs(30), Box::new(c10_end_to_end)),
    ];
    let mut failed = 0;
    for (n, budget, check) in budgets {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(anyhow!("{detail}; took {elapsed:?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {n:>2}: PASS ({:.1}s) {detail}", elapsed.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL ({:.1}s) {e:#}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
