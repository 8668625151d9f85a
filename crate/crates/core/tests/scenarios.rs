//! Five resolution scenarios over the fixture network, compared against
//! stored golden traces. Set UPDATE_GOLDEN=1 to rewrite the goldens.

use std::path::PathBuf;
use std::time::Instant;

use trusty_core::harness::{run_scenario, run_scenario_with, FixtureNetwork, FixtureOptions, Scenario};
use trusty_core::resolver::{Action, ResolutionTrace, ResolverOptions};
use trusty_core::trust::{Rationale, Verdict};
use trusty_core::uri::VerificationOutcome;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.jsonl"))
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert_eq!(actual, expected, "trace for {name} differs from golden");
}

/// A trusted trace carries content that matches the URI it was taken from.
fn assert_sound(trace: &ResolutionTrace) {
    if trace.is_trusted() {
        let uri = trace.uri.as_ref().expect("trusted trace has a uri");
        let content = trace.content.as_ref().expect("trusted trace has content");
        assert_eq!(uri.verify(content.content()), VerificationOutcome::Match);
        assert!(
            trace.steps.iter().any(|s| s.verified == Some(true)),
            "no verification step in a trusted trace"
        );
    }
}

async fn network() -> FixtureNetwork {
    FixtureNetwork::start(FixtureOptions {
        validators: 3,
        corrupted_validators: 0,
    })
    .await
    .unwrap()
}

#[tokio::test]
async fn honest_network_goldens() {
    let started = Instant::now();
    let net = network().await;
    for scenario in Scenario::ALL {
        let trace = run_scenario(scenario, &net).await.unwrap();
        assert_sound(&trace);
        assert!(trace.is_trusted(), "scenario {} not trusted", scenario.name());
        check_golden(&scenario.name().to_string(), &net.golden(&trace));
    }
    assert!(started.elapsed().as_secs() < 60);
}

#[tokio::test]
async fn scenario_shapes() {
    use Action::*;
    let net = network().await;

    let a = run_scenario(Scenario::A, &net).await.unwrap();
    assert_eq!(a.actions(), [Search, ResultSet, Request, Response]);
    assert_eq!(a.final_decision.rationale, Rationale::TrustedSourceTrustedHost);

    let c = run_scenario(Scenario::C, &net).await.unwrap();
    assert_eq!(c.actions(), [Search, ResultSet, Request, Response, Check]);
    assert_eq!(c.final_decision.rationale, Rationale::TrustedSourceUntrustedHost);

    let d = run_scenario(Scenario::D, &net).await.unwrap();
    assert_eq!(d.actions(), [Search, ResultSet, Request, Response]);
    assert_eq!(d.final_decision.rationale, Rationale::UntrustedSourceTrustedHost);

    let e = run_scenario(Scenario::E, &net).await.unwrap();
    assert_eq!(
        e.actions(),
        [Search, ResultSet, Request, Response, Search, ResultSet, Request, Response]
    );
    assert_eq!(e.steps[4].peer, net.s1.authority());
    assert_eq!(e.steps[6].peer, net.h1.authority());
    assert_eq!(e.uri.as_ref().unwrap().authority(), net.h1.authority());
}

#[tokio::test]
async fn tampering_host_goldens() {
    let net = network().await;
    net.set_tamper(true);
    for scenario in [Scenario::C, Scenario::E] {
        let trace = run_scenario(scenario, &net).await.unwrap();
        assert_sound(&trace);
        assert!(trace.is_trusted());
        // Content only ever comes from the trusted host.
        assert_eq!(trace.uri.as_ref().unwrap().authority(), net.h1.authority());
        check_golden(&format!("{}-tampered", scenario.name()), &net.golden(&trace));
    }
    let c = run_scenario(Scenario::C, &net).await.unwrap();
    let check = c.steps.iter().find(|s| s.action == Action::Check).unwrap();
    assert_eq!(check.verified, Some(false));
}

#[tokio::test]
async fn traces_are_deterministic() {
    let first = network().await;
    let second = network().await;
    for scenario in Scenario::ALL {
        let x = run_scenario(scenario, &first).await.unwrap();
        let y = run_scenario(scenario, &second).await.unwrap();
        assert_eq!(first.golden(&x), second.golden(&y));
    }
}

#[tokio::test]
async fn paranoid_e_never_touches_h2() {
    let net = network().await;
    let options = ResolverOptions {
        paranoid: true,
        ..ResolverOptions::default()
    };
    let trace = run_scenario_with(Scenario::E, &net, options).await.unwrap();
    assert!(trace.is_trusted());
    assert!(trace.steps.iter().all(|s| s.peer != net.h2.authority()));
}

#[tokio::test]
async fn navigate_from_a_to_b() {
    let net = network().await;
    let resolver = trusty_core::resolver::Resolver::http(ResolverOptions::default());
    let a = run_scenario(Scenario::A, &net).await.unwrap();
    let b = resolver.navigate(&a, 0, &net.ctx).await.unwrap();
    assert!(b.is_trusted());
    assert_eq!(b.final_decision.rationale, Rationale::LinkPropagation);
    assert!(b.actions().iter().all(|a| *a != Action::Search));
    assert_eq!(b.uri.as_ref(), Some(net.resource('B')));
}

#[tokio::test]
async fn navigate_to_untrusted_host_checks() {
    let net = network().await;
    // A page on H1 linking to B as mirrored on H2.
    let b2 = net.resource('B').with_authority(&net.h2.authority()).unwrap();
    let body = format!(r#"<html><body><a href="{b2}">b</a></body></html>"#);
    let page = net
        .store
        .publish(trusty_core::store::PublishRequest::new(
            trusty_core::Resource::html(body),
            "other",
            trusty_core::ParentSpec::Auto,
        ))
        .unwrap()
        .record
        .uri;
    let resolver = trusty_core::resolver::Resolver::http(ResolverOptions::default());
    let from = resolver
        .resolve(
            &trusty_core::resolver::Query::Uri { uri: page, via: None },
            &net.ctx,
        )
        .await
        .unwrap();
    assert!(from.is_trusted());
    let honest = resolver.navigate(&from, 0, &net.ctx).await.unwrap();
    assert!(honest.actions().contains(&Action::Check));
    assert!(honest.is_trusted());

    net.set_tamper(true);
    let tampered = resolver.navigate(&from, 0, &net.ctx).await.unwrap();
    assert_sound(&tampered);
    assert!(tampered.is_trusted());
    assert_eq!(tampered.uri.as_ref().unwrap().authority(), net.h1.authority());
}

#[tokio::test]
async fn untrusted_everything_falls_back_to_quorum() {
    let net = network().await;
    net.set_tamper(true);
    // No trusted sources or hosts: only validators remain.
    let ctx = trusty_core::TrustContext::new(Vec::<String>::new(), Vec::<String>::new())
        .with_validators(net.validators.iter().map(|v| v.authority()));
    let resolver = trusty_core::resolver::Resolver::http(ResolverOptions::default());
    let e = net.resource('E').clone();
    let trace = resolver
        .resolve(&trusty_core::resolver::Query::Uri { uri: e, via: None }, &ctx)
        .await
        .unwrap();
    // Validators fetch from H2 too and see the tampering: rejected.
    assert!(trace.actions().contains(&Action::Validate));
    assert_eq!(trace.final_decision.verdict, Verdict::Untrusted);
    assert!(trace.content.is_none());

    net.set_tamper(false);
    let honest = resolver
        .resolve(
            &trusty_core::resolver::Query::Uri {
                uri: net.resource('E').clone(),
                via: None,
            },
            &ctx,
        )
        .await
        .unwrap();
    assert!(honest.is_trusted());
    assert_sound(&honest);
}
