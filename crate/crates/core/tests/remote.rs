mod common;

use common::MockServer;
use kgrescore::annotate::{annotate_text, AnnotationSource, SpotlightClient};
use kgrescore::kgstore::{KgError, MoleculeCache, RemoteMolecules, Triple};
use kgrescore::net::NetError;

const ENTITY: &str = "http://dbpedia.org/resource/Arkansas";

fn fixture() -> String {
    [
        "<http://dbpedia.org/resource/Bill_Clinton> <http://dbpedia.org/ontology/governorOf> <http://dbpedia.org/resource/Arkansas> .",
        "<http://dbpedia.org/resource/Arkansas> <http://dbpedia.org/ontology/capital> <http://dbpedia.org/resource/Little_Rock> .",
        "<http://dbpedia.org/resource/Arkansas> <http://dbpedia.org/ontology/country> <http://dbpedia.org/resource/United_States> .",
        "<http://dbpedia.org/resource/Kansas> <http://dbpedia.org/ontology/country> <http://dbpedia.org/resource/United_States> .",
    ]
    .join("\n")
}

#[test]
fn fixture_endpoint_serves_three_molecules() {
    let server = MockServer::start(200, "application/n-triples", fixture());
    let client = RemoteMolecules::new(&server.url);
    let set = client.fetch(ENTITY, 500).unwrap();
    assert_eq!(set.len(), 3);
    assert!(!set.truncated);
    assert_eq!(
        set.molecules[0],
        Triple::iris(
            "http://dbpedia.org/resource/Arkansas",
            "http://dbpedia.org/ontology/capital",
            "http://dbpedia.org/resource/Little_Rock"
        )
    );
    let line = &server.requests.lock().unwrap()[0].request_line;
    assert!(line.starts_with("GET /molecules?entity=http"), "{line}");
    assert!(line.contains("limit=501"), "{line}");
    assert_eq!(client.network_requests(), 1);
}

#[test]
fn limit_applies_to_the_response() {
    let server = MockServer::start(200, "application/n-triples", fixture());
    let set = RemoteMolecules::new(&server.url).fetch(ENTITY, 2).unwrap();
    assert_eq!(set.len(), 2);
    assert!(set.truncated);
}

#[test]
fn http_failure_is_a_network_error() {
    let server = MockServer::start(503, "text/plain", "down".into());
    let err = RemoteMolecules::new(&server.url).fetch(ENTITY, 500).unwrap_err();
    match err {
        KgError::Net(e @ NetError::Network { .. }) => assert!(e.is_retryable()),
        other => panic!("{other:?}"),
    }
    let server = MockServer::start(404, "text/plain", "missing".into());
    let err = RemoteMolecules::new(&server.url).fetch(ENTITY, 500).unwrap_err();
    assert!(matches!(err, KgError::Net(NetError::Network { retryable: false, .. })), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_a_network_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let err = RemoteMolecules::new(url).fetch(ENTITY, 5).unwrap_err();
    assert!(matches!(err, KgError::Net(NetError::Network { .. })), "{err:?}");
}

#[test]
fn malformed_body_is_a_protocol_error_and_not_cached() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockServer::start(200, "application/n-triples", "<broken".into());
    let client = RemoteMolecules::new(&server.url).with_cache(MoleculeCache::new(dir.path()));
    let err = client.fetch(ENTITY, 5).unwrap_err();
    assert!(matches!(err, KgError::Net(NetError::Protocol(_))), "{err:?}");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn warm_cache_needs_no_requests() {
    let dir = tempfile::tempdir().unwrap();
    let server = MockServer::start(200, "application/n-triples", fixture());
    let first = RemoteMolecules::new(&server.url).with_cache(MoleculeCache::new(dir.path()));
    let a = first.fetch(ENTITY, 500).unwrap();
    assert_eq!(server.hits(), 1);

    let second = RemoteMolecules::new(&server.url).with_cache(MoleculeCache::new(dir.path()));
    let b = second.fetch(ENTITY, 500).unwrap();
    assert_eq!(a, b);
    assert_eq!(second.network_requests(), 0);
    assert_eq!(server.hits(), 1);

    let offline = RemoteMolecules::new(&server.url).with_cache(MoleculeCache::new(dir.path())).offline(true);
    assert_eq!(offline.fetch(ENTITY, 500).unwrap(), a);
    let miss = offline.fetch("http://dbpedia.org/resource/Kansas", 500).unwrap_err();
    assert!(matches!(miss, KgError::Net(NetError::Network { retryable: false, .. })), "{miss:?}");
    assert_eq!(server.hits(), 1);
}

#[test]
fn spotlight_client_round_trip() {
    let body = r#"{"@text":"Barack Obama visited Hawaii","Resources":[
        {"@URI":"http://dbpedia.org/resource/Barack_Obama","@surfaceForm":"Barack Obama","@offset":"0","@similarityScore":"0.99"},
        {"@URI":"http://dbpedia.org/resource/Hawaii","@surfaceForm":"Hawaii","@offset":21,"@similarityScore":0.28}]}"#;
    let server = MockServer::start(200, "application/json", body.into());
    let client = SpotlightClient::new(&server.url).with_confidence(0.3);
    let anns = annotate_text("Barack Obama visited Hawaii", &AnnotationSource::Remote(&client)).unwrap();
    assert_eq!(anns.len(), 2);
    assert_eq!(anns[0].iri, "http://dbpedia.org/resource/Barack_Obama");
    assert_eq!(anns[1].offset, 21);
    let recorded = server.requests.lock().unwrap()[0].clone();
    assert!(recorded.request_line.starts_with("POST /molecules"));
    assert!(recorded.body.contains("text=Barack+Obama+visited+Hawaii") || recorded.body.contains("text=Barack%20Obama"));
    assert!(recorded.body.contains("confidence=0.3"));
}

#[test]
fn spotlight_failure_is_a_network_error() {
    let server = MockServer::start(500, "text/plain", "boom".into());
    let client = SpotlightClient::new(&server.url);
    let err = annotate_text("some text", &AnnotationSource::Remote(&client)).unwrap_err();
    assert!(matches!(err, kgrescore::annotate::AnnotateError::Net(NetError::Network { .. })), "{err:?}");
}
