use kgrescore::kgstore::{
    EntityId, KgError, Literal, LiteralTag, ParseOptions, Term, Triple, TripleStore, DEFAULT_MOLECULE_LIMIT,
};
use proptest::prelude::*;

fn iri(name: &str) -> String {
    format!("http://ex/{name}")
}

fn t(s: &str, p: &str, o: &str) -> Triple {
    Triple::iris(&iri(s), &iri(p), &iri(o))
}

#[test]
fn single_statement_store() {
    let store = TripleStore::parse_str("<http://ex/a> <http://ex/p> <http://ex/b> .\n").unwrap();
    assert_eq!(store.len(), 1);
    assert_eq!(store.entities().len(), 2);
    assert_eq!(store.relations().len(), 1);
    assert_eq!(store.entities().iter().collect::<Vec<_>>(), ["http://ex/a", "http://ex/b"]);
}

#[test]
fn empty_input() {
    let store = TripleStore::parse_str("").unwrap();
    assert!(store.is_empty());
    assert!(store.entities().is_empty());
    assert!(store.relations().is_empty());
}

#[test]
fn missing_object_is_malformed_line_one() {
    let err = TripleStore::parse_str("<http://ex/a> <http://ex/p>").unwrap_err();
    assert!(matches!(err, KgError::MalformedLine { line: 1, .. }), "{err:?}");
}

#[test]
fn malformed_fixtures_report_their_line() {
    let fixtures = [
        "<http://ex/a> <http://ex/p> <http://ex/b>",
        "<http://ex/a> <http://ex/p> <http://ex/b> . extra",
        "<http://ex/a> \"lit\" <http://ex/b> .",
        "\"lit\" <http://ex/p> <http://ex/b> .",
        "<http://ex/a> <http://ex/p> \"unterminated .",
        "<http://ex/a> <http://ex/p> \"bad\\q\" .",
        "<http://ex/a> <http://ex/p> \"x\"@ .",
        "<http://ex/a> <http://ex/p> \"x\"^^<rel> .",
        "<relative> <http://ex/p> <http://ex/b> .",
        "<http://ex/a b> <http://ex/p> <http://ex/b> .",
        "<http://ex/a> _:b1 <http://ex/b> .",
        "<http://ex/a> <http://ex/p> <http://ex/b\\u00> .",
    ];
    for bad in fixtures {
        let input = format!("# comment\n<http://ex/x> <http://ex/p> <http://ex/y> .\n{bad}\n");
        match TripleStore::parse_str(&input) {
            Err(KgError::MalformedLine { line, .. }) => assert_eq!(line, 3, "{bad}"),
            other => panic!("{bad:?} gave {other:?}"),
        }
    }
}

#[test]
fn lenient_mode_skips_and_reports() {
    let input = "<http://ex/a> <http://ex/p> <http://ex/b> .\nnot a triple\n<http://ex/a> <http://ex/p> <http://ex/b> .\n";
    let (store, report) =
        TripleStore::parse_ntriples_with(input.as_bytes(), ParseOptions { lenient: true, ..Default::default() })
            .unwrap();
    assert_eq!(store.len(), 1);
    assert_eq!(report.statements, 2);
    assert_eq!(report.duplicates, 1);
    assert_eq!(report.malformed.len(), 1);
    assert_eq!(report.malformed[0].0, 2);
}

#[test]
fn literals_are_kept_but_only_catalogued_on_request() {
    let input = "<http://ex/a> <http://ex/name> \"Alpha\"@en .\n<http://ex/a> <http://ex/p> <http://ex/b> .\n";
    let store = TripleStore::parse_str(input).unwrap();
    assert_eq!(store.len(), 2);
    assert_eq!(store.entities().len(), 2);
    let set = store.molecules_for_key("http://ex/a", 10).unwrap();
    assert_eq!(set.len(), 1);

    let (with, _) = TripleStore::parse_ntriples_with(
        input.as_bytes(),
        ParseOptions { include_literals: true, ..Default::default() },
    )
    .unwrap();
    assert_eq!(with.entities().len(), 3);
    assert_eq!(with.molecules_for_key("http://ex/a", 10).unwrap().len(), 2);
}

#[test]
fn molecule_examples() {
    let store = TripleStore::from_triples([t("e", "p", "x"), t("e", "q", "y"), t("z", "p", "e")], false);
    let e = store.entity_id(&iri("e")).unwrap();
    let set = store.molecules_for(e, DEFAULT_MOLECULE_LIMIT).unwrap();
    assert_eq!(set.len(), 3);
    assert!(!set.truncated);
    assert_eq!(set.molecules, vec![t("e", "p", "x"), t("e", "q", "y"), t("z", "p", "e")]);

    let many = TripleStore::from_triples((0..600).map(|i| t("hub", "p", &format!("n{i}"))), false);
    let hub = many.entity_id(&iri("hub")).unwrap();
    let set = many.molecules_for(hub, DEFAULT_MOLECULE_LIMIT).unwrap();
    assert_eq!(set.len(), 500);
    assert!(set.truncated);

    let empty = store.molecules_for_key(&iri("nobody"), 500).unwrap();
    assert!(empty.is_empty());
    assert!(!empty.truncated);
}

#[test]
fn molecule_errors() {
    let store = TripleStore::from_triples([t("a", "p", "b")], false);
    assert_eq!(store.molecules_for(EntityId(0), 0).unwrap_err(), KgError::InvalidLimit);
    assert_eq!(store.molecules_for(EntityId(9), 5).unwrap_err(), KgError::UnknownEntity(9));
}

#[test]
fn self_loop_counts_once() {
    let store = TripleStore::from_triples([t("a", "p", "a"), t("a", "p", "b")], false);
    assert_eq!(store.molecules_for_key(&iri("a"), 10).unwrap().len(), 2);
}

#[test]
fn escapes_round_trip() {
    let input = concat!(
        "<http://ex/caf\\u00E9> <http://ex/p> \"tab\\there \\\"quoted\\\" \\U0001F600\" .\n",
        "_:b0 <http://ex/p> \"42\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
    );
    let store = TripleStore::parse_str(input).unwrap();
    assert_eq!(store.triples()[0].subject(), &Term::iri("http://ex/café"));
    assert_eq!(
        store.triples()[0].object(),
        &Term::Literal(Literal { lexical: "tab\there \"quoted\" 😀".into(), tag: LiteralTag::Plain })
    );
    let again = TripleStore::parse_str(&store.to_ntriples()).unwrap();
    assert_eq!(again, store);
}

#[test]
fn ten_thousand_triple_round_trip() {
    let triples = (0..10_000).map(|i| {
        let obj = if i % 7 == 0 {
            Term::Literal(Literal { lexical: format!("value \"{i}\"\n"), tag: LiteralTag::Lang("en".into()) })
        } else {
            Term::iri(iri(&format!("e{}", (i * 31) % 2000)))
        };
        Triple::new(Term::iri(iri(&format!("e{}", i % 1500))), iri(&format!("r{}", i % 13)), obj).unwrap()
    });
    let store = TripleStore::from_triples(triples, false);
    assert_eq!(store.len(), 10_000);
    let text = store.to_ntriples();
    let again = TripleStore::parse_str(&text).unwrap();
    assert_eq!(again, store);
    assert_eq!(again.to_ntriples(), text);
}

fn term_iri() -> impl Strategy<Value = String> {
    "[a-z0-9éß_./#%~-]{1,8}".prop_map(|s| format!("http://ex.org/{s}"))
}

fn literal() -> impl Strategy<Value = Term> {
    let tag = prop_oneof![
        Just(LiteralTag::Plain),
        "[a-z]{2}(-[A-Z]{2})?".prop_map(LiteralTag::Lang),
        term_iri().prop_map(LiteralTag::Datatype),
    ];
    ("\\PC{0,12}|[\"\\\\\n\r\t]{1,4}", tag).prop_map(|(lexical, tag)| Term::Literal(Literal { lexical, tag }))
}

fn triple() -> impl Strategy<Value = Triple> {
    let subject = prop_oneof![term_iri().prop_map(Term::Iri), "[a-z][a-z0-9]{0,5}".prop_map(Term::Blank)];
    let object = prop_oneof![3 => term_iri().prop_map(Term::Iri), 1 => literal()];
    (subject, term_iri(), object).prop_map(|(s, p, o)| Triple::new(s, p, o).unwrap())
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(triples in prop::collection::vec(triple(), 0..40), lits: bool) {
        let store = TripleStore::from_triples(triples, lits);
        let (again, _) = TripleStore::parse_ntriples_with(
            store.to_ntriples().as_bytes(),
            ParseOptions { include_literals: lits, ..Default::default() },
        ).unwrap();
        prop_assert_eq!(&again, &store);
        let (third, _) = TripleStore::parse_ntriples_with(
            store.to_ntriples().as_bytes(),
            ParseOptions { include_literals: lits, ..Default::default() },
        ).unwrap();
        prop_assert_eq!(third, again);
    }

    #[test]
    fn molecule_index_matches_linear_scan(
        edges in prop::collection::vec((0usize..12, 0usize..3, 0usize..12), 0..60),
        probes in prop::collection::vec((0usize..14, 1usize..8), 4..20),
    ) {
        let store = TripleStore::from_triples(
            edges.iter().map(|&(s, p, o)| t(&format!("n{s}"), &format!("r{p}"), &format!("n{o}"))),
            false,
        );
        for (node, limit) in probes {
            let key = iri(&format!("n{node}"));
            let set = store.molecules_for_key(&key, limit).unwrap();
            let subject_hits = store.triples().iter().filter(|t| t.subject() == &Term::iri(&key));
            let object_hits = store
                .triples()
                .iter()
                .filter(|t| t.object() == &Term::iri(&key) && t.subject() != &Term::iri(&key));
            let all: Vec<Triple> = subject_hits.chain(object_hits).cloned().collect();
            prop_assert_eq!(set.truncated, all.len() > limit);
            prop_assert_eq!(&set.molecules[..], &all[..all.len().min(limit)]);
        }
    }

    #[test]
    fn parsing_is_deterministic(triples in prop::collection::vec(triple(), 0..30)) {
        let text = TripleStore::from_triples(triples, false).to_ntriples();
        let a = TripleStore::parse_str(&text).unwrap();
        let b = TripleStore::parse_str(&text).unwrap();
        prop_assert_eq!(a.entities(), b.entities());
        prop_assert_eq!(a.encoded(), b.encoded());
    }
}
