use std::path::PathBuf;

use tutor_core::context::{load_corpus, parse_corpus, write_corpus, DocSource, HashingEmbedder, VectorIndex};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/hw1.corpus")
}

#[test]
fn homework_fixture_has_nine_problems() {
    let corpus = load_corpus(fixture()).unwrap();
    assert_eq!(corpus.problems().len(), 9);
    for index in ["2.5-1", "3.4-4"] {
        let record = corpus.lookup_exact(index).unwrap();
        assert!(record.has_reference_solution());
        assert_eq!(record.problem_index, index);
    }
    assert!(corpus.lookup_exact("9.9-9").is_none());
}

#[test]
fn linked_documents_resolve() {
    let corpus = load_corpus(fixture()).unwrap();
    let linked: Vec<_> = corpus.documents_for("2.5-1").map(|d| d.doc_id.as_str()).collect();
    assert_eq!(linked, ["p251-notes"]);
    assert_eq!(corpus.document("psc-explainer").unwrap().source, DocSource::ConceptExplainer);
}

#[test]
fn fixture_round_trips() {
    let corpus = load_corpus(fixture()).unwrap();
    let again = parse_corpus(&write_corpus(&corpus)).unwrap();
    assert_eq!(again.problems(), corpus.problems());
    assert_eq!(again.documents(), corpus.documents());
}

#[test]
fn every_fixture_document_is_searchable() {
    let corpus = load_corpus(fixture()).unwrap();
    let index = VectorIndex::build(corpus.documents(), &HashingEmbedder::default()).unwrap();
    assert_eq!(index.searchable_len(), corpus.documents().len());
}

#[test]
fn empty_file_is_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.corpus");
    std::fs::write(&path, "").unwrap();
    assert!(load_corpus(&path).unwrap().is_empty());
}
