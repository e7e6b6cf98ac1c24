//! The problem-specific context database: exact-match problem records and a
//! cosine-similarity document index.

mod corpus;
mod embed;
mod format;
mod index;

use std::collections::HashSet;
use std::num::NonZeroUsize;

pub use corpus::{default_chapter, load_corpus, ContextDocument, Corpus, CorpusError, DocSource, ProblemRecord};
pub use embed::{EmbedError, Embedder, Embedding, EmbeddingVector, HashingEmbedder, DEFAULT_DIMENSION};
pub use format::{parse_corpus, write_corpus};
pub use index::{ranking_order, IndexError, RetrievalMode, RetrievalResult, SharedIndex, VectorIndex};

/// How many similarity hits go into a prompt and the score below which they
/// are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalSettings {
    pub k: NonZeroUsize,
    pub min_score: f64,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self {
            k: NonZeroUsize::new(4).expect("non-zero"),
            min_score: 0.15,
        }
    }
}

/// Context for one question: documents linked to the bound problem (exact,
/// score 1.0) followed by similarity hits for the question text above the
/// score floor, deduplicated and ranked.
pub fn retrieve_context(
    corpus: &Corpus,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    problem_index: Option<&str>,
    question: &str,
    settings: RetrievalSettings,
) -> Result<Vec<RetrievalResult>, IndexError> {
    let mut results: Vec<RetrievalResult> = problem_index
        .into_iter()
        .flat_map(|p| corpus.documents_for(p))
        .map(|doc| RetrievalResult {
            document: doc.clone(),
            score: 1.0,
            mode: RetrievalMode::Exact,
        })
        .collect();
    let mut seen: HashSet<String> = results.iter().map(|r| r.document.doc_id.clone()).collect();

    if let Some(query) = embedder.embed(question)?.into_vector() {
        for hit in index.search_similar(&query, settings.k)? {
            if hit.score >= settings.min_score && seen.insert(hit.document.doc_id.clone()) {
                results.push(hit);
            }
        }
    }
    results.sort_by(ranking_order);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Corpus, VectorIndex, HashingEmbedder) {
        let mut corpus = Corpus::new();
        corpus
            .insert_problem(ProblemRecord::new("2.5-1", "Find i through R2."))
            .unwrap();
        corpus
            .insert_document(
                ContextDocument::new("p251-notes", DocSource::ProblemNotes, "Node a joins R1 and R2.")
                    .linked_to("2.5-1"),
            )
            .unwrap();
        corpus
            .insert_document(ContextDocument::new(
                "kcl",
                DocSource::LectureNotes,
                "Kirchhoff's current law: currents entering a node sum to zero.",
            ))
            .unwrap();
        corpus
            .insert_document(ContextDocument::new(
                "psc",
                DocSource::ConceptExplainer,
                "Passive sign convention: current enters the positive terminal.",
            ))
            .unwrap();
        let e = HashingEmbedder::default();
        let index = VectorIndex::build(corpus.documents(), &e).unwrap();
        (corpus, index, e)
    }

    #[test]
    fn exact_docs_come_first_and_are_not_duplicated() {
        let (corpus, index, e) = fixture();
        let hits = retrieve_context(
            &corpus,
            &index,
            &e,
            Some("2.5-1"),
            "Node a joins R1 and R2.",
            RetrievalSettings::default(),
        )
        .unwrap();
        assert_eq!(hits[0].document.doc_id, "p251-notes");
        assert_eq!(hits[0].mode, RetrievalMode::Exact);
        assert_eq!(
            hits.iter().filter(|h| h.document.doc_id == "p251-notes").count(),
            1
        );
    }

    #[test]
    fn floor_drops_weak_hits() {
        let (corpus, index, e) = fixture();
        let strict = RetrievalSettings {
            min_score: 0.99,
            ..Default::default()
        };
        let hits = retrieve_context(&corpus, &index, &e, None, "kirchhoff current law node", strict).unwrap();
        assert!(hits.iter().all(|h| h.score >= 0.99));
        let loose = RetrievalSettings {
            min_score: -1.0,
            ..Default::default()
        };
        let hits = retrieve_context(&corpus, &index, &e, None, "kirchhoff current law node", loose).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0].document.doc_id, "kcl");
    }

    #[test]
    fn empty_question_retrieves_only_exact() {
        let (corpus, index, e) = fixture();
        let hits = retrieve_context(&corpus, &index, &e, Some("2.5-1"), "??", RetrievalSettings::default()).unwrap();
        assert_eq!(hits.len(), 1);
    }
}
