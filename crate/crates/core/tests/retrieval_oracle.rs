//! Similarity search against a brute-force scan.

use std::num::NonZeroUsize;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tutor_core::context::{ContextDocument, DocSource, Embedder, Embedding, EmbeddingVector, VectorIndex};

fn random_vector(rng: &mut StdRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[test]
fn top_k_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(7);
    let d = 32;
    let docs: Vec<(String, Vec<f64>)> = (0..200).map(|i| (format!("doc-{i:03}"), random_vector(&mut rng, d))).collect();
    let mut index = VectorIndex::new(d);
    for (id, v) in &docs {
        index
            .insert_embedded(
                ContextDocument::new(id.clone(), DocSource::LectureNotes, "body"),
                Embedding::Dense(EmbeddingVector::new(v.clone()).unwrap()),
            )
            .unwrap();
    }
    for _ in 0..50 {
        let q = random_vector(&mut rng, d);
        let got = index
            .search_similar(&EmbeddingVector::new(q.clone()).unwrap(), NonZeroUsize::new(5).unwrap())
            .unwrap();
        let mut expected: Vec<(f64, &str)> = docs.iter().map(|(id, v)| (oracle_cosine(&q, v), id.as_str())).collect();
        expected.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        assert_eq!(got.len(), 5);
        for (g, e) in got.iter().zip(&expected) {
            assert_eq!(g.document.doc_id, e.1);
            assert!((g.score - e.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn empty_embedding_is_not_searchable() {
    let embedder = tutor_core::context::HashingEmbedder::default();
    let mut index = VectorIndex::new(embedder.dimension());
    index
        .upsert_document(ContextDocument::new("blank", DocSource::LectureNotes, "   "), &embedder)
        .unwrap();
    index
        .upsert_document(ContextDocument::new("kcl", DocSource::LectureNotes, "Kirchhoff current law"), &embedder)
        .unwrap();
    assert_eq!(index.len(), 2);
    assert_eq!(index.searchable_len(), 1);
    let q = embedder.embed("current law").unwrap().into_vector().unwrap();
    let hits = index.search_similar(&q, NonZeroUsize::new(10).unwrap()).unwrap();
    assert_eq!(hits.len(), 1);
}
