use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::ContextDocument;
use super::embed::{EmbedError, Embedder, Embedding, EmbeddingVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("dimension mismatch: index has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    Exact,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub document: ContextDocument,
    pub score: f64,
    pub mode: RetrievalMode,
}

/// Ranking order for retrieval lists: score descending, then doc_id ascending.
pub fn ranking_order(a: &RetrievalResult, b: &RetrievalResult) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.document.doc_id.cmp(&b.document.doc_id))
}

#[derive(Debug, Clone)]
struct Entry {
    doc: ContextDocument,
    embedding: Option<EmbeddingVector>,
}

/// Exact cosine index with full-scan search.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    dimension: usize,
    entries: BTreeMap<String, Entry>,
}

impl VectorIndex {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            entries: BTreeMap::new(),
        }
    }

    /// Builds an index from documents, embedding each body.
    pub fn build<'a>(
        docs: impl IntoIterator<Item = &'a ContextDocument>,
        embedder: &dyn Embedder,
    ) -> Result<Self, IndexError> {
        let mut index = Self::new(embedder.dimension());
        for doc in docs {
            index.upsert_document(doc.clone(), embedder)?;
        }
        Ok(index)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of stored documents, searchable or not.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn searchable_len(&self) -> usize {
        self.entries.values().filter(|e| e.embedding.is_some()).count()
    }

    pub fn get(&self, doc_id: &str) -> Option<&ContextDocument> {
        self.entries.get(doc_id).map(|e| &e.doc)
    }

    pub fn embedding(&self, doc_id: &str) -> Option<&EmbeddingVector> {
        self.entries.get(doc_id).and_then(|e| e.embedding.as_ref())
    }

    /// Inserts or replaces a document with a precomputed embedding.
    pub fn insert_embedded(&mut self, doc: ContextDocument, embedding: Embedding) -> Result<(), IndexError> {
        self.check_dimension(embedding.dimension())?;
        self.entries.insert(
            doc.doc_id.clone(),
            Entry {
                doc,
                embedding: embedding.into_vector(),
            },
        );
        Ok(())
    }

    /// Embeds the document body and inserts it, replacing any document with
    /// the same id.
    pub fn upsert_document(&mut self, doc: ContextDocument, embedder: &dyn Embedder) -> Result<(), IndexError> {
        let embedding = embedder.embed(&doc.body)?;
        self.insert_embedded(doc, embedding)
    }

    fn check_dimension(&self, got: usize) -> Result<(), IndexError> {
        if got != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                got,
            });
        }
        Ok(())
    }

    /// Top-`k` documents by cosine similarity to `query`. Documents whose
    /// body embedded to the empty sentinel are skipped.
    pub fn search_similar(&self, query: &EmbeddingVector, k: NonZeroUsize) -> Result<Vec<RetrievalResult>, IndexError> {
        self.check_dimension(query.dimension())?;
        let mut scored: Vec<(f64, &Entry)> = self
            .entries
            .values()
            .filter_map(|e| e.embedding.as_ref().map(|v| (query.cosine(v), e)))
            .collect();
        let cmp = |a: &(f64, &Entry), b: &(f64, &Entry)| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.doc.doc_id.cmp(&b.1.doc.doc_id))
        };
        let k = k.get().min(scored.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(score, e)| RetrievalResult {
                document: e.doc.clone(),
                score,
                mode: RetrievalMode::Similarity,
            })
            .collect())
    }
}

/// Copy-on-write handle for concurrent readers and a single writer. Readers
/// search an immutable snapshot; an upsert swaps in a new snapshot whole.
#[derive(Debug)]
pub struct SharedIndex {
    current: RwLock<Arc<VectorIndex>>,
}

impl SharedIndex {
    pub fn new(index: VectorIndex) -> Self {
        Self {
            current: RwLock::new(Arc::new(index)),
        }
    }

    pub fn snapshot(&self) -> Arc<VectorIndex> {
        Arc::clone(&self.current.read().expect("index lock poisoned"))
    }

    pub fn upsert_document(&self, doc: ContextDocument, embedder: &dyn Embedder) -> Result<(), IndexError> {
        let embedding = embedder.embed(&doc.body)?;
        let mut guard = self.current.write().expect("index lock poisoned");
        let mut next = VectorIndex::clone(&guard);
        next.insert_embedded(doc, embedding)?;
        *guard = Arc::new(next);
        Ok(())
    }
}
