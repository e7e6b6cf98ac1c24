use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(String),
    #[error("embedder returned dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("embedding contains a non-finite component")]
    NonFinite,
}

/// A dense embedding with its Euclidean norm cached. The norm is always
/// strictly positive; zero vectors are represented by [`Embedding::Empty`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbedError::ZeroNorm);
        }
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Cosine similarity, clamped to `[-1, 1]`. Dimensions must agree.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        debug_assert_eq!(self.dimension(), other.dimension());
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        (dot / (self.norm * other.norm)).clamp(-1.0, 1.0)
    }
}

/// Result of embedding a text. Text with no tokens maps to the `Empty`
/// sentinel, which is never searchable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Embedding {
    Dense(EmbeddingVector),
    Empty { dimension: usize },
}

impl Embedding {
    pub fn dimension(&self) -> usize {
        match self {
            Embedding::Dense(v) => v.dimension(),
            Embedding::Empty { dimension } => *dimension,
        }
    }

    pub fn is_searchable(&self) -> bool {
        matches!(self, Embedding::Dense(_))
    }

    pub fn as_vector(&self) -> Option<&EmbeddingVector> {
        match self {
            Embedding::Dense(v) => Some(v),
            Embedding::Empty { .. } => None,
        }
    }

    pub fn into_vector(self) -> Option<EmbeddingVector> {
        match self {
            Embedding::Dense(v) => Some(v),
            Embedding::Empty { .. } => None,
        }
    }
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, EmbedError>;
}

pub const DEFAULT_DIMENSION: usize = 256;

/// Deterministic offline embedder: signed feature hashing of word tokens and
/// character trigrams into `dimension` buckets, then L2 normalization.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

const TRIGRAM_WEIGHT: f64 = 0.5;

fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64 ^ seed;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn add(&self, acc: &mut [f64], feature: &[u8], weight: f64, seed: u64) {
        let h = fnv1a(feature, seed);
        let bucket = (h % self.dimension as u64) as usize;
        let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign * weight;
    }
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EmbedError> {
        let tokens = text::tokens(text);
        if tokens.is_empty() {
            return Ok(Embedding::Empty { dimension: self.dimension });
        }
        let mut acc = vec![0.0; self.dimension];
        for tok in &tokens {
            self.add(&mut acc, tok.as_bytes(), 1.0, 0);
            let padded: Vec<char> = format!(" {tok} ").chars().collect();
            for w in padded.windows(3) {
                let gram: String = w.iter().collect();
                self.add(&mut acc, gram.as_bytes(), TRIGRAM_WEIGHT, 0x9e37_79b9);
            }
        }
        match EmbeddingVector::new(acc) {
            Ok(mut v) => {
                // L2-normalize so the cached norm is 1 up to rounding.
                let norm = v.norm;
                v.values.iter_mut().for_each(|x| *x /= norm);
                Ok(Embedding::Dense(EmbeddingVector::new(v.values)?))
            }
            // Every feature cancelled out; treat like empty text.
            Err(EmbedError::ZeroNorm) => Ok(Embedding::Empty { dimension: self.dimension }),
            Err(e) => Err(e),
        }
    }
}
