//! Document and per-occurrence word embeddings, and the CASTEMB file format.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "CASTEMB1" | u32 version = 1 | u32 dim | u64 n_docs | u64 n_occurrences
//! n_docs x dim x f32                          document embeddings
//! n_occurrences x (u64 doc_id | u32 word_len | word bytes | dim x f32)
//! ```
//!
//! A JSON-lines variant exists for hand-written fixtures; see [`jsonl`].

mod binary;
pub mod jsonl;
pub mod synthetic;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use binary::{decode_castemb, encode_castemb};
pub use synthetic::{planted_corpus, synthetic_provider, PlantedCorpus, PlantedSpec, SyntheticConfig};

pub const MAGIC: &[u8; 8] = b"CASTEMB1";
pub const FORMAT_VERSION: u32 = 1;
/// Allowed deviation of a stored vector's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// Location of a record inside a store, used in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    Document(usize),
    Occurrence(usize),
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Record::Document(i) => write!(f, "document record {i}"),
            Record::Occurrence(i) => write!(f, "occurrence record {i}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad magic bytes: not a CASTEMB file")]
    BadMagic,
    #[error("unsupported CASTEMB version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("truncated at byte {offset}: expected {needed} more bytes")]
    Truncated { offset: u64, needed: u64 },
    #[error("{extra} trailing bytes after the last record at byte {offset}")]
    TrailingBytes { offset: u64, extra: u64 },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("{record}: word is not valid UTF-8")]
    InvalidUtf8 { record: Record },
    #[error("{record}: expected {expected} values, found {found}")]
    DimMismatch {
        record: Record,
        expected: usize,
        found: usize,
    },
    #[error("{record}: non-finite value at component {component}")]
    NonFinite { record: Record, component: usize },
    #[error("{record}: L2 norm {norm} is not within {NORM_TOLERANCE} of 1")]
    NotUnitNorm { record: Record, norm: f64 },
    #[error("{record}: occurrence references unknown document {doc_id} (store has {n_docs})")]
    UnknownDocument {
        record: Record,
        doc_id: u64,
        n_docs: usize,
    },
    #[error("{record}: occurrences must be ordered by document id ({doc_id} after {previous})")]
    OutOfOrder {
        record: Record,
        doc_id: usize,
        previous: usize,
    },
    #[error("{record}: empty word")]
    EmptyWord { record: Record },
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
}

impl StoreError {
    /// The record an invariant violation was found in, if any.
    pub fn record(&self) -> Option<Record> {
        match self {
            StoreError::InvalidUtf8 { record }
            | StoreError::DimMismatch { record, .. }
            | StoreError::NonFinite { record, .. }
            | StoreError::NotUnitNorm { record, .. }
            | StoreError::UnknownDocument { record, .. }
            | StoreError::OutOfOrder { record, .. }
            | StoreError::EmptyWord { record } => Some(*record),
            _ => None,
        }
    }
}

/// One contextualized embedding of `word` inside document `doc_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceEmbedding {
    pub word: String,
    pub doc_id: usize,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStore {
    pub dim: usize,
    /// Row-major `n_docs x dim`.
    pub doc_embeddings: Vec<f32>,
    /// Ordered by `doc_id`.
    pub occurrences: Vec<OccurrenceEmbedding>,
}

impl EmbeddingStore {
    pub fn new(
        dim: usize,
        doc_embeddings: Vec<Vec<f32>>,
        occurrences: Vec<OccurrenceEmbedding>,
    ) -> Result<Self, StoreError> {
        for (i, d) in doc_embeddings.iter().enumerate() {
            if d.len() != dim {
                return Err(StoreError::DimMismatch {
                    record: Record::Document(i),
                    expected: dim,
                    found: d.len(),
                });
            }
        }
        let store = EmbeddingStore {
            dim,
            doc_embeddings: doc_embeddings.into_iter().flatten().collect(),
            occurrences,
        };
        store.validate()?;
        Ok(store)
    }

    pub fn n_docs(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.doc_embeddings.len() / self.dim
        }
    }

    pub fn doc_embedding(&self, doc_id: usize) -> &[f32] {
        &self.doc_embeddings[doc_id * self.dim..(doc_id + 1) * self.dim]
    }

    pub fn doc_embeddings_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n_docs())
            .map(|i| crate::vector::to_f64(self.doc_embedding(i)))
            .collect()
    }

    /// Checks every stored invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.dim == 0 {
            return Err(StoreError::ZeroDimension);
        }
        if self.doc_embeddings.len() % self.dim != 0 {
            return Err(StoreError::DimMismatch {
                record: Record::Document(self.doc_embeddings.len() / self.dim),
                expected: self.dim,
                found: self.doc_embeddings.len() % self.dim,
            });
        }
        let n_docs = self.n_docs();
        for i in 0..n_docs {
            check_unit_vector(self.doc_embedding(i), Record::Document(i))?;
        }
        let mut previous = 0usize;
        for (k, occ) in self.occurrences.iter().enumerate() {
            let record = Record::Occurrence(k);
            if occ.doc_id >= n_docs {
                return Err(StoreError::UnknownDocument {
                    record,
                    doc_id: occ.doc_id as u64,
                    n_docs,
                });
            }
            if occ.doc_id < previous {
                return Err(StoreError::OutOfOrder {
                    record,
                    doc_id: occ.doc_id,
                    previous,
                });
            }
            previous = occ.doc_id;
            if occ.word.is_empty() {
                return Err(StoreError::EmptyWord { record });
            }
            if occ.vector.len() != self.dim {
                return Err(StoreError::DimMismatch {
                    record,
                    expected: self.dim,
                    found: occ.vector.len(),
                });
            }
            check_unit_vector(&occ.vector, record)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> StoreSummary {
        let mut stats = NormStats::default();
        for i in 0..self.n_docs() {
            stats.push(crate::vector::norm_f32(self.doc_embedding(i)));
        }
        let doc_norms = stats;
        let mut stats = NormStats::default();
        for occ in &self.occurrences {
            stats.push(crate::vector::norm_f32(&occ.vector));
        }
        StoreSummary {
            dim: self.dim,
            n_docs: self.n_docs(),
            n_occurrences: self.occurrences.len(),
            doc_norms,
            occurrence_norms: stats,
        }
    }
}

pub(crate) fn check_unit_vector(v: &[f32], record: Record) -> Result<(), StoreError> {
    if let Some(component) = v.iter().position(|x| !x.is_finite()) {
        return Err(StoreError::NonFinite { record, component });
    }
    let norm = crate::vector::norm_f32(v);
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(StoreError::NotUnitNorm { record, norm });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Default for NormStats {
    fn default() -> Self {
        NormStats {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
        }
    }
}

impl NormStats {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        self.mean += (x - self.mean) / self.count as f64;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StoreSummary {
    pub dim: usize,
    pub n_docs: usize,
    pub n_occurrences: usize,
    pub doc_norms: NormStats,
    pub occurrence_norms: NormStats,
}

/// Reads a binary CASTEMB file, or its JSON-lines variant when the file
/// starts with `{`.
pub fn read_castemb(path: &Path) -> Result<EmbeddingStore, StoreError> {
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(MAGIC) {
        decode_castemb(&bytes)
    } else if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        let text = std::str::from_utf8(&bytes).map_err(|e| StoreError::Json {
            line: 0,
            message: e.to_string(),
        })?;
        jsonl::parse_castemb_jsonl(text)
    } else {
        Err(StoreError::BadMagic)
    }
}

/// Validates the store, then writes the binary format.
pub fn write_castemb(store: &EmbeddingStore, path: &Path) -> Result<(), StoreError> {
    let bytes = encode_castemb(store)?;
    fs::write(path, bytes).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}
