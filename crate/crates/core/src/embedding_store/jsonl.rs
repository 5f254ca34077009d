//! JSON-lines debug variant of CASTEMB, meant for hand-written fixtures.
//!
//! ```text
//! {"castemb": 1, "dim": 4}
//! {"doc": 0, "vector": [1, 0, 0, 0]}
//! {"occ": 0, "word": "bank", "vector": [0, 1, 0, 0]}
//! ```
//!
//! The header comes first, then document records in id order, then
//! occurrence records ordered by document. Blank lines are ignored.

use serde::Deserialize;
use serde_json::json;

use super::{EmbeddingStore, OccurrenceEmbedding, StoreError, FORMAT_VERSION};

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Header { castemb: u32, dim: usize },
    Doc { doc: usize, vector: Vec<f32> },
    Occ { occ: usize, word: String, vector: Vec<f32> },
}

pub fn parse_castemb_jsonl(text: &str) -> Result<EmbeddingStore, StoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<Line>(l).map(|v| (i + 1, v)).map_err(|e| StoreError::Json {
                line: i + 1,
                message: e.to_string(),
            })
        });
    let dim = match lines.next().transpose()? {
        Some((_, Line::Header { castemb, dim })) => {
            if castemb != FORMAT_VERSION {
                return Err(StoreError::UnsupportedVersion(castemb));
            }
            dim
        }
        Some((line, _)) => {
            return Err(StoreError::Json {
                line,
                message: "first record must be the {\"castemb\", \"dim\"} header".into(),
            })
        }
        None => return Err(StoreError::BadMagic),
    };
    let mut docs: Vec<Vec<f32>> = Vec::new();
    let mut occurrences = Vec::new();
    for item in lines {
        let (line, record) = item?;
        match record {
            Line::Header { .. } => {
                return Err(StoreError::Json {
                    line,
                    message: "duplicate header".into(),
                })
            }
            Line::Doc { doc, vector } => {
                if doc != docs.len() || !occurrences.is_empty() {
                    return Err(StoreError::Json {
                        line,
                        message: format!(
                            "document records must be consecutive from 0 and precede occurrences (got {doc})"
                        ),
                    });
                }
                docs.push(vector);
            }
            Line::Occ { occ, word, vector } => occurrences.push(OccurrenceEmbedding {
                word,
                doc_id: occ,
                vector,
            }),
        }
    }
    EmbeddingStore::new(dim, docs, occurrences)
}

pub fn to_castemb_jsonl(store: &EmbeddingStore) -> Result<String, StoreError> {
    store.validate()?;
    let mut out = String::new();
    out.push_str(&json!({"castemb": FORMAT_VERSION, "dim": store.dim}).to_string());
    out.push('\n');
    for i in 0..store.n_docs() {
        out.push_str(&json!({"doc": i, "vector": store.doc_embedding(i)}).to_string());
        out.push('\n');
    }
    for o in &store.occurrences {
        out.push_str(&json!({"occ": o.doc_id, "word": o.word, "vector": o.vector}).to_string());
        out.push('\n');
    }
    Ok(out)
}
