//! Documents, tokenization and the vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MIN_TOKEN_LEN: usize = 2;
pub const DEFAULT_MIN_WORD_FREQ: usize = 3;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Input layout of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// One document per line.
    PlainLines,
    /// One JSON object per line with a string field `text`.
    Jsonl,
}

impl CorpusFormat {
    /// `.jsonl` / `.ndjson` files are JSON-lines, everything else plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => CorpusFormat::Jsonl,
            _ => CorpusFormat::PlainLines,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: usize,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: usize, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        Document {
            id,
            raw_text,
            tokens,
        }
    }

    /// Documents without tokens are kept so ids stay aligned with embeddings.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Builds documents with dense ids from raw strings.
pub fn documents_from_texts<I, S>(texts: I) -> Vec<Document>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    texts
        .into_iter()
        .enumerate()
        .map(|(id, t)| Document::new(id, t))
        .collect()
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&content, format).map_err(|(line, message)| CorpusError::MalformedRecord {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses corpus text; errors carry a 1-based line number.
pub fn parse_corpus(content: &str, format: CorpusFormat) -> Result<Vec<Document>, (usize, String)> {
    let mut docs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let text = match format {
            CorpusFormat::PlainLines => line.to_string(),
            CorpusFormat::Jsonl => {
                if line.trim().is_empty() {
                    return Err((idx + 1, "blank line in JSON-lines corpus".into()));
                }
                serde_json::from_str::<JsonRecord>(line)
                    .map_err(|e| (idx + 1, e.to_string()))?
                    .text
            }
        };
        docs.push(Document::new(docs.len(), text));
    }
    Ok(docs)
}

pub fn tokenize(raw_text: &str) -> Vec<String> {
    tokenize_with_min_len(raw_text, DEFAULT_MIN_TOKEN_LEN)
}

/// Splits on every non-alphanumeric character, lowercases, and drops
/// digit-only tokens and tokens shorter than `min_len` characters.
pub fn tokenize_with_min_len(raw_text: &str, min_len: usize) -> Vec<String> {
    raw_text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| t.chars().count() >= min_len)
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .collect()
}

/// Reads a stopword file: one word per line, blank lines ignored.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(content
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCounts {
    pub corpus_frequency: usize,
    pub document_frequency: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entries: BTreeMap<String, WordCounts>,
    pub stopwords: BTreeSet<String>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&WordCounts> {
        self.entries.get(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

pub fn build_vocabulary(docs: &[Document], min_word_freq: usize) -> Vocabulary {
    build_vocabulary_with_stopwords(docs, min_word_freq, BTreeSet::new())
}

/// Counts corpus and document frequencies, keeping words with
/// `corpus_frequency >= min_word_freq` that are not stopwords.
pub fn build_vocabulary_with_stopwords(
    docs: &[Document],
    min_word_freq: usize,
    stopwords: BTreeSet<String>,
) -> Vocabulary {
    let min_word_freq = min_word_freq.max(1);
    let mut counts: BTreeMap<String, WordCounts> = BTreeMap::new();
    for doc in docs {
        let mut seen: HashSet<&str> = HashSet::new();
        for token in &doc.tokens {
            let entry = counts.entry(token.clone()).or_insert(WordCounts {
                corpus_frequency: 0,
                document_frequency: 0,
            });
            entry.corpus_frequency += 1;
            if seen.insert(token.as_str()) {
                entry.document_frequency += 1;
            }
        }
    }
    counts.retain(|w, c| c.corpus_frequency >= min_word_freq && !stopwords.contains(w));
    Vocabulary {
        entries: counts,
        stopwords,
    }
}
