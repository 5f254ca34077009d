//! Corpus-contextualized word embeddings and self-similarity scores.
//!
//! A word's embedding is the mean of all of its contextualized occurrence
//! vectors in the corpus. Its self-similarity is the mean cosine similarity
//! over all unordered pairs of those occurrences. Functional words move with
//! their context and score low; topical words stay put and score high.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Vocabulary;
use crate::embedding_store::{EmbeddingStore, NORM_TOLERANCE};
use crate::vector::{norm, normalized};

pub const DEFAULT_SS_THRESHOLD: f64 = 0.4;

#[derive(Debug, Error, PartialEq)]
pub enum AggregationError {
    #[error("self-similarity needs at least two occurrences, got {0}")]
    InsufficientOccurrences(usize),
    #[error("occurrence {index} has norm {norm}; vectors must be unit length")]
    NotUnitNorm { index: usize, norm: f64 },
    #[error("occurrence {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordProfile {
    pub word: String,
    /// Raw mean of the occurrence vectors (not re-normalized).
    pub e_final: Vec<f64>,
    pub occurrence_count: usize,
    /// `None` until scored, and for words with a single occurrence.
    pub self_similarity: Option<f64>,
}

impl WordProfile {
    /// Unit-length copy of `e_final`, used for cosine comparisons.
    pub fn direction(&self) -> Option<Vec<f64>> {
        normalized(&self.e_final)
    }
}

fn check_unit(index: usize, v: &[f64]) -> Result<f64, AggregationError> {
    let n = norm(v);
    if !n.is_finite() || (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(AggregationError::NotUnitNorm { index, norm: n });
    }
    Ok(n)
}

/// Running per-word sum of occurrence directions.
#[derive(Debug, Clone)]
struct WordAccumulator {
    sum: Vec<f64>,
    count: usize,
}

impl WordAccumulator {
    fn finish(self, word: String) -> WordProfile {
        let p = self.count as f64;
        let ss = if self.count >= 2 {
            Some(pairwise_mean_from_sum(&self.sum, self.count))
        } else {
            None
        };
        WordProfile {
            word,
            e_final: self.sum.iter().map(|x| x / p).collect(),
            occurrence_count: self.count,
            self_similarity: ss,
        }
    }
}

/// Mean pairwise dot product over unordered pairs of `p` unit vectors whose
/// sum is `sum`: `(|sum|^2 - p) / (p (p - 1))`.
fn pairwise_mean_from_sum(sum: &[f64], p: usize) -> f64 {
    let p = p as f64;
    let sq: f64 = sum.iter().map(|x| x * x).sum();
    ((sq - p) / (p * (p - 1.0))).clamp(-1.0, 1.0)
}

/// Self-similarity of one word from its occurrence vectors.
///
/// Inputs must be unit length within the store tolerance; each is rescaled to
/// exact unit length in double precision before summing.
pub fn self_similarity<V: AsRef<[f64]>>(occurrences: &[V]) -> Result<f64, AggregationError> {
    if occurrences.len() < 2 {
        return Err(AggregationError::InsufficientOccurrences(occurrences.len()));
    }
    let dim = occurrences[0].as_ref().len();
    let mut sum = vec![0.0f64; dim];
    for (index, v) in occurrences.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(AggregationError::DimMismatch {
                index,
                expected: dim,
                found: v.len(),
            });
        }
        let n = check_unit(index, v)?;
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x / n;
        }
    }
    Ok(pairwise_mean_from_sum(&sum, occurrences.len()))
}

/// Averages occurrence vectors per vocabulary word and scores self-similarity
/// in one pass over the store.
///
/// Occurrences of words outside the vocabulary are skipped. Vocabulary words
/// with no occurrence records are left out of the result.
pub fn aggregate_word_embeddings(
    store: &EmbeddingStore,
    vocab: &Vocabulary,
) -> Result<BTreeMap<String, WordProfile>, AggregationError> {
    let dim = store.dim;
    let mut acc: BTreeMap<&str, WordAccumulator> = BTreeMap::new();
    for (index, occ) in store.occurrences.iter().enumerate() {
        if !vocab.contains(&occ.word) {
            continue;
        }
        if occ.vector.len() != dim {
            return Err(AggregationError::DimMismatch {
                index,
                expected: dim,
                found: occ.vector.len(),
            });
        }
        let v: Vec<f64> = occ.vector.iter().map(|&x| x as f64).collect();
        let n = check_unit(index, &v)?;
        let entry = acc.entry(occ.word.as_str()).or_insert_with(|| WordAccumulator {
            sum: vec![0.0; dim],
            count: 0,
        });
        for (s, x) in entry.sum.iter_mut().zip(&v) {
            *s += x / n;
        }
        entry.count += 1;
    }
    let missing = vocab.words().filter(|w| !acc.contains_key(w)).count();
    if missing > 0 {
        log::warn!("{missing} vocabulary words have no occurrence embeddings and are skipped");
    }
    Ok(acc
        .into_iter()
        .map(|(w, a)| (w.to_string(), a.finish(w.to_string())))
        .collect())
}

/// Words whose self-similarity is at least `threshold`. Words without a score
/// (single occurrence) are never candidates.
pub fn filter_by_threshold(
    profiles: &BTreeMap<String, WordProfile>,
    threshold: f64,
) -> BTreeSet<String> {
    profiles
        .values()
        .filter(|p| p.self_similarity.is_some_and(|ss| ss >= threshold))
        .map(|p| p.word.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    pub self_similarity: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSection {
    pub threshold: f64,
    /// Highest-scoring words strictly below the threshold, descending.
    pub below: Vec<ScoredWord>,
    pub retained: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsReport {
    pub top: Vec<ScoredWord>,
    pub sections: Vec<ThresholdSection>,
    pub insufficient_occurrences: Vec<String>,
    pub scored_words: usize,
}

/// Descending score, ties by word.
fn ranking(a: &ScoredWord, b: &ScoredWord) -> Ordering {
    b.self_similarity
        .total_cmp(&a.self_similarity)
        .then_with(|| a.word.cmp(&b.word))
}

/// Sorted self-similarity table: the `per_column` highest-scoring words, then
/// for each threshold (highest first) the `per_column` best words below it.
pub fn ss_report(
    profiles: &BTreeMap<String, WordProfile>,
    thresholds: &[f64],
    per_column: usize,
) -> SsReport {
    let mut scored: Vec<ScoredWord> = profiles
        .values()
        .filter_map(|p| {
            p.self_similarity.map(|ss| ScoredWord {
                word: p.word.clone(),
                self_similarity: ss,
                occurrences: p.occurrence_count,
            })
        })
        .collect();
    scored.sort_by(ranking);
    let insufficient_occurrences = profiles
        .values()
        .filter(|p| p.self_similarity.is_none())
        .map(|p| p.word.clone())
        .collect();
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let sections = thresholds
        .into_iter()
        .map(|t| {
            let split = scored.partition_point(|w| w.self_similarity >= t);
            ThresholdSection {
                threshold: t,
                below: scored[split..].iter().take(per_column).cloned().collect(),
                retained: split,
                excluded: scored.len() - split,
            }
        })
        .collect();
    SsReport {
        top: scored.iter().take(per_column).cloned().collect(),
        sections,
        insufficient_occurrences,
        scored_words: scored.len(),
    }
}

impl SsReport {
    /// Column layout: top words first, then one column per threshold.
    pub fn to_text(&self) -> String {
        let mut headers = vec!["Top SS".to_string()];
        let mut columns: Vec<Vec<String>> = vec![self.top.iter().map(cell).collect()];
        for s in &self.sections {
            headers.push(format!("Below {}", s.threshold));
            columns.push(s.below.iter().map(cell).collect());
        }
        let widths: Vec<usize> = headers
            .iter()
            .zip(&columns)
            .map(|(h, c)| c.iter().map(|x| x.chars().count()).chain([h.len()]).max().unwrap_or(0))
            .collect();
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        out.push_str(&line(headers.iter().map(String::as_str).collect()));
        out.push('\n');
        for r in 0..rows {
            out.push_str(&line(
                columns
                    .iter()
                    .map(|c| c.get(r).map(String::as_str).unwrap_or(""))
                    .collect(),
            ));
            out.push('\n');
        }
        for s in &self.sections {
            out.push_str(&format!(
                "threshold {}: {} retained, {} excluded\n",
                s.threshold, s.retained, s.excluded
            ));
        }
        if !self.insufficient_occurrences.is_empty() {
            out.push_str(&format!(
                "insufficient occurrences (single use, never candidates): {}\n",
                self.insufficient_occurrences.len()
            ));
        }
        out
    }
}

fn cell(w: &ScoredWord) -> String {
    format!("{}:{:.3}", w.word, w.self_similarity)
}
