use std::collections::{BTreeMap, BTreeSet};

use super::EvalError;
use crate::corpus::Document;

pub const DEFAULT_WINDOW_SIZE: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// Boolean sliding-window occurrence counts for a fixed word set.
#[derive(Debug, Clone)]
pub struct WindowCounts {
    pub n_windows: usize,
    pub single: BTreeMap<String, usize>,
    pub joint: BTreeMap<(String, String), usize>,
}

impl WindowCounts {
    /// Counts windows of `window_size` tokens with stride 1. A document shorter
    /// than the window contributes one window; `None` uses whole documents.
    /// Documents without tokens contribute nothing.
    pub fn count(reference: &[Document], words: &BTreeSet<String>, window_size: Option<usize>) -> Self {
        let mut single: BTreeMap<String, usize> = words.iter().map(|w| (w.clone(), 0)).collect();
        let mut joint: BTreeMap<(String, String), usize> = BTreeMap::new();
        let mut n_windows = 0usize;
        for doc in reference {
            let tokens: Vec<Option<&str>> = doc
                .tokens
                .iter()
                .map(|t| words.get(t.as_str()).map(String::as_str))
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let w = window_size.unwrap_or(tokens.len()).max(1).min(tokens.len());
            for window in tokens.windows(w) {
                n_windows += 1;
                let present: BTreeSet<&str> = window.iter().flatten().copied().collect();
                for &a in &present {
                    *single.get_mut(a).unwrap() += 1;
                }
                let present: Vec<&str> = present.into_iter().collect();
                for i in 0..present.len() {
                    for j in (i + 1)..present.len() {
                        *joint
                            .entry((present[i].to_string(), present[j].to_string()))
                            .or_insert(0) += 1;
                    }
                }
            }
        }
        WindowCounts {
            n_windows,
            single,
            joint,
        }
    }

    pub fn joint_count(&self, a: &str, b: &str) -> usize {
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.joint.get(&key).copied().unwrap_or(0)
    }

    /// NPMI of a word pair, clamped to `[-1, 1]`.
    ///
    /// Pairs involving a word that never occurs score -1, as do pairs that
    /// never co-occur (the limit of the measure as the joint probability
    /// goes to zero). `epsilon` only enters the logarithms.
    pub fn pair_npmi(&self, a: &str, b: &str, epsilon: f64) -> f64 {
        if a == b {
            return 1.0;
        }
        let n = self.n_windows as f64;
        let ca = self.single.get(a).copied().unwrap_or(0);
        let cb = self.single.get(b).copied().unwrap_or(0);
        let cab = self.joint_count(a, b);
        if ca == 0 || cb == 0 || cab == 0 || n == 0.0 {
            return -1.0;
        }
        if cab == self.n_windows {
            // Both words are in every window: perfectly associated.
            return 1.0;
        }
        let (pa, pb, pab) = (ca as f64 / n, cb as f64 / n, cab as f64 / n);
        let pmi = ((pab + epsilon) / (pa * pb)).ln();
        (pmi / -(pab + epsilon).ln()).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpmiScores {
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// Mean pairwise NPMI of each topic's words against a reference corpus.
pub fn npmi(
    topics: &[Vec<String>],
    reference: &[Document],
    window_size: Option<usize>,
    epsilon: f64,
) -> Result<NpmiScores, EvalError> {
    if reference.iter().all(|d| d.tokens.is_empty()) {
        return Err(EvalError::EmptyReference);
    }
    if topics.is_empty() {
        return Err(EvalError::NoTopics);
    }
    for (i, t) in topics.iter().enumerate() {
        if t.len() < 2 {
            return Err(EvalError::TooFewWords { topic: i, found: t.len() });
        }
    }
    let words: BTreeSet<String> = topics.iter().flatten().cloned().collect();
    let counts = WindowCounts::count(reference, &words, window_size);
    let per_topic: Vec<f64> = topics
        .iter()
        .map(|t| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..t.len() {
                for j in (i + 1)..t.len() {
                    total += counts.pair_npmi(&t[i], &t[j], epsilon);
                    pairs += 1;
                }
            }
            total / pairs as f64
        })
        .collect();
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(NpmiScores { per_topic, mean })
}
