//! Deterministic synthetic embeddings, used in place of a transformer encoder
//! for tests and demos.
//!
//! Everything is derived from a SplitMix64 stream keyed by a string, so the
//! construction can be reproduced bit-for-bit in any language with IEEE
//! doubles (only `+ - * /` and `sqrt` are used):
//!
//! * `stream(key)` seeds SplitMix64 with `fnv1a64(key) ^ (seed * 0x9E3779B97F4A7C15)`
//!   (wrapping multiply).
//! * `direction(key)` draws `dim` values `2u - 1` with `u = (next >> 11) * 2^-53`
//!   and L2-normalizes them.
//! * A word's base vector is `direction("word:" + w)`. With a topic plan the
//!   base is `normalize(direction("topic:" + t) + topic_spread * direction("word:" + w))`.
//! * The occurrence at token position `p` of document `d` is
//!   `normalize(base + noise_scale * direction("occ:" + d + ":" + p))`, or the
//!   base itself when `noise_scale == 0`.
//! * A document embedding is the normalized sum of its occurrence vectors in
//!   token order; a document without tokens gets `direction("doc:" + d)`.
//!
//! Vectors are computed in `f64` and rounded to `f32` only when stored.

use std::collections::BTreeMap;

use super::{EmbeddingStore, OccurrenceEmbedding};
use crate::corpus::Document;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn keyed(key: &str, seed: u64) -> Self {
        SplitMix64::new(fnv1a64(key.as_bytes()) ^ seed.wrapping_mul(GOLDEN_GAMMA))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` by rejection-free modulo (bias is irrelevant here).
    pub fn next_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

fn normalize_in_place(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
        true
    } else {
        false
    }
}

fn direction(key: &str, seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = SplitMix64::keyed(key, seed);
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        if normalize_in_place(&mut v) {
            return v;
        }
    }
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub seed: u64,
    /// Scale of the per-occurrence perturbation; 0 makes every occurrence of a
    /// word identical.
    pub noise_scale: f64,
    /// How far planted words sit from their topic anchor.
    pub topic_spread: f64,
}

impl SyntheticConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        SyntheticConfig {
            dim,
            seed,
            noise_scale: 0.3,
            topic_spread: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticEmbeddings {
    pub store: EmbeddingStore,
    /// Documents without tokens, which received a random embedding.
    pub empty_docs: Vec<usize>,
}

/// Builds a store with one occurrence record per token of every document.
///
/// Panics if `config.dim < 8`.
pub fn synthetic_provider(
    docs: &[Document],
    config: &SyntheticConfig,
    topic_plan: Option<&BTreeMap<String, usize>>,
) -> SyntheticEmbeddings {
    assert!(config.dim >= 8, "synthetic embeddings need dim >= 8");
    let dim = config.dim;
    let seed = config.seed;
    let mut anchors: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut bases: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut doc_embeddings = Vec::with_capacity(docs.len() * dim);
    let mut occurrences = Vec::new();
    let mut empty_docs = Vec::new();

    for doc in docs {
        let mut sum = vec![0.0f64; dim];
        for (pos, word) in doc.tokens.iter().enumerate() {
            let base = bases.entry(word.as_str()).or_insert_with(|| {
                let own = direction(&format!("word:{word}"), seed, dim);
                match topic_plan.and_then(|p| p.get(word)) {
                    Some(&topic) => {
                        let anchor = anchors
                            .entry(topic)
                            .or_insert_with(|| direction(&format!("topic:{topic}"), seed, dim));
                        let mut v: Vec<f64> = anchor
                            .iter()
                            .zip(&own)
                            .map(|(a, o)| a + config.topic_spread * o)
                            .collect();
                        if !normalize_in_place(&mut v) {
                            v = own;
                        }
                        v
                    }
                    None => own,
                }
            });
            let vector = if config.noise_scale > 0.0 {
                let noise = direction(&format!("occ:{}:{}", doc.id, pos), seed, dim);
                let mut v: Vec<f64> = base
                    .iter()
                    .zip(&noise)
                    .map(|(b, n)| b + config.noise_scale * n)
                    .collect();
                if !normalize_in_place(&mut v) {
                    v = base.clone();
                }
                v
            } else {
                base.clone()
            };
            for (s, x) in sum.iter_mut().zip(&vector) {
                *s += x;
            }
            occurrences.push(OccurrenceEmbedding {
                word: word.clone(),
                doc_id: doc.id,
                vector: to_f32(&vector),
            });
        }
        if doc.tokens.is_empty() || !normalize_in_place(&mut sum) {
            log::warn!("document {} has no tokens; using a random embedding", doc.id);
            empty_docs.push(doc.id);
            sum = direction(&format!("doc:{}", doc.id), seed, dim);
        }
        doc_embeddings.extend(to_f32(&sum));
    }
    SyntheticEmbeddings {
        store: EmbeddingStore {
            dim,
            doc_embeddings,
            occurrences,
        },
        empty_docs,
    }
}

/// Layout of a corpus with planted topics and disjoint topic vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n_topics: usize,
    pub docs_per_topic: usize,
    pub words_per_topic: usize,
    pub doc_len: usize,
    /// Words shared by every topic (not part of the plan).
    pub shared_words: Vec<String>,
    /// Probability that a token is drawn from `shared_words`.
    pub shared_rate: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_topics: 3,
            docs_per_topic: 200,
            words_per_topic: 30,
            doc_len: 40,
            shared_words: ["the", "and", "of", "to", "is", "in"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            shared_rate: 0.2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub documents: Vec<Document>,
    /// Ground-truth word -> topic map (shared words are absent).
    pub topic_plan: BTreeMap<String, usize>,
    /// Ground-truth topic of every document.
    pub doc_topics: Vec<usize>,
    pub topic_words: Vec<Vec<String>>,
}

/// Name of planted word `i` of topic `t`.
pub fn planted_word(topic: usize, i: usize) -> String {
    format!("k{topic}w{i:02}")
}

/// Generates documents whose tokens come from one topic's vocabulary plus a
/// few shared words. Document `i` belongs to topic `i % n_topics`.
pub fn planted_corpus(spec: &PlantedSpec) -> PlantedCorpus {
    let topic_words: Vec<Vec<String>> = (0..spec.n_topics)
        .map(|t| (0..spec.words_per_topic).map(|i| planted_word(t, i)).collect())
        .collect();
    let topic_plan = topic_words
        .iter()
        .enumerate()
        .flat_map(|(t, ws)| ws.iter().map(move |w| (w.clone(), t)))
        .collect();
    let n_docs = spec.n_topics * spec.docs_per_topic;
    let mut documents = Vec::with_capacity(n_docs);
    let mut doc_topics = Vec::with_capacity(n_docs);
    for id in 0..n_docs {
        let topic = id % spec.n_topics;
        let mut rng = SplitMix64::keyed(&format!("planted:{id}"), spec.seed);
        let words: Vec<&str> = (0..spec.doc_len)
            .map(|_| {
                if !spec.shared_words.is_empty() && rng.next_f64() < spec.shared_rate {
                    spec.shared_words[rng.next_below(spec.shared_words.len())].as_str()
                } else {
                    topic_words[topic][rng.next_below(spec.words_per_topic)].as_str()
                }
            })
            .collect();
        documents.push(Document::new(id, words.join(" ")));
        doc_topics.push(topic);
    }
    PlantedCorpus {
        documents,
        topic_plan,
        doc_topics,
        topic_words,
    }
}
