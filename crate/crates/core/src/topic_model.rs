//! Topic vectors from document clusters, and candidate-word assignment.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusterer::{hdbscan, ClusterError, ClusterParams, ClusterResult};
use crate::corpus::{build_vocabulary_with_stopwords, Document, DEFAULT_MIN_WORD_FREQ};
use crate::embedding_store::EmbeddingStore;
use crate::reducer::{reduce, ReduceError, ReduceParams, ReducedEmbeddings};
use crate::vector::{dot, normalized};
use crate::word_aggregation::{
    aggregate_word_embeddings, filter_by_threshold, AggregationError, WordProfile, DEFAULT_SS_THRESHOLD,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("[input] {0}")]
    Input(String),
    #[error("[aggregate] {0}")]
    Aggregate(#[from] AggregationError),
    #[error("[reduce] {0}")]
    Reduce(#[from] ReduceError),
    #[error("[cluster] {0}")]
    Cluster(#[from] ClusterError),
    #[error("[select] no clusters found; every document was labelled noise")]
    NoClusters,
    #[error("[topic-vectors] cluster {0} has no usable member embeddings")]
    DegenerateCluster(usize),
    #[error("[assign] candidate set is empty")]
    NoCandidates,
}

impl FitError {
    pub fn stage(&self) -> &'static str {
        match self {
            FitError::Input(_) => "input",
            FitError::Aggregate(_) => "aggregate",
            FitError::Reduce(_) => "reduce",
            FitError::Cluster(_) => "cluster",
            FitError::NoClusters => "select",
            FitError::DegenerateCluster(_) => "topic-vectors",
            FitError::NoCandidates => "assign",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub ss_threshold: f64,
    pub min_word_freq: usize,
    pub stopwords: BTreeSet<String>,
    pub reduce: ReduceParams,
    pub cluster: ClusterParams,
    pub n_topics: usize,
    pub top_k: usize,
    /// Rank every candidate under every topic instead of hard assignment.
    pub soft_words: bool,
    pub seed: u64,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            ss_threshold: DEFAULT_SS_THRESHOLD,
            min_word_freq: DEFAULT_MIN_WORD_FREQ,
            stopwords: BTreeSet::new(),
            reduce: ReduceParams::default(),
            cluster: ClusterParams::new(15),
            n_topics: 10,
            top_k: DEFAULT_TOP_K,
            soft_words: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: usize,
    /// HDBSCAN cluster id this topic was built from.
    pub cluster_id: usize,
    pub topic_vector: Vec<f64>,
    pub member_count: usize,
    pub member_doc_ids: Vec<usize>,
    pub top_words: Vec<TopicWord>,
    /// Candidates assigned to this topic (hard mode), before truncation.
    pub assigned_words: usize,
}

impl Topic {
    pub fn words(&self) -> Vec<String> {
        self.top_words.iter().map(|w| w.word.clone()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_documents: usize,
    pub empty_documents: usize,
    pub vocabulary_size: usize,
    pub profiled_words: usize,
    pub single_occurrence_words: usize,
    pub below_threshold_words: usize,
    pub candidate_words: usize,
    pub clusters_found: usize,
    pub noise_documents: usize,
    pub dropped_clusters: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub format_version: u32,
    pub config: FitParams,
    pub topics: Vec<Topic>,
    /// HDBSCAN label of every document (-1 = noise).
    pub document_labels: Vec<i64>,
    pub diagnostics: Diagnostics,
}

impl TopicModel {
    pub fn topic_words(&self) -> Vec<Vec<String>> {
        self.topics.iter().map(Topic::words).collect()
    }

    /// Topics as columns, ranked words as rows.
    pub fn topic_table(&self) -> String {
        let headers: Vec<String> = self
            .topics
            .iter()
            .map(|t| format!("Topic {} ({})", t.topic_id, t.member_count))
            .collect();
        let columns: Vec<Vec<String>> = self.topic_words();
        let widths: Vec<usize> = headers
            .iter()
            .zip(&columns)
            .map(|(h, c)| c.iter().map(|w| w.chars().count()).chain([h.len()]).max().unwrap_or(0))
            .collect();
        let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
        let render = |cells: Vec<&str>| -> String {
            let mut line = format!("{:>4}", "");
            for (c, w) in cells.iter().zip(&widths) {
                line.push_str(&format!("  {c:<w$}"));
            }
            line.trim_end().to_string()
        };
        let mut out = render(headers.iter().map(String::as_str).collect());
        out.push('\n');
        for r in 0..rows {
            let mut line = render(
                columns
                    .iter()
                    .map(|c| c.get(r).map(String::as_str).unwrap_or(""))
                    .collect(),
            );
            line.replace_range(0..4, &format!("{:>4}", r + 1));
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Cluster ids of the `n_topics` largest clusters, largest first.
///
/// Returns the ids and, when fewer clusters exist than requested, a warning.
pub fn select_top_n_clusters(
    result: &ClusterResult,
    n_topics: usize,
) -> Result<(Vec<usize>, Option<String>), FitError> {
    if n_topics == 0 {
        return Err(FitError::Input("n_topics must be >= 1".into()));
    }
    let found = result.n_clusters();
    if found == 0 {
        return Err(FitError::NoClusters);
    }
    // Cluster ids are already ordered by size, ties by smallest member id.
    let mut ids: Vec<usize> = (0..found).collect();
    ids.sort_by(|&a, &b| {
        result.cluster_sizes[b]
            .cmp(&result.cluster_sizes[a])
            .then(first_member(result, a).cmp(&first_member(result, b)))
    });
    ids.truncate(n_topics);
    let warning = (found < n_topics)
        .then(|| format!("requested {n_topics} topics but only {found} clusters were found"));
    Ok((ids, warning))
}

fn first_member(result: &ClusterResult, cluster: usize) -> usize {
    result
        .labels
        .iter()
        .position(|&l| l == cluster as i64)
        .unwrap_or(usize::MAX)
}

/// Normalized mean of the members' original embeddings, per selected cluster.
pub fn topic_vectors(
    store: &EmbeddingStore,
    result: &ClusterResult,
    selected: &[usize],
) -> Result<BTreeMap<usize, Vec<f64>>, FitError> {
    let dim = store.dim;
    let mut out = BTreeMap::new();
    for &cluster in selected {
        let mut sum = vec![0.0f64; dim];
        let mut count = 0usize;
        for (doc, &label) in result.labels.iter().enumerate() {
            if label == cluster as i64 {
                for (s, &x) in sum.iter_mut().zip(store.doc_embedding(doc)) {
                    *s += x as f64;
                }
                count += 1;
            }
        }
        if count == 0 {
            return Err(FitError::DegenerateCluster(cluster));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let v = normalized(&mean).ok_or(FitError::DegenerateCluster(cluster))?;
        out.insert(cluster, v);
    }
    Ok(out)
}

fn rank_words(a: &TopicWord, b: &TopicWord) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.word.cmp(&b.word))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordAssignment {
    /// Ranked words per topic, in the order of `topic_vecs`.
    pub ranked: Vec<Vec<TopicWord>>,
    /// Candidates assigned to each topic before truncation.
    pub pool_sizes: Vec<usize>,
}

/// Assigns each candidate to the topic vector with the highest cosine
/// similarity (ties to the earlier topic) and keeps the `top_k` best per topic.
/// With `soft`, every candidate is ranked under every topic instead.
pub fn assign_topic_words(
    candidates: &BTreeSet<String>,
    profiles: &BTreeMap<String, WordProfile>,
    topic_vecs: &[Vec<f64>],
    top_k: usize,
    soft: bool,
) -> Result<WordAssignment, FitError> {
    let directions: Vec<(&str, Vec<f64>)> = candidates
        .iter()
        .filter_map(|w| profiles.get(w).and_then(|p| p.direction()).map(|d| (w.as_str(), d)))
        .collect();
    if directions.is_empty() {
        return Err(FitError::NoCandidates);
    }
    let mut pools: Vec<Vec<TopicWord>> = vec![Vec::new(); topic_vecs.len()];
    for (word, dir) in &directions {
        let sims: Vec<f64> = topic_vecs.iter().map(|t| dot(dir, t)).collect();
        if soft {
            for (pool, &s) in pools.iter_mut().zip(&sims) {
                pool.push(TopicWord {
                    word: word.to_string(),
                    similarity: s,
                });
            }
        } else {
            let mut best = 0;
            for (i, &s) in sims.iter().enumerate() {
                if s > sims[best] {
                    best = i;
                }
            }
            pools[best].push(TopicWord {
                word: word.to_string(),
                similarity: sims[best],
            });
        }
    }
    let pool_sizes = pools.iter().map(Vec::len).collect();
    let ranked = pools
        .into_iter()
        .map(|mut p| {
            p.sort_by(rank_words);
            p.truncate(top_k);
            p
        })
        .collect();
    Ok(WordAssignment { ranked, pool_sizes })
}

/// Clustering half of the pipeline. It does not depend on the word filter,
/// so it can be shared across threshold sweeps.
#[derive(Debug, Clone)]
pub struct ClusteringStage {
    pub reduced: ReducedEmbeddings,
    pub clusters: ClusterResult,
}

pub fn cluster_documents(store: &EmbeddingStore, params: &FitParams) -> Result<ClusteringStage, FitError> {
    let mut reduce_params = params.reduce.clone();
    reduce_params.seed = params.seed;
    let reduced = reduce(&store.doc_embeddings_f64(), &reduce_params)?;
    let clusters = hdbscan(&reduced.points, &params.cluster)?;
    Ok(ClusteringStage { reduced, clusters })
}

/// Full pipeline: vocabulary, word profiles, self-similarity filter,
/// reduction, clustering, topic vectors, word assignment.
pub fn fit(corpus: &[Document], store: &EmbeddingStore, params: &FitParams) -> Result<TopicModel, FitError> {
    validate_inputs(corpus, store, params)?;
    let stage = cluster_documents(store, params)?;
    fit_with_clustering(corpus, store, params, &stage)
}

fn validate_inputs(corpus: &[Document], store: &EmbeddingStore, params: &FitParams) -> Result<(), FitError> {
    if params.n_topics == 0 {
        return Err(FitError::Input("n_topics must be >= 1".into()));
    }
    if params.top_k == 0 {
        return Err(FitError::Input("top_k must be >= 1".into()));
    }
    if corpus.len() != store.n_docs() {
        return Err(FitError::Input(format!(
            "corpus has {} documents but the embedding store has {}",
            corpus.len(),
            store.n_docs()
        )));
    }
    if let Some(d) = corpus.iter().enumerate().find(|(i, d)| d.id != *i) {
        return Err(FitError::Input(format!("document ids must be dense; found id {} at position {}", d.1.id, d.0)));
    }
    Ok(())
}

/// Word-side stages on top of a precomputed clustering.
pub fn fit_with_clustering(
    corpus: &[Document],
    store: &EmbeddingStore,
    params: &FitParams,
    stage: &ClusteringStage,
) -> Result<TopicModel, FitError> {
    validate_inputs(corpus, store, params)?;
    let mut diagnostics = Diagnostics {
        n_documents: corpus.len(),
        empty_documents: corpus.iter().filter(|d| d.is_empty()).count(),
        ..Diagnostics::default()
    };

    let vocab = build_vocabulary_with_stopwords(corpus, params.min_word_freq, params.stopwords.clone());
    let profiles = aggregate_word_embeddings(store, &vocab)?;
    let candidates = filter_by_threshold(&profiles, params.ss_threshold);
    diagnostics.vocabulary_size = vocab.len();
    diagnostics.profiled_words = profiles.len();
    diagnostics.single_occurrence_words = profiles.values().filter(|p| p.self_similarity.is_none()).count();
    diagnostics.below_threshold_words = profiles.len() - diagnostics.single_occurrence_words - candidates.len();
    diagnostics.candidate_words = candidates.len();
    if vocab.len() > profiles.len() {
        diagnostics.warnings.push(format!(
            "{} vocabulary words have no occurrence embeddings",
            vocab.len() - profiles.len()
        ));
    }

    let clusters = &stage.clusters;
    diagnostics.clusters_found = clusters.n_clusters();
    diagnostics.noise_documents = clusters.noise_count();
    let (selected, warning) = select_top_n_clusters(clusters, params.n_topics)?;
    diagnostics.dropped_clusters = clusters.n_clusters() - selected.len();
    diagnostics.warnings.extend(warning);

    let vectors = topic_vectors(store, clusters, &selected)?;
    let ordered: Vec<Vec<f64>> = selected.iter().map(|c| vectors[c].clone()).collect();
    let assignment = assign_topic_words(&candidates, &profiles, &ordered, params.top_k, params.soft_words)?;

    let mut topics = Vec::with_capacity(selected.len());
    for (topic_id, ((&cluster, vector), (words, pool))) in selected
        .iter()
        .zip(ordered)
        .zip(assignment.ranked.into_iter().zip(assignment.pool_sizes))
        .enumerate()
    {
        if words.len() < params.top_k {
            diagnostics.warnings.push(format!(
                "topic {topic_id} has {} of {} requested words",
                words.len(),
                params.top_k
            ));
        }
        let members = clusters.members(cluster);
        topics.push(Topic {
            topic_id,
            cluster_id: cluster,
            topic_vector: vector,
            member_count: members.len(),
            member_doc_ids: members,
            top_words: words,
            assigned_words: pool,
        });
    }
    Ok(TopicModel {
        format_version: MODEL_FORMAT_VERSION,
        config: FitParams {
            reduce: ReduceParams {
                seed: params.seed,
                ..params.reduce.clone()
            },
            ..params.clone()
        },
        topics,
        document_labels: clusters.labels.clone(),
        diagnostics,
    })
}
