//! Python bindings for `cast_core`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cast_core::clusterer::{self, ClusterParams};
use cast_core::corpus::{self, CorpusFormat, Document};
use cast_core::embedding_store::{self, PlantedSpec, SyntheticConfig};
use cast_core::evaluation;
use cast_core::reducer::{self, ReduceMethod, ReduceParams};
use cast_core::topic_model::{self, FitParams};
use cast_core::word_aggregation;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn documents(texts: Vec<String>) -> Vec<Document> {
    corpus::documents_from_texts(texts)
}

fn reduce_method(name: &str) -> PyResult<ReduceMethod> {
    match name {
        "umap" => Ok(ReduceMethod::Umap),
        "pca" => Ok(ReduceMethod::Pca),
        other => Err(value_err(format!("unknown reducer {other:?}; expected \"umap\" or \"pca\""))),
    }
}

/// Document embeddings plus one vector per word occurrence.
#[pyclass(module = "cast_py", frozen)]
pub struct EmbeddingStore {
    inner: embedding_store::EmbeddingStore,
}

#[pymethods]
impl EmbeddingStore {
    /// Reads a binary CASTEMB file or its JSON-lines variant.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        embedding_store::read_castemb(&path)
            .map(|inner| EmbeddingStore { inner })
            .map_err(|e| match e {
                embedding_store::StoreError::Io { .. } => PyIOError::new_err(e.to_string()),
                e => value_err(e),
            })
    }

    /// Deterministic embeddings for `texts`. `topic_plan` maps words to a
    /// topic index so that same-topic words point the same way.
    #[staticmethod]
    #[pyo3(signature = (texts, dim=32, seed=0, topic_plan=None, noise_scale=0.3, topic_spread=0.5))]
    fn synthetic(
        texts: Vec<String>,
        dim: usize,
        seed: u64,
        topic_plan: Option<BTreeMap<String, usize>>,
        noise_scale: f64,
        topic_spread: f64,
    ) -> PyResult<Self> {
        if dim < 8 {
            return Err(value_err("dim must be at least 8"));
        }
        let config = SyntheticConfig {
            noise_scale,
            topic_spread,
            ..SyntheticConfig::new(dim, seed)
        };
        let out = embedding_store::synthetic_provider(&documents(texts), &config, topic_plan.as_ref());
        Ok(EmbeddingStore { inner: out.store })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        embedding_store::write_castemb(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn n_docs(&self) -> usize {
        self.inner.n_docs()
    }

    #[getter]
    fn n_occurrences(&self) -> usize {
        self.inner.occurrences.len()
    }

    fn doc_embeddings(&self) -> Vec<Vec<f64>> {
        self.inner.doc_embeddings_f64()
    }

    /// Summary statistics as a JSON string.
    fn summary_json(&self) -> String {
        serde_json::to_string(&self.inner.summary()).unwrap()
    }

    fn __repr__(&self) -> String {
        format!(
            "EmbeddingStore(dim={}, n_docs={}, n_occurrences={})",
            self.inner.dim,
            self.inner.n_docs(),
            self.inner.occurrences.len()
        )
    }
}

#[pyclass(module = "cast_py", frozen)]
pub struct TopicModel {
    inner: topic_model::TopicModel,
}

#[pymethods]
impl TopicModel {
    /// Ranked words of every topic.
    #[getter]
    fn topics(&self) -> Vec<Vec<String>> {
        self.inner.topic_words()
    }

    #[getter]
    fn document_labels(&self) -> Vec<i64> {
        self.inner.document_labels.clone()
    }

    #[getter]
    fn topic_vectors(&self) -> Vec<Vec<f64>> {
        self.inner.topics.iter().map(|t| t.topic_vector.clone()).collect()
    }

    fn topic_table(&self) -> String {
        self.inner.topic_table()
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).unwrap()
    }

    fn __len__(&self) -> usize {
        self.inner.topics.len()
    }

    fn __repr__(&self) -> String {
        format!("TopicModel(n_topics={})", self.inner.topics.len())
    }
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

/// Raw texts of a corpus file (plain lines or JSON lines with "text").
#[pyfunction]
fn load_corpus(path: PathBuf) -> PyResult<Vec<String>> {
    let docs = corpus::load_corpus(&path, CorpusFormat::from_path(&path)).map_err(|e| match e {
        corpus::CorpusError::Io { .. } => PyIOError::new_err(e.to_string()),
        e => value_err(e),
    })?;
    Ok(docs.into_iter().map(|d| d.raw_text).collect())
}

/// Returns `(texts, doc_topics, topic_plan)` for a corpus with planted topics.
#[pyfunction]
#[pyo3(signature = (n_topics=3, docs_per_topic=200, words_per_topic=30, doc_len=40, seed=7))]
fn planted_corpus(
    n_topics: usize,
    docs_per_topic: usize,
    words_per_topic: usize,
    doc_len: usize,
    seed: u64,
) -> (Vec<String>, Vec<usize>, BTreeMap<String, usize>) {
    let c = embedding_store::planted_corpus(&PlantedSpec {
        n_topics,
        docs_per_topic,
        words_per_topic,
        doc_len,
        seed,
        ..PlantedSpec::default()
    });
    let texts = c.documents.into_iter().map(|d| d.raw_text).collect();
    (texts, c.doc_topics, c.topic_plan)
}

/// Mean pairwise cosine similarity of a word's occurrence vectors.
#[pyfunction]
fn self_similarity(vectors: Vec<Vec<f64>>) -> PyResult<f64> {
    word_aggregation::self_similarity(&vectors).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (
    texts, store, n_topics=10, ss_threshold=0.4, min_cluster_size=15, min_samples=None,
    reducer="umap", n_components=5, n_neighbors=15, top_k=10, min_word_freq=3, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    texts: Vec<String>,
    store: &EmbeddingStore,
    n_topics: usize,
    ss_threshold: f64,
    min_cluster_size: usize,
    min_samples: Option<usize>,
    reducer: &str,
    n_components: usize,
    n_neighbors: usize,
    top_k: usize,
    min_word_freq: usize,
    seed: u64,
) -> PyResult<TopicModel> {
    let params = FitParams {
        ss_threshold,
        min_word_freq,
        reduce: ReduceParams {
            method: reduce_method(reducer)?,
            n_components,
            n_neighbors,
            seed,
            ..ReduceParams::default()
        },
        cluster: ClusterParams {
            min_cluster_size,
            min_samples,
        },
        n_topics,
        top_k,
        seed,
        ..FitParams::default()
    };
    let inner = topic_model::fit(&documents(texts), &store.inner, &params).map_err(value_err)?;
    Ok(TopicModel { inner })
}

/// Returns `(per_topic, mean)`. `window_size=None` uses whole documents.
#[pyfunction]
#[pyo3(signature = (topics, texts, window_size=Some(10)))]
fn npmi(topics: Vec<Vec<String>>, texts: Vec<String>, window_size: Option<usize>) -> PyResult<(Vec<f64>, f64)> {
    let s = evaluation::npmi(&topics, &documents(texts), window_size, evaluation::DEFAULT_EPSILON).map_err(value_err)?;
    Ok((s.per_topic, s.mean))
}

#[pyfunction]
fn topic_diversity(topics: Vec<Vec<String>>) -> PyResult<f64> {
    evaluation::topic_diversity(&topics).map_err(value_err)
}

/// Cluster labels, `-1` for noise.
#[pyfunction]
#[pyo3(signature = (points, min_cluster_size=15, min_samples=None))]
fn hdbscan(points: Vec<Vec<f64>>, min_cluster_size: usize, min_samples: Option<usize>) -> PyResult<Vec<i64>> {
    let params = ClusterParams {
        min_cluster_size,
        min_samples,
    };
    clusterer::hdbscan(&points, &params).map(|r| r.labels).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (data, method="umap", n_components=5, n_neighbors=15, min_dist=0.1, seed=0))]
fn reduce(
    data: Vec<Vec<f64>>,
    method: &str,
    n_components: usize,
    n_neighbors: usize,
    min_dist: f64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let params = ReduceParams {
        method: reduce_method(method)?,
        n_components,
        n_neighbors,
        min_dist,
        seed,
        ..ReduceParams::default()
    };
    reducer::reduce(&data, &params).map(|r| r.points).map_err(value_err)
}

#[pymodule]
fn cast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EmbeddingStore>()?;
    m.add_class::<TopicModel>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(load_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(planted_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(self_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(npmi, m)?)?;
    m.add_function(wrap_pyfunction!(topic_diversity, m)?)?;
    m.add_function(wrap_pyfunction!(hdbscan, m)?)?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    Ok(())
}
