use std::path::{Path, PathBuf};

use cast_core::clusterer::ClusterParams;
use cast_core::corpus::{load_stopwords, DEFAULT_MIN_WORD_FREQ};
use cast_core::evaluation::{EvalParams, DEFAULT_EPSILON, DEFAULT_WINDOW_SIZE};
use cast_core::reducer::{Metric, ReduceMethod, ReduceParams};
use cast_core::topic_model::{FitParams, DEFAULT_TOP_K};
use cast_core::word_aggregation::DEFAULT_SS_THRESHOLD;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{EvalArgs, InputArgs, PipelineArgs};
use crate::error::CliError;

/// Every knob of a run. Artifacts embed this record so a run can be repeated
/// with `--config <artifact>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Where the artifact goes; not recorded inside it.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub ss_threshold: f64,
    pub min_word_freq: usize,
    pub reducer: ReduceMethod,
    pub n_components: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: usize,
    pub min_cluster_size: usize,
    pub min_samples: Option<usize>,
    pub n_topics: usize,
    pub top_k: usize,
    pub soft_words: bool,
    /// Co-occurrence window for NPMI; 0 uses whole documents.
    pub window_size: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let reduce = ReduceParams::default();
        RunConfig {
            input: None,
            embeddings: None,
            stopwords: None,
            out: None,
            ss_threshold: DEFAULT_SS_THRESHOLD,
            min_word_freq: DEFAULT_MIN_WORD_FREQ,
            reducer: reduce.method,
            n_components: reduce.n_components,
            n_neighbors: reduce.n_neighbors,
            min_dist: reduce.min_dist,
            epochs: reduce.n_epochs,
            min_cluster_size: 15,
            min_samples: None,
            n_topics: 10,
            top_k: DEFAULT_TOP_K,
            soft_words: false,
            window_size: DEFAULT_WINDOW_SIZE,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Artifacts written by this tool are accepted too;
    /// their embedded `run_config` is used.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if let Some(inner) = value.get_mut("run_config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn apply_input(&mut self, a: &InputArgs) {
        set(&mut self.input, a.input.clone().map(Some));
        set(&mut self.embeddings, a.embeddings.clone().map(Some));
        set(&mut self.stopwords, a.stopwords.clone().map(Some));
        set(&mut self.min_word_freq, a.min_word_freq);
    }

    pub fn apply_pipeline(&mut self, a: &PipelineArgs) {
        set(&mut self.ss_threshold, a.ss_threshold);
        set(&mut self.reducer, a.reducer.map(Into::into));
        set(&mut self.n_components, a.n_components);
        set(&mut self.n_neighbors, a.n_neighbors);
        set(&mut self.min_dist, a.min_dist);
        set(&mut self.epochs, a.epochs);
        set(&mut self.min_cluster_size, a.min_cluster_size);
        set(&mut self.min_samples, a.min_samples.map(Some));
        set(&mut self.n_topics, a.n_topics.map(|n| n as usize));
        set(&mut self.top_k, a.top_k);
        if a.soft_words {
            self.soft_words = true;
        }
    }

    pub fn apply_eval(&mut self, a: &EvalArgs) {
        set(&mut self.window_size, a.window_size);
        set(&mut self.epsilon, a.epsilon);
        set(&mut self.top_k, a.eval_top_k);
    }

    /// Parameter checks that must pass before any file is read.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.n_topics == 0 {
            problems.push("--n-topics must be at least 1".to_string());
        }
        if self.top_k == 0 {
            problems.push("--top-k must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.ss_threshold) {
            problems.push(format!("--ss-threshold {} is outside [0, 1]", self.ss_threshold));
        }
        if self.min_word_freq == 0 {
            problems.push("--min-word-freq must be at least 1".to_string());
        }
        if self.min_cluster_size < 2 {
            problems.push("--min-cluster-size must be at least 2".to_string());
        }
        if self.min_samples == Some(0) {
            problems.push("--min-samples must be at least 1".to_string());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            problems.push("--epsilon must be positive".to_string());
        }
        if let Err(e) = self.reduce_params().validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::usage(problems.join("; ")))
        }
    }

    pub fn require_input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::usage("no corpus given (use --input or the config file)"))
    }

    pub fn require_embeddings(&self) -> Result<&Path, CliError> {
        self.embeddings
            .as_deref()
            .ok_or_else(|| CliError::usage("no embeddings given (use --embeddings or the config file)"))
    }

    pub fn reduce_params(&self) -> ReduceParams {
        ReduceParams {
            method: self.reducer,
            n_components: self.n_components,
            n_neighbors: self.n_neighbors,
            metric: Metric::Cosine,
            min_dist: self.min_dist,
            n_epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn fit_params(&self) -> Result<FitParams, CliError> {
        let stopwords = match &self.stopwords {
            Some(p) => load_stopwords(p).map_err(CliError::from_corpus)?,
            None => Default::default(),
        };
        Ok(FitParams {
            ss_threshold: self.ss_threshold,
            min_word_freq: self.min_word_freq,
            stopwords,
            reduce: self.reduce_params(),
            cluster: ClusterParams {
                min_cluster_size: self.min_cluster_size,
                min_samples: self.min_samples,
            },
            n_topics: self.n_topics,
            top_k: self.top_k,
            soft_words: self.soft_words,
            seed: self.seed,
        })
    }

    pub fn eval_params(&self) -> EvalParams {
        EvalParams {
            top_k: self.top_k,
            window_size: (self.window_size > 0).then_some(self.window_size),
            epsilon: self.epsilon,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
