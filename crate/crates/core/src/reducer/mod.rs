//! Dimensionality reduction of document embeddings before clustering.

pub mod pca;
pub mod umap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pca::reduce_pca;
pub use umap::reduce_umap;

#[derive(Debug, Error, PartialEq)]
pub enum ReduceError {
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("input contains non-finite values at point {0}")]
    NonFinite(usize),
    #[error("points have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceMethod {
    Umap,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceParams {
    pub method: ReduceMethod,
    pub n_components: usize,
    pub n_neighbors: usize,
    pub metric: Metric,
    pub min_dist: f64,
    pub n_epochs: usize,
    pub seed: u64,
}

impl Default for ReduceParams {
    fn default() -> Self {
        ReduceParams {
            method: ReduceMethod::Umap,
            n_components: 5,
            n_neighbors: 15,
            metric: Metric::Cosine,
            min_dist: 0.1,
            n_epochs: 200,
            seed: 0,
        }
    }
}

impl ReduceParams {
    pub fn validate(&self) -> Result<(), ReduceError> {
        if self.n_components < 2 {
            return Err(ReduceError::InvalidParams("n_components must be >= 2".into()));
        }
        if self.n_neighbors < 2 {
            return Err(ReduceError::InvalidParams("n_neighbors must be >= 2".into()));
        }
        if !(self.min_dist >= 0.0 && self.min_dist.is_finite()) {
            return Err(ReduceError::InvalidParams("min_dist must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEmbeddings {
    pub points: Vec<Vec<f64>>,
    pub method: ReduceMethod,
    pub params: ReduceParams,
}

impl ReducedEmbeddings {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dispatches on `params.method`.
pub fn reduce(data: &[Vec<f64>], params: &ReduceParams) -> Result<ReducedEmbeddings, ReduceError> {
    match params.method {
        ReduceMethod::Umap => reduce_umap(data, params),
        ReduceMethod::Pca => {
            let mut r = reduce_pca(data, params.n_components)?;
            r.params = params.clone();
            Ok(r)
        }
    }
}

pub(crate) fn check_input(data: &[Vec<f64>]) -> Result<usize, ReduceError> {
    let dim = data.first().map_or(0, Vec::len);
    for (i, p) in data.iter().enumerate() {
        if p.len() != dim {
            return Err(ReduceError::RaggedInput);
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ReduceError::NonFinite(i));
        }
    }
    Ok(dim)
}
