//! HDBSCAN over the reduced document embeddings.
//!
//! Core distances and mutual reachability are computed exactly, the minimum
//! spanning tree is built with Prim's algorithm on the complete graph, and
//! flat clusters are chosen from the condensed tree by excess of mass.

mod tree;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::euclidean;
pub use tree::{condense_tree, single_linkage, CondensedRecord, CondensedTree, LinkageNode};

pub const NOISE: i64 = -1;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("need at least min_cluster_size = {min_cluster_size} points, got {found}")]
    TooFewPoints { min_cluster_size: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("point {0} has non-finite coordinates")]
    NonFinite(usize),
    #[error("points have inconsistent dimensions")]
    RaggedInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbour count for core distances (the point itself excluded).
    /// `None` uses `min_cluster_size`.
    pub min_samples: Option<usize>,
}

impl ClusterParams {
    pub fn new(min_cluster_size: usize) -> Self {
        ClusterParams {
            min_cluster_size,
            min_samples: None,
        }
    }

    pub fn effective_min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// `-1` for noise, otherwise `0..C`, with 0 the largest cluster.
    pub labels: Vec<i64>,
    /// Member count per cluster id.
    pub cluster_sizes: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub condensed_tree: CondensedTree,
    /// Condensed-tree node backing each cluster id.
    pub cluster_nodes: Vec<usize>,
    pub mst: Vec<MstEdge>,
}

impl ClusterResult {
    pub fn n_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == cluster as i64)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes_by_id(&self) -> BTreeMap<usize, usize> {
        self.cluster_sizes.iter().copied().enumerate().collect()
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<(), ClusterError> {
    let dim = points.first().map_or(0, Vec::len);
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(ClusterError::RaggedInput);
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite(i));
        }
    }
    Ok(())
}

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances(points: &[Vec<f64>], min_samples: usize) -> Vec<f64> {
    let n = points.len();
    if n < 2 || min_samples == 0 {
        return vec![0.0; n];
    }
    let k = min_samples.min(n - 1);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(&points[i], &points[j]))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

pub fn mutual_reachability(points: &[Vec<f64>], core: &[f64], a: usize, b: usize) -> f64 {
    euclidean(&points[a], &points[b]).max(core[a]).max(core[b])
}

/// Prim's algorithm over the complete mutual-reachability graph, O(n^2).
/// Equal candidate weights resolve to the lowest point index.
pub fn mst_mutual_reachability(points: &[Vec<f64>], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mutual_reachability(points, core, current, j);
            if w < best[j] {
                best[j] = w;
                parent[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            a: parent[next],
            b: next,
            weight: next_w,
        });
        current = next;
    }
    edges
}

pub fn hdbscan(points: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterResult, ClusterError> {
    let mcs = params.min_cluster_size;
    if mcs < 2 {
        return Err(ClusterError::InvalidParams("min_cluster_size must be >= 2".into()));
    }
    if params.min_samples == Some(0) {
        return Err(ClusterError::InvalidParams("min_samples must be >= 1".into()));
    }
    let n = points.len();
    if n < mcs {
        return Err(ClusterError::TooFewPoints {
            min_cluster_size: mcs,
            found: n,
        });
    }
    check_points(points)?;

    let core = core_distances(points, params.effective_min_samples());
    let mst = mst_mutual_reachability(points, &core);
    let linkage = single_linkage(n, &mst);
    let condensed = condense_tree(&linkage, n, mcs);
    let (selected, stability_tree) = tree::select_clusters_eom(condensed);
    let raw_labels = tree::label_points(&stability_tree, &selected, n);

    // Renumber clusters: descending size, ties by smallest member id.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, node) in raw_labels.iter().enumerate() {
        if let Some(node) = node {
            groups.entry(*node).or_default().push(i);
        }
    }
    let mut order: Vec<(usize, Vec<usize>)> = groups.into_iter().collect();
    order.sort_by(|(_, a), (_, b)| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut labels = vec![NOISE; n];
    let mut cluster_sizes = Vec::with_capacity(order.len());
    let mut cluster_nodes = Vec::with_capacity(order.len());
    for (id, (node, members)) in order.iter().enumerate() {
        for &m in members {
            labels[m] = id as i64;
        }
        cluster_sizes.push(members.len());
        cluster_nodes.push(*node);
    }
    let probabilities = tree::membership_probabilities(&stability_tree, &raw_labels);
    Ok(ClusterResult {
        labels,
        cluster_sizes,
        probabilities,
        condensed_tree: stability_tree,
        cluster_nodes,
        mst,
    })
}
