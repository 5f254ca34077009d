use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::MstEdge;

/// Merge `n_points + i` of a single-linkage dendrogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkageNode {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// Dendrogram from MST edges, merged in ascending weight order (stable for
/// equal weights).
pub fn single_linkage(n_points: usize, mst: &[MstEdge]) -> Vec<LinkageNode> {
    let mut edges = mst.to_vec();
    edges.sort_by(|a, b| a.weight.total_cmp(&b.weight));
    // Union-find over both leaves and merge nodes; each component root maps
    // to the dendrogram node that currently represents it.
    let mut uf = UnionFind::new(2 * n_points);
    let mut nodes = Vec::with_capacity(n_points.saturating_sub(1));
    for e in edges {
        let ra = uf.find(e.a);
        let rb = uf.find(e.b);
        let new = n_points + nodes.len();
        let size = uf.size[ra] + uf.size[rb];
        nodes.push(LinkageNode {
            left: ra,
            right: rb,
            distance: e.weight,
            size,
        });
        uf.parent[ra] = new;
        uf.parent[rb] = new;
        uf.size[new] = size;
    }
    nodes
}

/// One edge of the condensed tree. Children below `n_points` are points;
/// larger ids are clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedRecord {
    pub parent: usize,
    pub child: usize,
    /// `1 / distance`; infinite for zero-distance merges.
    pub lambda: f64,
    pub child_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub records: Vec<CondensedRecord>,
    /// Excess-of-mass stability of each cluster node, before selection.
    pub stability: BTreeMap<usize, f64>,
    /// Cluster nodes chosen as flat clusters.
    pub selected: Vec<usize>,
}

impl CondensedTree {
    pub fn root(&self) -> usize {
        self.n_points
    }

    pub fn child_clusters(&self, node: usize) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.parent == node && r.child >= self.n_points)
            .map(|r| r.child)
            .collect()
    }
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

fn leaves_under(linkage: &[LinkageNode], n_points: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n_points {
            out.push(x);
        } else {
            let l = &linkage[x - n_points];
            stack.push(l.right);
            stack.push(l.left);
        }
    }
    out
}

/// Walks the dendrogram from the root, keeping a split only when both sides
/// hold at least `min_cluster_size` points; smaller sides fall out as points.
pub fn condense_tree(linkage: &[LinkageNode], n_points: usize, min_cluster_size: usize) -> CondensedTree {
    let mut records = Vec::new();
    if n_points == 0 {
        return CondensedTree {
            n_points,
            records,
            stability: BTreeMap::new(),
            selected: Vec::new(),
        };
    }
    if n_points == 1 {
        records.push(CondensedRecord {
            parent: 1,
            child: 0,
            lambda: f64::INFINITY,
            child_size: 1,
        });
    }
    let size_of = |x: usize| if x < n_points { 1 } else { linkage[x - n_points].size };
    let root = n_points + linkage.len().saturating_sub(1);
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next_label = n_points + 1;
    label.insert(root, n_points);
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if node < n_points || linkage.is_empty() {
            continue;
        }
        let LinkageNode {
            left,
            right,
            distance,
            ..
        } = linkage[node - n_points];
        let lambda = lambda_of(distance);
        let parent = label[&node];
        let (ls, rs) = (size_of(left), size_of(right));
        let fall_out = |side: usize, records: &mut Vec<CondensedRecord>| {
            for p in leaves_under(linkage, n_points, side) {
                records.push(CondensedRecord {
                    parent,
                    child: p,
                    lambda,
                    child_size: 1,
                });
            }
        };
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for (side, size) in [(left, ls), (right, rs)] {
                    label.insert(side, next_label);
                    records.push(CondensedRecord {
                        parent,
                        child: next_label,
                        lambda,
                        child_size: size,
                    });
                    next_label += 1;
                    queue.push_back(side);
                }
            }
            (false, false) => {
                fall_out(left, &mut records);
                fall_out(right, &mut records);
            }
            (false, true) => {
                fall_out(left, &mut records);
                label.insert(right, parent);
                queue.push_back(right);
            }
            (true, false) => {
                fall_out(right, &mut records);
                label.insert(left, parent);
                queue.push_back(left);
            }
        }
    }
    CondensedTree {
        n_points,
        records,
        stability: BTreeMap::new(),
        selected: Vec::new(),
    }
}

fn compute_stability(tree: &CondensedTree) -> BTreeMap<usize, f64> {
    let mut births: BTreeMap<usize, f64> = BTreeMap::new();
    births.insert(tree.root(), 0.0);
    for r in &tree.records {
        if r.child >= tree.n_points {
            births.insert(r.child, r.lambda);
        }
    }
    let mut stability: BTreeMap<usize, f64> = births.keys().map(|&c| (c, 0.0)).collect();
    for r in &tree.records {
        let contribution = (r.lambda - births[&r.parent]) * r.child_size as f64;
        // inf - inf: a cluster born and dissolved at zero distance.
        if !contribution.is_nan() {
            *stability.get_mut(&r.parent).unwrap() += contribution;
        }
    }
    stability
}

/// Excess-of-mass selection. The root is only eligible when it has no child
/// clusters, in which case it is the single flat cluster.
pub fn select_clusters_eom(mut tree: CondensedTree) -> (BTreeSet<usize>, CondensedTree) {
    let stability = compute_stability(&tree);
    let root = tree.root();
    let mut selected = BTreeSet::new();
    if tree.n_points == 0 {
        tree.stability = stability;
        return (selected, tree);
    }
    let children: BTreeMap<usize, Vec<usize>> = stability
        .keys()
        .map(|&c| (c, tree.child_clusters(c)))
        .collect();
    if children[&root].is_empty() {
        selected.insert(root);
    } else {
        let mut propagated = stability.clone();
        let mut is_cluster: BTreeMap<usize, bool> = stability.keys().map(|&c| (c, true)).collect();
        for &node in stability.keys().rev().filter(|&&c| c != root) {
            let subtree: f64 = children[&node].iter().map(|c| propagated[c]).sum();
            if subtree > propagated[&node] {
                is_cluster.insert(node, false);
                propagated.insert(node, subtree);
            } else {
                let mut stack = children[&node].clone();
                while let Some(c) = stack.pop() {
                    is_cluster.insert(c, false);
                    stack.extend(children[&c].iter().copied());
                }
            }
        }
        selected = is_cluster
            .into_iter()
            .filter(|&(c, keep)| keep && c != root)
            .map(|(c, _)| c)
            .collect();
    }
    tree.stability = stability;
    tree.selected = selected.iter().copied().collect();
    (selected, tree)
}

/// Selected cluster node for every point, or `None` for noise: a point
/// belongs to the nearest selected ancestor of the node it fell out of.
pub fn label_points(tree: &CondensedTree, selected: &BTreeSet<usize>, n_points: usize) -> Vec<Option<usize>> {
    let mut parent_of: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &tree.records {
        parent_of.insert(r.child, r.parent);
    }
    (0..n_points)
        .map(|p| {
            let mut node = *parent_of.get(&p)?;
            loop {
                if selected.contains(&node) {
                    return Some(node);
                }
                node = *parent_of.get(&node)?;
            }
        })
        .collect()
}

/// Lambda at which each point left its cluster, relative to the largest
/// lambda recorded directly under that cluster.
pub fn membership_probabilities(tree: &CondensedTree, labels: &[Option<usize>]) -> Vec<f64> {
    let mut max_lambda: BTreeMap<usize, f64> = BTreeMap::new();
    let mut point_lambda = vec![0.0; labels.len()];
    for r in &tree.records {
        let m = max_lambda.entry(r.parent).or_insert(0.0);
        *m = m.max(r.lambda);
        if r.child < tree.n_points {
            point_lambda[r.child] = r.lambda;
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(p, cluster)| match cluster {
            None => 0.0,
            Some(c) => {
                let max = max_lambda.get(c).copied().unwrap_or(0.0);
                if max == 0.0 || !max.is_finite() {
                    1.0
                } else {
                    (point_lambda[p].min(max) / max).clamp(0.0, 1.0)
                }
            }
        })
        .collect()
}
