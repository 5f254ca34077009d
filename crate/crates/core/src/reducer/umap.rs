//! UMAP: fuzzy k-nearest-neighbour graph plus a force-directed layout.
//!
//! The steps follow the reference algorithm:
//!
//! 1. exact k-nearest neighbours under cosine distance;
//! 2. per-point `rho` (nearest-neighbour distance) and `sigma` found by
//!    bisection so that `sum_j exp(-(d_j - rho) / sigma) = log2(k)`;
//! 3. directed memberships combined with the fuzzy union `a + b - ab`;
//! 4. spectral initialisation from the normalized graph Laplacian;
//! 5. negative-sampling SGD on the fuzzy cross-entropy, learning rate
//!    decaying linearly from 1 to 0.
//!
//! The layout is single-threaded and seeded, so output is bit-for-bit
//! reproducible.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_input, ReduceError, ReduceMethod, ReduceParams, ReducedEmbeddings};

const NEGATIVE_SAMPLE_RATE: f64 = 5.0;
const GRAD_CLIP: f64 = 4.0;
const SPREAD: f64 = 1.0;
const SIGMA_ITERATIONS: usize = 200;
const SIGMA_TOLERANCE: f64 = 1e-9;
const SPECTRAL_MAX_ITERATIONS: usize = 2000;
const SPECTRAL_TOLERANCE: f64 = 1e-10;
const INIT_SCALE: f64 = 10.0;
const INIT_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    /// Neighbour indices per point, nearest first; the point itself is excluded.
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

/// Exact k-nearest neighbours under cosine distance `1 - cos`.
/// Equal distances are ordered by neighbour index.
pub fn exact_knn_cosine(data: &[Vec<f64>], k: usize) -> KnnGraph {
    let unit: Vec<Vec<f64>> = data
        .iter()
        .map(|p| crate::vector::normalized(p).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..unit.len())
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = unit
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| ((1.0 - crate::vector::dot(&unit[i], q)).max(0.0), j))
                .collect();
            let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k, by_distance);
                cand.truncate(k);
            }
            cand.sort_by(by_distance);
            cand.into_iter().map(|(d, j)| (j, d)).unzip()
        })
        .collect();
    let (indices, distances) = rows.into_iter().unzip();
    KnnGraph { indices, distances }
}

/// Returns `(rho, sigma)` for one point's sorted neighbour distances.
pub fn smooth_knn_distance(distances: &[f64], target: f64) -> (f64, f64) {
    let rho = distances.first().copied().unwrap_or(0.0);
    let total = |sigma: f64| -> f64 {
        distances
            .iter()
            .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
            .sum()
    };
    let at_rho = distances.iter().filter(|&&d| d <= rho).count() as f64;
    if at_rho >= target {
        // Too many neighbours tie with the nearest one; no sigma reaches the
        // target, so use a small floor tied to the neighbourhood scale.
        let mean = distances.iter().sum::<f64>() / distances.len().max(1) as f64;
        return (rho, (1e-3 * mean).max(f64::MIN_POSITIVE));
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut sigma = 1.0;
    for _ in 0..SIGMA_ITERATIONS {
        let s = total(sigma);
        if (s - target).abs() < SIGMA_TOLERANCE {
            break;
        }
        if s > target {
            hi = sigma;
            sigma = (lo + hi) / 2.0;
        } else {
            lo = sigma;
            sigma = if hi.is_finite() { (lo + hi) / 2.0 } else { sigma * 2.0 };
        }
    }
    (rho, sigma)
}

/// Symmetric sparse weighted graph; rows are sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl FuzzyGraph {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        })
    }
}

#[derive(Debug, Clone)]
pub struct FuzzySimplicialSet {
    pub graph: FuzzyGraph,
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
}

pub fn fuzzy_simplicial_set(knn: &KnnGraph, n_neighbors: usize) -> FuzzySimplicialSet {
    let n = knn.indices.len();
    let target = (n_neighbors as f64).log2();
    let (rhos, sigmas): (Vec<f64>, Vec<f64>) = knn
        .distances
        .iter()
        .map(|d| smooth_knn_distance(d, target))
        .unzip();
    let mut directed: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (&j, &d) in knn.indices[i].iter().zip(&knn.distances[i]) {
            let w = (-(d - rhos[i]).max(0.0) / sigmas[i]).exp();
            directed[i].push((j, w));
        }
        directed[i].sort_by_key(|&(j, _)| j);
    }
    let lookup = |i: usize, j: usize| -> f64 {
        directed[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|p| directed[i][p].1)
            .unwrap_or(0.0)
    };
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, _) in &directed[i] {
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let a = lookup(lo, hi);
            let b = lookup(hi, lo);
            let w = a + b - a * b;
            // Visit each unordered pair once: from `lo`, or from `hi` when
            // `lo` does not list `hi` as a neighbour.
            let first_visit = i == lo || a == 0.0;
            if first_visit && w > 0.0 {
                rows[lo].push((hi, w));
                rows[hi].push((lo, w));
            }
        }
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|&(j, _)| j);
        row.dedup_by_key(|&mut (j, _)| j);
    }
    FuzzySimplicialSet {
        graph: FuzzyGraph { rows },
        rhos,
        sigmas,
    }
}

/// Fits `1 / (1 + a d^(2b))` to the target membership curve with a
/// Levenberg-Marquardt least-squares solve.
pub fn find_ab_params(spread: f64, min_dist: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..300).map(|i| 3.0 * spread * i as f64 / 299.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| if x < min_dist { 1.0 } else { (-(x - min_dist) / spread).exp() })
        .collect();
    let residuals = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let f = 1.0 / (1.0 + a * x.powf(2.0 * b));
                (f - y) * (f - y)
            })
            .sum()
    };
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = residuals(a, b);
    for _ in 0..500 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x <= 0.0 {
                continue;
            }
            let u = x.powf(2.0 * b);
            let denom = 1.0 + a * u;
            let f = 1.0 / denom;
            let da = -u / (denom * denom);
            let db = -a * u * 2.0 * x.ln() / (denom * denom);
            let r = f - y;
            jtj[0][0] += da * da;
            jtj[0][1] += da * db;
            jtj[1][1] += db * db;
            jtr[0] += da * r;
            jtr[1] += db * r;
        }
        jtj[1][0] = jtj[0][1];
        let m00 = jtj[0][0] * (1.0 + lambda);
        let m11 = jtj[1][1] * (1.0 + lambda);
        let det = m00 * m11 - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let step_b = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let (na, nb) = (a + step_a, b + step_b);
        let new_cost = if na > 0.0 && nb > 0.0 { residuals(na, nb) } else { f64::INFINITY };
        if new_cost < cost {
            let done = (cost - new_cost).abs() < 1e-15 * cost.max(1e-300);
            a = na;
            b = nb;
            cost = new_cost;
            lambda *= 0.3;
            if done {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (a, b)
}

/// Leading non-trivial eigenvectors of the normalized adjacency
/// `D^-1/2 W D^-1/2` (the smallest of the normalized Laplacian), found by
/// seeded subspace iteration. Returns `None` if the iteration breaks down.
pub fn spectral_layout(graph: &FuzzyGraph, dim: usize, seed: u64) -> Option<Vec<Vec<f64>>> {
    let n = graph.n();
    let k = dim + 1;
    if n <= k {
        return None;
    }
    let inv_sqrt_deg: Vec<f64> = graph
        .rows
        .iter()
        .map(|row| {
            let d: f64 = row.iter().map(|&(_, w)| w).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    // (I + S) / 2 has the same eigenvectors as S and a non-negative spectrum,
    // so plain subspace iteration converges to the top of S.
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut y = x * 0.5;
        for (i, row) in graph.rows.iter().enumerate() {
            for &(j, w) in row {
                let s = 0.5 * w * inv_sqrt_deg[i] * inv_sqrt_deg[j];
                for c in 0..k {
                    y[(i, c)] += s * x[(j, c)];
                }
            }
        }
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EC7_5A1C);
    let mut basis = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>() - 0.5);
    basis = orthonormalize(basis)?;
    let mut previous = vec![f64::INFINITY; k];
    let mut ritz_vectors = basis.clone();
    for iter in 0..SPECTRAL_MAX_ITERATIONS {
        basis = orthonormalize(apply(&basis))?;
        if iter % 10 == 9 || iter + 1 == SPECTRAL_MAX_ITERATIONS {
            let projected = basis.transpose() * apply(&basis);
            let sym = (&projected + projected.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
            let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let coeffs = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
            ritz_vectors = &basis * coeffs;
            let change = values
                .iter()
                .zip(&previous)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            previous = values;
            if change < SPECTRAL_TOLERANCE {
                break;
            }
        }
    }
    if ritz_vectors.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| (1..k).map(|c| ritz_vectors[(i, c)]).collect())
        .collect();
    let max_abs = points.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if max_abs > 0.0 {
        Some(points)
    } else {
        None
    }
}

/// Modified Gram-Schmidt on the columns; `None` if the columns collapse.
fn orthonormalize(mut m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = m.ncols();
    for c in 0..k {
        for p in 0..c {
            let proj = m.column(c).dot(&m.column(p));
            let prev = m.column(p).into_owned();
            m.column_mut(c).axpy(-proj, &prev, 1.0);
        }
        let norm = m.column(c).norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return None;
        }
        m.column_mut(c).scale_mut(1.0 / norm);
    }
    Some(m)
}

fn random_layout(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xDA7A_1A10);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect()
}

/// Initial layout: spectral when possible, rescaled to `[0, 10]` per axis.
pub fn initial_layout(graph: &FuzzyGraph, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = graph.n();
    let mut points = match spectral_layout(graph, dim, seed) {
        Some(mut p) => {
            let max_abs = p.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            let expansion = INIT_SCALE / max_abs;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x717E_2000);
            for x in p.iter_mut().flatten() {
                *x = *x * expansion + rng.random_range(-INIT_JITTER..INIT_JITTER);
            }
            p
        }
        None => {
            log::warn!("spectral initialisation failed; using a random layout");
            random_layout(n, dim, seed)
        }
    };
    for c in 0..dim {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[c]), hi.max(p[c])));
        let range = hi - lo;
        for p in points.iter_mut() {
            p[c] = if range > 0.0 { INIT_SCALE * (p[c] - lo) / range } else { 0.0 };
        }
    }
    points
}

fn clip(x: f64) -> f64 {
    x.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Negative-sampling SGD over the graph edges, in place.
pub fn optimize_layout(
    embedding: &mut [Vec<f64>],
    graph: &FuzzyGraph,
    a: f64,
    b: f64,
    n_epochs: usize,
    seed: u64,
) {
    let n = embedding.len();
    if n_epochs == 0 || n < 2 {
        return;
    }
    let dim = embedding[0].len();
    let max_w = graph
        .rows
        .iter()
        .flatten()
        .map(|&(_, w)| w)
        .fold(0.0f64, f64::max);
    if max_w <= 0.0 {
        return;
    }
    let cutoff = max_w / n_epochs as f64;
    let mut heads = Vec::new();
    let mut tails = Vec::new();
    let mut epochs_per_sample = Vec::new();
    for (i, row) in graph.rows.iter().enumerate() {
        for &(j, w) in row {
            if w >= cutoff {
                heads.push(i);
                tails.push(j);
                epochs_per_sample.push(max_w / w);
            }
        }
    }
    let epochs_per_negative: Vec<f64> = epochs_per_sample
        .iter()
        .map(|e| e / NEGATIVE_SAMPLE_RATE)
        .collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();
    let mut flat: Vec<f64> = embedding.iter().flatten().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = vec![0.0; dim];

    for epoch in 0..n_epochs {
        let alpha = 1.0 - epoch as f64 / n_epochs as f64;
        let e = epoch as f64;
        for edge in 0..heads.len() {
            if next_sample[edge] > e {
                continue;
            }
            let j = heads[edge];
            let k = tails[edge];
            current.copy_from_slice(&flat[j * dim..(j + 1) * dim]);
            let dist_sq: f64 = (0..dim).map(|d| (current[d] - flat[k * dim + d]).powi(2)).sum();
            let coeff = if dist_sq > 0.0 {
                -2.0 * a * b * dist_sq.powf(b - 1.0) / (a * dist_sq.powf(b) + 1.0)
            } else {
                0.0
            };
            for d in 0..dim {
                let grad = clip(coeff * (current[d] - flat[k * dim + d]));
                current[d] += grad * alpha;
                flat[k * dim + d] -= grad * alpha;
            }
            next_sample[edge] += epochs_per_sample[edge];

            let n_neg = ((e - next_negative[edge]) / epochs_per_negative[edge]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let other = rng.random_range(0..n);
                if other == j {
                    continue;
                }
                let o = &flat[other * dim..(other + 1) * dim];
                let dist_sq: f64 = (0..dim).map(|d| (current[d] - o[d]).powi(2)).sum();
                if dist_sq <= 0.0 {
                    continue;
                }
                let coeff = 2.0 * b / ((0.001 + dist_sq) * (a * dist_sq.powf(b) + 1.0));
                for d in 0..dim {
                    current[d] += clip(coeff * (current[d] - o[d])) * alpha;
                }
            }
            next_negative[edge] += n_neg as f64 * epochs_per_negative[edge];
            flat[j * dim..(j + 1) * dim].copy_from_slice(&current);
        }
    }
    for (i, p) in embedding.iter_mut().enumerate() {
        p.copy_from_slice(&flat[i * dim..(i + 1) * dim]);
    }
}

/// Fuzzy-set cross-entropy between the graph and the layout, summed over
/// all unordered pairs. Quadratic in `n`; meant for diagnostics and tests.
pub fn cross_entropy(graph: &FuzzyGraph, embedding: &[Vec<f64>], a: f64, b: f64) -> f64 {
    const EPS: f64 = 1e-12;
    let n = embedding.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = graph.weight(i, j);
            let d2 = crate::vector::squared_euclidean(&embedding[i], &embedding[j]);
            let q = (1.0 / (1.0 + a * d2.powf(b))).clamp(EPS, 1.0 - EPS);
            total -= w * q.ln() + (1.0 - w) * (1.0 - q).ln();
        }
    }
    total
}

pub fn reduce_umap(data: &[Vec<f64>], params: &ReduceParams) -> Result<ReducedEmbeddings, ReduceError> {
    params.validate()?;
    let n = data.len();
    if n <= params.n_neighbors {
        return Err(ReduceError::TooFewPoints {
            needed: params.n_neighbors + 1,
            found: n,
        });
    }
    check_input(data)?;
    let knn = exact_knn_cosine(data, params.n_neighbors);
    let fuzzy = fuzzy_simplicial_set(&knn, params.n_neighbors);
    let (a, b) = find_ab_params(SPREAD, params.min_dist);
    let mut points = initial_layout(&fuzzy.graph, params.n_components, params.seed);
    optimize_layout(&mut points, &fuzzy.graph, a, b, params.n_epochs, params.seed);
    Ok(ReducedEmbeddings {
        points,
        method: ReduceMethod::Umap,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ab_params_match_reference_defaults() {
        // Reference values for spread = 1, min_dist = 0.1.
        let (a, b) = find_ab_params(1.0, 0.1);
        assert!((a - 1.577).abs() < 1e-2, "a = {a}");
        assert!((b - 0.895).abs() < 1e-2, "b = {b}");
    }

    #[test]
    fn sigma_hits_target() {
        let d = [0.1, 0.2, 0.25, 0.4, 0.8];
        let target = 5f64.log2();
        let (rho, sigma) = smooth_knn_distance(&d, target);
        let s: f64 = d.iter().map(|&x| (-(x - rho).max(0.0) / sigma).exp()).sum();
        assert_eq!(rho, 0.1);
        assert!((s - target).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_for_neighbors() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64]).collect();
        let params = ReduceParams {
            n_neighbors: 25,
            ..ReduceParams::default()
        };
        assert!(matches!(
            reduce_umap(&data, &params),
            Err(ReduceError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn spectral_matches_dense_eigensolver() {
        // Ring of 12 nodes with a few chords.
        let n = 12;
        let mut rows = vec![Vec::new(); n];
        let mut add = |i: usize, j: usize, w: f64| {
            rows[i].push((j, w));
            rows[j].push((i, w));
        };
        for i in 0..n {
            add(i, (i + 1) % n, 1.0);
        }
        add(0, 6, 0.5);
        add(3, 9, 0.25);
        for r in rows.iter_mut() {
            r.sort_by_key(|&(j, _)| j);
        }
        let graph = FuzzyGraph { rows };
        let layout = spectral_layout(&graph, 2, 3).unwrap();

        let deg: Vec<f64> = graph.rows.iter().map(|r| r.iter().map(|x| x.1).sum()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| graph.weight(i, j) / (deg[i] * deg[j]).sqrt());
        let eig = SymmetricEigen::new(s.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        // Rayleigh quotient of each returned vector equals the matching eigenvalue.
        for c in 0..2 {
            let v = nalgebra::DVector::from_fn(n, |i, _| layout[i][c]);
            let rq = v.dot(&(&s * &v)) / v.dot(&v);
            assert!((rq - vals[c + 1]).abs() < 1e-6, "{rq} vs {}", vals[c + 1]);
        }
    }
}
