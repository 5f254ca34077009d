use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_input, ReduceError, ReduceMethod, ReduceParams, ReducedEmbeddings};

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;
/// Variance this small relative to the raw data energy is rounding noise.
const ENERGY_TOLERANCE: f64 = 1e-24;

/// Projects mean-centred data onto its top principal directions.
///
/// Each component's sign is fixed so that its largest-magnitude loading is
/// positive. Components beyond the rank of the data are zero.
pub fn reduce_pca(data: &[Vec<f64>], n_components: usize) -> Result<ReducedEmbeddings, ReduceError> {
    if n_components < 1 {
        return Err(ReduceError::InvalidParams("n_components must be >= 1".into()));
    }
    let n = data.len();
    if n < n_components {
        return Err(ReduceError::TooFewPoints {
            needed: n_components,
            found: n,
        });
    }
    let dim = check_input(data)?;
    let params = ReduceParams {
        method: ReduceMethod::Pca,
        n_components,
        ..ReduceParams::default()
    };
    if n == 0 {
        return Ok(ReducedEmbeddings {
            points: vec![],
            method: ReduceMethod::Pca,
            params,
        });
    }

    let mut mean = vec![0.0; dim];
    for p in data {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centred = DMatrix::from_fn(n, dim, |i, j| data[i][j] - mean[j]);

    // Loadings as columns of a dim x k matrix. When there are fewer points than
    // dimensions the Gram matrix is smaller and has the same nonzero spectrum.
    let (eigvals, loadings) = if n < dim {
        let gram = &centred * centred.transpose();
        let eig = SymmetricEigen::new(gram);
        let order = descending(&eig.eigenvalues);
        let mut vals = Vec::new();
        let mut cols = Vec::new();
        for &i in &order {
            let lambda = eig.eigenvalues[i].max(0.0);
            vals.push(lambda);
            let u = eig.eigenvectors.column(i);
            let mut w = centred.transpose() * u;
            let norm = w.norm();
            if norm > 0.0 {
                w /= norm;
            }
            cols.push(w);
        }
        (vals, cols)
    } else {
        let cov = centred.transpose() * &centred;
        let eig = SymmetricEigen::new(cov);
        let order = descending(&eig.eigenvalues);
        let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let cols = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        (vals, cols)
    };

    let energy: f64 = data.iter().flatten().map(|x| x * x).sum();
    let largest = eigvals.first().copied().unwrap_or(0.0);
    let floor = (RANK_TOLERANCE * largest).max(ENERGY_TOLERANCE * energy);
    let mut points = vec![vec![0.0; n_components]; n];
    for (c, (lambda, w)) in eigvals.iter().zip(&loadings).take(n_components).enumerate() {
        if largest <= 0.0 || *lambda <= floor {
            continue;
        }
        let mut best = 0usize;
        for j in 0..dim {
            if w[j].abs() > w[best].abs() {
                best = j;
            }
        }
        let sign = if w[best] < 0.0 { -1.0 } else { 1.0 };
        let proj = &centred * w;
        for (i, row) in points.iter_mut().enumerate() {
            row[c] = sign * proj[i];
        }
    }
    Ok(ReducedEmbeddings {
        points,
        method: ReduceMethod::Pca,
        params,
    })
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}
