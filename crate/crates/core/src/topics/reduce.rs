//! Linear projection onto the leading principal directions.

use super::TopicError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub coords: Vec<Vec<f64>>,
    /// Eigenvalues of the centred scatter matrix, descending, one per retained
    /// rank (at most `min(n, dim)`).
    pub eigenvalues: Vec<f64>,
}

/// Pluggable dimensionality reduction.
pub trait Reducer {
    fn reduce(&self, points: &[Vec<f64>], target_dim: usize) -> Result<Reduced, TopicError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PcaReducer;

impl Reducer for PcaReducer {
    fn reduce(&self, points: &[Vec<f64>], target_dim: usize) -> Result<Reduced, TopicError> {
        reduce(points, target_dim)
    }
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Centres the data and projects it on the top `target_dim` principal
/// directions. Each direction is oriented so that its largest-magnitude
/// loading is positive.
pub fn reduce(points: &[Vec<f64>], target_dim: usize) -> Result<Reduced, TopicError> {
    let n = points.len();
    if target_dim == 0 || n < target_dim + 1 {
        return Err(TopicError::TooFewPoints { got: n, need: target_dim + 1 });
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(TopicError::Ragged);
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, d, |r, c| points[r][c] - mean[c]);

    // Directions as columns of a d × r matrix, with the scatter eigenvalues.
    let (vals, dirs) = if d <= n {
        let (vals, vecs) = sorted_eigen(x.transpose() * &x);
        (vals, vecs)
    } else {
        let (vals, u) = sorted_eigen(&x * x.transpose());
        let top = vals[0].max(f64::MIN_POSITIVE);
        let mut dirs = x.transpose() * &u;
        for (k, &lam) in vals.iter().enumerate() {
            let mut col = dirs.column_mut(k);
            if lam > 1e-12 * top {
                col /= lam.sqrt();
            } else {
                col.fill(0.0);
            }
        }
        (vals, dirs)
    };

    let top = vals.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut coords = vec![vec![0.0; target_dim]; n];
    for k in 0..target_dim.min(dirs.ncols()) {
        if vals[k] <= 1e-12 * top {
            continue;
        }
        let col = dirs.column(k);
        let mut lead = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        let proj = &x * col;
        for (r, c) in coords.iter_mut().enumerate() {
            c[k] = sign * proj[r];
        }
    }
    Ok(Reduced { coords, eigenvalues: vals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn planar_points_keep_distances() {
        // affine plane in R^5: p = o + s*u + t*v
        let o = [1.0, -2.0, 0.5, 3.0, 0.0];
        let u = [1.0, 1.0, 0.0, 0.0, 1.0];
        let v = [0.0, 1.0, -1.0, 2.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let (s, t) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                (0..5).map(|k| o[k] + s * u[k] + t * v[k]).collect()
            })
            .collect();
        let r = reduce(&pts, 2).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert!((dist(&pts[i], &pts[j]) - dist(&r.coords[i], &r.coords[j])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wide_data_uses_gram_route() {
        // more dimensions than points, intrinsic dimension 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis: Vec<Vec<f64>> = (0..2).map(|_| (0..40).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                let (s, t): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                (0..40).map(|k| s * basis[0][k] + t * basis[1][k]).collect()
            })
            .collect();
        let r = reduce(&pts, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((dist(&pts[i], &pts[j]) - dist(&r.coords[i], &r.coords[j])).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn duplicates_map_together() {
        let pts = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![0.0, 5.0, 1.0], vec![2.0, 0.0, 0.0]];
        let r = reduce(&pts, 2).unwrap();
        assert_eq!(r.coords[0], r.coords[1]);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert!(matches!(reduce(&pts, 2), Err(TopicError::TooFewPoints { got: 2, need: 3 })));
    }
}
