use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::Rng;

use super::{InferError, Result};
use crate::linalg::Mat;

pub const KMEANS_DEFAULT_RESTARTS: usize = 50;
pub const KMEANS_DEFAULT_MAX_ITERS: usize = 100;

/// Largest cluster count solved by enumerating label permutations.
const BRUTE_FORCE_MAX_K: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<usize>,
    /// `k×d`.
    pub centroids: Mat,
    /// Within-cluster sum of squares.
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart.
    pub objective_trace: Vec<f64>,
}

/// K-means on the rows of `data`: kmeans++ seeding, Lloyd iterations until
/// assignments stop changing, best objective over `restarts`.
pub fn kmeans_rows(data: &Mat, k: usize, restarts: usize, max_iters: usize, rng: &mut impl Rng) -> Result<Clustering> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(InferError::InvalidInput(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if restarts == 0 || max_iters == 0 {
        return Err(InferError::InvalidInput(
            "restarts and max_iters must be positive".into(),
        ));
    }
    let mut best: Option<Clustering> = None;
    for _ in 0..restarts {
        let seeds = kmeans_pp(data, k, rng);
        let run = lloyd(data, seeds, max_iters);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn sq_dist(data: &Mat, i: usize, centroids: &Mat, c: usize) -> f64 {
    (0..data.ncols())
        .map(|a| {
            let diff = data[(i, a)] - centroids[(c, a)];
            diff * diff
        })
        .sum()
}

fn kmeans_pp(data: &Mat, k: usize, rng: &mut impl Rng) -> Mat {
    let n = data.nrows();
    let mut centroids = Mat::zeros(k, data.ncols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&data.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(data, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in nearest.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from(&data.row(pick));
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(sq_dist(data, i, &centroids, c));
        }
    }
    centroids
}

fn assign(data: &Mat, centroids: &Mat, labels: &mut [usize]) -> bool {
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..centroids.nrows() {
            let d = sq_dist(data, i, centroids, c);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if *label != best {
            *label = best;
            changed = true;
        }
    }
    changed
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(data: &Mat, centroids: &mut Mat, labels: &mut [usize]) {
    let k = centroids.nrows();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| sq_dist(data, a, centroids, labels[a]).total_cmp(&sq_dist(data, b, centroids, labels[b])))
            .expect("k <= n leaves a cluster with two points");
        labels[donor] = empty;
        centroids.row_mut(empty).copy_from(&data.row(donor));
    }
}

fn update_centroids(data: &Mat, labels: &[usize], centroids: &mut Mat) {
    centroids.fill(0.0);
    let mut counts = vec![0usize; centroids.nrows()];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for a in 0..data.ncols() {
            centroids[(l, a)] += data[(i, a)];
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        for a in 0..data.ncols() {
            centroids[(c, a)] /= count as f64;
        }
    }
}

/// Within-cluster sum of squares of `labels` about their cluster means.
pub fn wcss(data: &Mat, labels: &[usize], k: usize) -> f64 {
    let mut centroids = Mat::zeros(k, data.ncols());
    update_centroids(data, labels, &mut centroids);
    (0..data.nrows()).map(|i| sq_dist(data, i, &centroids, labels[i])).sum()
}

fn lloyd(data: &Mat, mut centroids: Mat, max_iters: usize) -> Clustering {
    let n = data.nrows();
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..max_iters {
        let changed = assign(data, &centroids, &mut labels);
        if !changed && !trace.is_empty() {
            break;
        }
        repair_empty(data, &mut centroids, &mut labels);
        update_centroids(data, &labels, &mut centroids);
        trace.push((0..n).map(|i| sq_dist(data, i, &centroids, labels[i])).sum());
    }
    Clustering {
        objective: *trace.last().expect("at least one iteration"),
        labels,
        centroids,
        objective_trace: trace,
    }
}

/// Misclassification count under the best relabeling:
/// `min_σ #{i : labels(i) ≠ σ(truth(i))}`.
pub fn clustering_error(labels: &[usize], truth: &[usize], k: usize) -> Result<usize> {
    if labels.len() != truth.len() {
        return Err(InferError::InvalidInput(format!(
            "labelings differ in length: {} vs {}",
            labels.len(),
            truth.len()
        )));
    }
    if let Some(bad) = labels.iter().chain(truth).find(|&&l| l >= k) {
        return Err(InferError::InvalidInput(format!("label {bad} out of range for k={k}")));
    }
    // agree[a][b] = #{i : truth(i) = a, labels(i) = b}
    let mut agree = vec![vec![0i64; k]; k];
    for (&l, &t) in labels.iter().zip(truth) {
        agree[t][l] += 1;
    }
    let best = if k <= BRUTE_FORCE_MAX_K {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = 0;
        for_each_permutation(&mut perm, 0, &mut |p| {
            best = best.max((0..k).map(|a| agree[a][p[a]]).sum::<i64>());
        });
        best
    } else {
        let weights = Matrix::from_rows(agree).expect("square agreement table");
        kuhn_munkres(&weights).0
    };
    Ok(labels.len() - best as usize)
}

fn for_each_permutation(perm: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == perm.len() {
        visit(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        for_each_permutation(perm, start + 1, visit);
        perm.swap(start, i);
    }
}
