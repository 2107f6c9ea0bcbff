//! k-means++ seeding and Lloyd iteration (Euclidean).

use std::cmp::Ordering;

use crate::distances::squared_euclidean;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 300,
            restarts: 1,
        }
    }
}

/// Result of one k-means fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub centroids: Vec<Vec<T>>,
    /// Cluster id for each input point, in input order.
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroid.
    pub inertia: T,
    /// Lloyd iterations performed.
    pub iterations: usize,
    /// Inertia after every centroid update, then the final assignment.
    pub history: Vec<T>,
}

impl<T: Real> ClusterModel<T> {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// Number of pairwise-distinct points.
pub fn distinct_count<T: Real, P: AsRef<[T]>>(points: &[P]) -> usize {
    let mut sorted: Vec<&[T]> = points.iter().map(AsRef::as_ref).collect();
    sorted.sort_by(|a, b| lex_cmp(a, b));
    sorted.dedup_by(|a, b| a == b);
    sorted.len()
}

fn validate<T: Real, P: AsRef<[T]>>(points: &[P], k: usize) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::Clustering("empty point set".into()));
    }
    let dim = points[0].as_ref().len();
    if dim == 0 || points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch(
            "points must share a positive dimension".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Clustering("k must be at least 1".into()));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::Clustering(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }
    Ok(dim)
}

/// k-means++ seeding: first centroid uniform, then D²-weighted sampling.
pub fn kmeans_pp_init<T: Real, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<Vec<T>>> {
    validate(points, k)?;
    let n = points.len();
    let first = rng.below(n as u64) as usize;
    let mut centroids = vec![points[first].as_ref().to_vec()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| squared_euclidean(p.as_ref(), &centroids[0]).as_f64())
        .collect();

    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in nearest.iter().enumerate() {
            acc += w;
            if w > 0.0 {
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        // `validate` guarantees an unchosen distinct point, so some weight is positive.
        let pick = pick.ok_or_else(|| Error::Internal("k-means++ ran out of candidates".into()))?;
        let c = points[pick].as_ref().to_vec();
        for (w, p) in nearest.iter_mut().zip(points) {
            *w = w.min(squared_euclidean(p.as_ref(), &c).as_f64());
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest id.
fn nearest_centroid<T: Real>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, squared_euclidean(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_euclidean(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn inertia<T: Real, P: AsRef<[T]>>(points: &[P], centroids: &[Vec<T>], assignments: &[usize]) -> T {
    points
        .iter()
        .zip(assignments)
        .fold(T::zero(), |acc, (p, &a)| {
            acc + squared_euclidean(p.as_ref(), &centroids[a])
        })
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that keeps at least one member.
fn repair_empty<T: Real, P: AsRef<[T]>>(
    points: &[P],
    centroids: &mut [Vec<T>],
    assignments: &mut [usize],
    sizes: &mut [usize],
) {
    for empty in 0..centroids.len() {
        if sizes[empty] != 0 {
            continue;
        }
        let mut far: Option<(usize, T)> = None;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = squared_euclidean(p.as_ref(), &centroids[a]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        if let Some((i, _)) = far {
            sizes[assignments[i]] -= 1;
            assignments[i] = empty;
            sizes[empty] = 1;
            centroids[empty] = points[i].as_ref().to_vec();
        }
    }
}

/// Lloyd iteration from the given centroids.
pub fn lloyd<T: Real, P: AsRef<[T]>>(
    points: &[P],
    mut centroids: Vec<Vec<T>>,
    tol: f64,
    max_iter: usize,
) -> ClusterModel<T> {
    let k = centroids.len();
    let dim = centroids[0].len();
    let mut assignments = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        let mut sizes = vec![0usize; k];
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest_centroid(p.as_ref(), &centroids).0;
            sizes[*a] += 1;
        }
        repair_empty(points, &mut centroids, &mut assignments, &mut sizes);

        let mut sums = vec![vec![T::zero(); dim]; k];
        for (p, &a) in points.iter().zip(&assignments) {
            for (s, &x) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for (j, sum) in sums.into_iter().enumerate() {
            if sizes[j] == 0 {
                continue;
            }
            let count = T::lit(sizes[j] as f64);
            let updated: Vec<T> = sum.into_iter().map(|s| s / count).collect();
            shift = shift.max(squared_euclidean(&updated, &centroids[j]).as_f64().sqrt());
            centroids[j] = updated;
        }
        history.push(inertia(points, &centroids, &assignments));
        if shift < tol {
            break;
        }
    }

    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest_centroid(p.as_ref(), &centroids).0;
    }
    let final_inertia = inertia(points, &centroids, &assignments);
    history.push(final_inertia);

    ClusterModel {
        k,
        centroids,
        assignments,
        inertia: final_inertia,
        iterations,
        history,
    }
}

/// Every restart of a fit, in restart order.
///
/// Restart `r` seeds from `rng.derive(r)` after one draw from `rng`, so the
/// per-restart streams depend only on the caller's stream and `r`.
pub fn kmeans_fit_all<T: Real, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    rng: &mut Rng,
    params: &KMeansParams,
) -> Result<Vec<ClusterModel<T>>> {
    validate(points, k)?;
    if params.restarts == 0 || params.max_iter == 0 {
        return Err(Error::InvalidConfig(
            "restarts and max_iter must be at least 1".into(),
        ));
    }
    let base = Rng::new(rng.next_u64());
    (0..params.restarts)
        .map(|r| {
            let mut stream = base.derive(r as u64);
            let init = kmeans_pp_init(points, k, &mut stream)?;
            Ok(lloyd(points, init, params.tol, params.max_iter))
        })
        .collect()
}

/// Best-inertia fit over `params.restarts` runs; ties keep the earliest restart.
pub fn kmeans_fit<T: Real, P: AsRef<[T]>>(
    points: &[P],
    k: usize,
    rng: &mut Rng,
    params: &KMeansParams,
) -> Result<ClusterModel<T>> {
    let runs = kmeans_fit_all(points, k, rng, params)?;
    let mut best: Option<ClusterModel<T>> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.ok_or_else(|| Error::Internal("no k-means restart ran".into()))
}
