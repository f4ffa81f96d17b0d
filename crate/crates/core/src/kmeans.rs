//! Lloyd's algorithm with Kmeans++ seeding over fixed-width points.
//!
//! Assignment runs in parallel; every reduction is a sequential pass in point
//! order, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum KmeansError {
    #[error("number of clusters must be positive")]
    ZeroClusters,
    #[error("{k} clusters requested for {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("max_iters must be positive")]
    ZeroIterations,
}

#[derive(Debug, Clone)]
pub struct KmeansFit<T, const D: usize> {
    pub centers: Vec<[T; D]>,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    /// Within-cluster sum of squares after each update step.
    pub objective_trace: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar, const D: usize> KmeansFit<T, D> {
    pub fn objective(&self) -> T {
        self.objective_trace.last().copied().unwrap_or_else(T::zero)
    }
}

#[inline]
pub fn squared_distance<T: Scalar, const D: usize>(a: &[T; D], b: &[T; D]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

/// Nearest center and its squared distance; ties go to the lowest index.
#[inline]
pub fn nearest<T: Scalar, const D: usize>(p: &[T; D], centers: &[[T; D]]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Fits `k` clusters. Empty clusters are reseeded with the point farthest from
/// its own center (taken from a cluster that keeps at least one member).
pub fn lloyd<T: Scalar, const D: usize>(
    points: &[[T; D]],
    k: usize,
    max_iters: usize,
    tol: T,
    seed: u64,
) -> Result<KmeansFit<T, D>, KmeansError> {
    if k == 0 {
        return Err(KmeansError::ZeroClusters);
    }
    if k > points.len() {
        return Err(KmeansError::TooManyClusters { k, n: points.len() });
    }
    if max_iters == 0 {
        return Err(KmeansError::ZeroIterations);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut counts = vec![0usize; k];
    let mut objective_trace = Vec::new();
    let mut converged = false;

    for _ in 0..max_iters {
        let nearest_all: Vec<(usize, T)> = points.par_iter().map(|p| nearest(p, &centers)).collect();
        let mut next: Vec<usize> = nearest_all.iter().map(|&(c, _)| c).collect();
        let mut dist: Vec<T> = nearest_all.iter().map(|&(_, d)| d).collect();

        counts.iter_mut().for_each(|c| *c = 0);
        for &c in &next {
            counts[c] += 1;
        }
        let repaired = repair_empty(&mut next, &mut dist, &mut counts);

        let new_centers = means(points, &next, k);
        let shift = centers
            .iter()
            .zip(&new_centers)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(T::zero(), T::max);
        centers = new_centers;
        objective_trace.push(objective(points, &next, &centers));

        let stable = !repaired && next == assignment;
        assignment = next;
        if stable || shift < tol {
            converged = true;
            break;
        }
    }

    Ok(KmeansFit {
        centers,
        assignment,
        counts,
        objective_trace,
        converged,
    })
}

fn plus_plus_init<T: Scalar, const D: usize>(points: &[[T; D]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[T; D]> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points
        .par_iter()
        .map(|p| squared_distance(p, &points[first]).as_f64())
        .collect();

    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // every remaining point duplicates a center
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[pick] = true;
        let c = points[pick];
        centers.push(c);
        d2.par_iter_mut().zip(points.par_iter()).for_each(|(d, p)| {
            let nd = squared_distance(p, &c).as_f64();
            if nd < *d {
                *d = nd;
            }
        });
    }
    centers
}

fn repair_empty<T: Scalar>(assignment: &mut [usize], dist: &mut [T], counts: &mut [usize]) -> bool {
    let mut repaired = false;
    for c in 0..counts.len() {
        if counts[c] > 0 {
            continue;
        }
        let mut best: Option<usize> = None;
        for i in 0..assignment.len() {
            if counts[assignment[i]] > 1 && best.is_none_or(|b| dist[i] > dist[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        counts[assignment[i]] -= 1;
        counts[c] += 1;
        assignment[i] = c;
        dist[i] = T::zero();
        repaired = true;
    }
    repaired
}

/// Per-cluster arithmetic means, summed in point order.
pub fn means<T: Scalar, const D: usize>(points: &[[T; D]], assignment: &[usize], k: usize) -> Vec<[T; D]> {
    let mut sums = vec![[T::zero(); D]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, &v) in sums[c].iter_mut().zip(p) {
            *s = *s + v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            let n = T::from_count(n);
            s.iter_mut().for_each(|v| *v = *v / n);
        }
    }
    sums
}

pub fn objective<T: Scalar, const D: usize>(points: &[[T; D]], assignment: &[usize], centers: &[[T; D]]) -> T {
    points
        .iter()
        .zip(assignment)
        .fold(T::zero(), |acc, (p, &c)| acc + squared_distance(p, &centers[c]))
}
