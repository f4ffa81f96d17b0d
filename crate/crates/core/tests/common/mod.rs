//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use motion_patterns::pipeline::Mined;
use motion_patterns::synthgen::GroundTruth;

/// Squared error of the best 2-partition, found by enumerating every
/// labelling with point 0 fixed in cluster 0. Returns `(sse, labels)`.
pub fn best_two_partition(points: &[[f64; 4]]) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize }).collect();
        if labels.iter().all(|&l| l == 0) {
            continue;
        }
        let sse: f64 = (0..2)
            .map(|c| {
                let members: Vec<&[f64; 4]> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
                let m = members.len() as f64;
                let mean: Vec<f64> = (0..4).map(|d| members.iter().map(|p| p[d]).sum::<f64>() / m).collect();
                members
                    .iter()
                    .map(|p| (0..4).map(|d| (p[d] - mean[d]).powi(2)).sum::<f64>())
                    .sum::<f64>()
            })
            .sum();
        if sse < best.0 {
            best = (sse, labels);
        }
    }
    best
}

/// Relabels a partition so labels appear in order of first occurrence.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Transitive closure by repeated boolean matrix squaring until fixpoint.
/// `closure[i][j]` is true when a path of length ≥ 1 leads from i to j.
pub fn transitive_closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    loop {
        let mut next = r.clone();
        for i in 0..n {
            for k in 0..n {
                if r[i][k] {
                    for j in 0..n {
                        if r[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Agglomerative single linkage: repeatedly merge the two closest clusters
/// while their distance is below the cutoff. Labels are canonical.
pub fn single_linkage(dist: &[Vec<f64>], cutoff: f64) -> Vec<usize> {
    let n = dist.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| dist[i][j])
                    .fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        match best {
            Some((d, a, b)) if d < cutoff => {
                let moved = clusters.remove(b);
                clusters[a].extend(moved);
            }
            _ => break,
        }
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    canonical(&labels)
}

/// Closed-form KL between two Gaussians with identity covariance.
pub fn unit_gaussian_kl(mu_p: &[f64], mu_q: &[f64]) -> f64 {
    mu_p.iter().zip(mu_q).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 2.0
}

/// Flow-vector counts per (ground-truth tag, pattern id). A flow takes the
/// tag of the point it starts from; noise patterns map to `None`.
pub fn tag_pattern_table(mined: &Mined<f64>, truth: &GroundTruth) -> BTreeMap<(String, Option<usize>), usize> {
    let mut table = BTreeMap::new();
    for (f, &p) in mined.field.flows.iter().zip(&mined.patterns.flow_labels) {
        let tag = truth
            .tag(mined.field.trajectory_id(f), f.point_index)
            .expect("every point tagged")
            .to_string();
        let pattern = (!mined.patterns.patterns[p].is_noise).then_some(p);
        *table.entry((tag, pattern)).or_insert(0) += 1;
    }
    table
}

fn permutations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest, k - 1) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// Fraction of flow vectors whose pattern agrees with their tag under the
/// best one-to-one assignment of tags to non-noise patterns.
pub fn tagging_accuracy(mined: &Mined<f64>, truth: &GroundTruth) -> f64 {
    let table = tag_pattern_table(mined, truth);
    let tags: Vec<String> = truth.tags().into_iter().map(String::from).collect();
    let patterns: Vec<usize> = mined.patterns.non_noise().map(|p| p.id).collect();
    let total: usize = table.values().sum();
    let k = tags.len().min(patterns.len());
    let mut best = 0;
    for perm in permutations(&patterns, k) {
        let agree: usize = tags
            .iter()
            .zip(&perm)
            .map(|(t, &p)| table.get(&(t.clone(), Some(p))).copied().unwrap_or(0))
            .sum();
        best = best.max(agree);
    }
    best as f64 / total as f64
}

/// Pattern holding the most flow vectors of `tag`.
pub fn majority_pattern(mined: &Mined<f64>, truth: &GroundTruth, tag: &str) -> Option<usize> {
    tag_pattern_table(mined, truth)
        .into_iter()
        .filter(|((t, p), _)| t == tag && p.is_some())
        .max_by_key(|(_, c)| *c)
        .and_then(|((_, p), _)| p)
}
