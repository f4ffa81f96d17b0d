//! Motion patterns: signatures over the reachability graph, weighted Jaccard
//! distances between them, and single-linkage grouping with a cutoff.

mod linkage;
mod signature;
mod weights;

use std::io::Write;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use thiserror::Error;

use crate::components::ComponentModel;
use crate::flowfield::FlowField;
use crate::reachability::ReachabilityGraph;
use crate::Scalar;

pub use linkage::{threshold_components, UnionFind};
pub use signature::{path_reachable_sets, signature, ReachableSets, Signature};
pub use weights::{component_weights, WeightParams};

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("component {id} out of range for {count} components")]
    InvalidNode { id: usize, count: usize },
    #[error("invalid pattern parameter: {0}")]
    InvalidParam(String),
    #[error("flow field has {flows} vectors but the component model assigns {assigned}")]
    FlowMismatch { flows: usize, assigned: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn weight_sum<T: Scalar>(set: &FixedBitSet, weights: &[T]) -> T {
    set.ones().fold(T::zero(), |acc, i| acc + weights[i])
}

/// Weighted Jaccard distance between two signatures:
/// `1 - Σ_{∩} w / Σ_{∪} w`.
pub fn wjd<T: Scalar>(a: &Signature, b: &Signature, weights: &[T]) -> T {
    wjd_with_totals(a, weight_sum(&a.members, weights), b, weight_sum(&b.members, weights), weights)
}

fn wjd_with_totals<T: Scalar>(a: &Signature, total_a: T, b: &Signature, total_b: T, weights: &[T]) -> T {
    let inter = a
        .members
        .intersection(&b.members)
        .fold(T::zero(), |acc, i| acc + weights[i]);
    let union = total_a + total_b - inter;
    if union <= T::zero() {
        return T::one();
    }
    (T::one() - inter / union).max(T::zero()).min(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams<T = f64> {
    pub weights: WeightParams<T>,
    /// Distance below which two components are linked.
    pub cutoff: T,
    /// Singleton patterns holding fewer than this fraction of all flow vectors are noise.
    pub min_pattern_support: T,
}

impl<T: Scalar> PatternParams<T> {
    pub fn validate(&self) -> Result<(), PatternError> {
        self.weights.validate()?;
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !unit(self.cutoff) {
            return Err(PatternError::InvalidParam(format!("cutoff = {} must be in [0, 1]", self.cutoff)));
        }
        if !unit(self.min_pattern_support) {
            return Err(PatternError::InvalidParam(format!(
                "min_pattern_support = {} must be in [0, 1]",
                self.min_pattern_support
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionPattern<T = f64> {
    pub id: usize,
    /// Ascending component ids.
    pub component_ids: Vec<usize>,
    pub flow_count: usize,
    /// Member-count weighted circular mean of component headings, degrees.
    pub mean_heading: Option<T>,
    pub is_noise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet<T = f64> {
    pub patterns: Vec<MotionPattern<T>>,
    /// Pattern id of each component.
    pub component_pattern: Vec<usize>,
    /// Pattern id of each flow vector, through its component.
    pub flow_labels: Vec<usize>,
}

impl<T: Scalar> PatternSet<T> {
    pub fn non_noise(&self) -> impl Iterator<Item = &MotionPattern<T>> + '_ {
        self.patterns.iter().filter(|p| !p.is_noise)
    }

    pub fn non_noise_count(&self) -> usize {
        self.non_noise().count()
    }

    /// `trajectory_id,point_index,component_id,pattern_id,is_noise`, one row per flow vector.
    pub fn write_flow_csv<W: Write>(
        &self,
        field: &FlowField<T>,
        model: &ComponentModel<T>,
        writer: W,
    ) -> Result<(), PatternError> {
        if field.len() != model.assignment.len() {
            return Err(PatternError::FlowMismatch {
                flows: field.len(),
                assigned: model.assignment.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trajectory_id", "point_index", "component_id", "pattern_id", "is_noise"])?;
        for ((f, &c), &p) in field.flows.iter().zip(&model.assignment).zip(&self.flow_labels) {
            w.write_record([
                field.trajectory_id(f).to_string(),
                f.point_index.to_string(),
                c.to_string(),
                p.to_string(),
                self.patterns[p].is_noise.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// `pattern_id,component_count,flow_count,mean_heading_deg`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<(), PatternError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["pattern_id", "component_count", "flow_count", "mean_heading_deg", "is_noise"])?;
        for p in &self.patterns {
            w.write_record([
                p.id.to_string(),
                p.component_ids.len().to_string(),
                p.flow_count.to_string(),
                p.mean_heading.map(|h| h.to_string()).unwrap_or_default(),
                p.is_noise.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Signatures of every component of the graph.
pub fn all_signatures<T: Scalar>(graph: &ReachabilityGraph<T>) -> Vec<Signature> {
    path_reachable_sets(graph).signatures()
}

/// Groups components into motion patterns.
///
/// Single linkage with a cutoff equals thresholding the distance and taking
/// connected components, which is what runs here.
pub fn cluster<T: Scalar>(
    graph: &ReachabilityGraph<T>,
    model: &ComponentModel<T>,
    params: &PatternParams<T>,
) -> Result<PatternSet<T>, PatternError> {
    params.validate()?;
    if graph.node_count != model.len() {
        return Err(PatternError::InvalidParam(format!(
            "graph has {} nodes but the model {} components",
            graph.node_count,
            model.len()
        )));
    }
    let weights = component_weights(model, &params.weights)?;
    let sigs = all_signatures(graph);
    let totals: Vec<T> = sigs.par_iter().map(|s| weight_sum(&s.members, &weights)).collect();
    let labels = threshold_components(
        model.len(),
        |i, j| wjd_with_totals(&sigs[i], totals[i], &sigs[j], totals[j], &weights),
        params.cutoff,
    );
    Ok(assemble(model, labels, params.min_pattern_support))
}

fn assemble<T: Scalar>(model: &ComponentModel<T>, labels: Vec<usize>, min_support: T) -> PatternSet<T> {
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (c, &l) in labels.iter().enumerate() {
        members[l].push(c);
    }
    let total_flows = T::from_count(model.flow_count());
    let patterns = members
        .into_iter()
        .enumerate()
        .map(|(id, component_ids)| {
            let flow_count: usize = component_ids.iter().map(|&c| model.components[c].member_count).sum();
            let is_noise = component_ids.len() == 1 && T::from_count(flow_count) < min_support * total_flows;
            MotionPattern {
                id,
                mean_heading: circular_mean(model, &component_ids),
                component_ids,
                flow_count,
                is_noise,
            }
        })
        .collect();
    let flow_labels = model.assignment.iter().map(|&c| labels[c]).collect();
    PatternSet {
        patterns,
        component_pattern: labels,
        flow_labels,
    }
}

fn circular_mean<T: Scalar>(model: &ComponentModel<T>, ids: &[usize]) -> Option<T> {
    let (mut s, mut c) = (T::zero(), T::zero());
    let mut any = false;
    for &i in ids {
        let comp = &model.components[i];
        if let Some(h) = comp.heading {
            let w = T::from_count(comp.member_count.max(1));
            let r = h.to_radians();
            s = s + w * r.sin();
            c = c + w * r.cos();
            any = true;
        }
    }
    (any && (s != T::zero() || c != T::zero())).then(|| crate::scalar::heading_degrees(c, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(owner: usize, n: usize, ids: &[usize]) -> Signature {
        let mut members = FixedBitSet::with_capacity(n);
        ids.iter().for_each(|&i| members.insert(i));
        members.insert(owner);
        Signature { owner, members }
    }

    fn chain_model(xs: &[(f64, f64)]) -> ComponentModel<f64> {
        let means: Vec<[f64; 4]> = xs.iter().map(|&(x, y)| [x, y, 1.0, 0.0]).collect();
        ComponentModel::from_means(&means, 1e-6)
    }

    fn params(cutoff: f64) -> PatternParams<f64> {
        PatternParams {
            weights: WeightParams { w0: 1.0, sigma: 20.0 },
            cutoff,
            min_pattern_support: 0.0,
        }
    }

    #[test]
    fn wjd_examples() {
        let w = vec![1.0; 6];
        let a = sig(0, 6, &[0, 1, 2]);
        assert_eq!(wjd(&a, &a.clone(), &w), 0.0);
        assert_eq!(wjd(&a, &sig(4, 6, &[3, 4, 5]), &w), 1.0);
        let abc = sig(1, 6, &[0, 1, 2]);
        let bcd = sig(2, 6, &[1, 2, 3]);
        assert_eq!(wjd(&abc, &bcd, &w), 0.5);
    }

    #[test]
    fn wjd_uses_weights() {
        let w = vec![3.0_f64, 1.0, 1.0];
        let a = sig(0, 3, &[0, 1]);
        let b = sig(1, 3, &[1, 2]);
        // ∩ = {1} -> 1, ∪ = {0,1,2} -> 5
        assert!((wjd(&a, &b, &w) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_chains_two_patterns() {
        let model = chain_model(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (0.0, 100.0), (5.0, 100.0)]);
        let g = ReachabilityGraph::from_pairs(5, &[(0, 1), (1, 2), (3, 4)]);
        for cutoff in [0.01, 0.5, 0.99] {
            let ps = cluster(&g, &model, &params(cutoff)).unwrap();
            assert_eq!(ps.patterns.len(), 2);
            assert_eq!(ps.component_pattern, vec![0, 0, 0, 1, 1]);
        }
    }

    #[test]
    fn single_chain_one_pattern() {
        let model = chain_model(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (15.0, 0.0)]);
        let g = ReachabilityGraph::from_pairs(4, &[(0, 1), (1, 2), (2, 3)]);
        let ps = cluster(&g, &model, &params(1e-9)).unwrap();
        assert_eq!(ps.patterns.len(), 1);
        assert_eq!(ps.patterns[0].mean_heading, Some(0.0));
        // cutoff 0 links nothing
        assert_eq!(cluster(&g, &model, &params(0.0)).unwrap().patterns.len(), 4);
    }

    #[test]
    fn merge_yields_three_patterns() {
        // a0 -> a1 -> s0 -> s1 <- b1 <- b0, with shared stretch s
        let model = chain_model(&[
            (0.0, 100.0),
            (50.0, 50.0),
            (0.0, -100.0),
            (50.0, -50.0),
            (100.0, 0.0),
            (150.0, 0.0),
        ]);
        let g = ReachabilityGraph::from_pairs(6, &[(0, 1), (1, 4), (2, 3), (3, 4), (4, 5)]);
        let ps = cluster(&g, &model, &params(0.25)).unwrap();
        assert_eq!(ps.patterns.len(), 3);
        assert_eq!(ps.component_pattern, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn noise_tagging_only_hits_small_singletons() {
        let mut model = chain_model(&[(0.0, 0.0), (5.0, 0.0), (500.0, 500.0)]);
        model.components[0].member_count = 50;
        model.components[1].member_count = 49;
        model.components[2].member_count = 1;
        model.assignment = std::iter::repeat_n(0, 50)
            .chain(std::iter::repeat_n(1, 49))
            .chain([2])
            .collect();
        let g = ReachabilityGraph::from_pairs(3, &[(0, 1)]);
        let p = PatternParams {
            min_pattern_support: 0.02,
            ..params(0.5)
        };
        let ps = cluster(&g, &model, &p).unwrap();
        assert_eq!(ps.patterns.len(), 2);
        assert!(!ps.patterns[0].is_noise);
        assert!(ps.patterns[1].is_noise);
        assert_eq!(ps.non_noise_count(), 1);
        assert_eq!(ps.flow_labels.len(), 100);
        assert_eq!(ps.flow_labels[99], 1);
    }

    #[test]
    fn invalid_cutoff() {
        let model = chain_model(&[(0.0, 0.0)]);
        let g = ReachabilityGraph::from_pairs(1, &[]);
        assert!(matches!(
            cluster(&g, &model, &params(1.5)),
            Err(PatternError::InvalidParam(_))
        ));
    }
}
