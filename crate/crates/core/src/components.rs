//! Motion components: Kmeans clusters of flow vectors under a velocity-weighted
//! metric.

use std::io::Write;

use thiserror::Error;

use crate::flowfield::FlowField;
use crate::kmeans::{self, KmeansError};
use crate::scalar::heading_degrees;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ComponentError {
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
    #[error("beta must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams<T = f64> {
    pub k: usize,
    /// Weight of velocity differences relative to spatial ones.
    pub beta: T,
    pub max_iters: usize,
    /// Stop once no center moves farther than this (scaled space).
    pub tol: T,
    pub seed: u64,
}

/// Squared-weighted distance between two `(x, y, u, v)` samples:
/// `sqrt(dx² + dy² + beta·du² + beta·dv²)`.
pub fn flow_distance<T: Scalar>(p: &[T; 4], q: &[T; 4], beta: T) -> T {
    let d = |i: usize| p[i] - q[i];
    (d(0) * d(0) + d(1) * d(1) + beta * (d(2) * d(2) + d(3) * d(3))).sqrt()
}

/// Maps a flow sample into the space where [`flow_distance`] is Euclidean.
pub fn scale_velocity<T: Scalar>(p: &[T; 4], beta: T) -> [T; 4] {
    let s = beta.sqrt();
    [p[0], p[1], p[2] * s, p[3] * s]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionComponent<T = f64> {
    pub id: usize,
    pub mu_x: T,
    pub mu_y: T,
    pub mu_u: T,
    pub mu_v: T,
    pub member_count: usize,
    /// Degrees in `(-180, 180]`; `None` when the mean speed is at or below `eps_speed`.
    pub heading: Option<T>,
}

impl<T: Scalar> MotionComponent<T> {
    pub fn new(id: usize, mean: [T; 4], member_count: usize, eps_speed: T) -> Self {
        let [mu_x, mu_y, mu_u, mu_v] = mean;
        let speed = mu_u.hypot(mu_v);
        Self {
            id,
            mu_x,
            mu_y,
            mu_u,
            mu_v,
            member_count,
            heading: (speed > eps_speed).then(|| heading_degrees(mu_u, mu_v)),
        }
    }

    pub fn mean(&self) -> [T; 4] {
        [self.mu_x, self.mu_y, self.mu_u, self.mu_v]
    }

    pub fn position(&self) -> [T; 2] {
        [self.mu_x, self.mu_y]
    }

    pub fn speed(&self) -> T {
        self.mu_u.hypot(self.mu_v)
    }
}

/// Vector from `m`'s mean position to `n`'s.
pub fn displacement<T: Scalar>(m: &MotionComponent<T>, n: &MotionComponent<T>) -> [T; 2] {
    [n.mu_x - m.mu_x, n.mu_y - m.mu_y]
}

#[derive(Debug, Clone)]
pub struct ComponentModel<T = f64> {
    pub components: Vec<MotionComponent<T>>,
    /// Component id of every flow vector, in flow order.
    pub assignment: Vec<usize>,
    pub params: KmeansParams<T>,
    pub eps_speed: T,
    pub objective_trace: Vec<T>,
    pub converged: bool,
}

impl<T: Scalar> ComponentModel<T> {
    /// A model built from known means, with no flow vectors behind it.
    pub fn from_means(means: &[[T; 4]], eps_speed: T) -> Self {
        Self {
            components: means
                .iter()
                .enumerate()
                .map(|(i, m)| MotionComponent::new(i, *m, 1, eps_speed))
                .collect(),
            assignment: Vec::new(),
            params: KmeansParams {
                k: means.len(),
                beta: T::one(),
                max_iters: 1,
                tol: T::zero(),
                seed: 0,
            },
            eps_speed,
            objective_trace: Vec::new(),
            converged: true,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn flow_count(&self) -> usize {
        self.assignment.len()
    }

    /// Dump: `id,mu_x,mu_y,mu_u,mu_v,member_count`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ComponentError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "mu_x", "mu_y", "mu_u", "mu_v", "member_count"])?;
        for c in &self.components {
            w.write_record([
                c.id.to_string(),
                c.mu_x.to_string(),
                c.mu_y.to_string(),
                c.mu_u.to_string(),
                c.mu_v.to_string(),
                c.member_count.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Clusters the flow field into `params.k` motion components.
///
/// Runs Lloyd iterations on `(x, y, sqrt(beta)·u, sqrt(beta)·v)`, which is the
/// same as minimizing squared [`flow_distance`]. Reported means are computed
/// from the unscaled flow vectors.
pub fn fit_components<T: Scalar>(
    field: &FlowField<T>,
    params: &KmeansParams<T>,
    eps_speed: T,
) -> Result<ComponentModel<T>, ComponentError> {
    if !(params.beta >= T::zero()) || !params.beta.is_finite() {
        return Err(ComponentError::InvalidBeta(params.beta.as_f64()));
    }
    let raw = field.features();
    let scaled: Vec<[T; 4]> = raw.iter().map(|p| scale_velocity(p, params.beta)).collect();
    let fit = kmeans::lloyd(&scaled, params.k, params.max_iters, params.tol, params.seed)?;
    let means = kmeans::means(&raw, &fit.assignment, params.k);

    Ok(ComponentModel {
        components: means
            .iter()
            .zip(&fit.counts)
            .enumerate()
            .map(|(id, (m, &count))| MotionComponent::new(id, *m, count, eps_speed))
            .collect(),
        assignment: fit.assignment,
        params: *params,
        eps_speed,
        objective_trace: fit.objective_trace,
        converged: fit.converged,
    })
}
