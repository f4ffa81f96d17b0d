//! Flow vectors: one `(x, y, u, v)` sample per consecutive point pair.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::Dataset;
use crate::scalar::heading_degrees;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("trajectory {id} has {len} point(s); at least 2 are needed for a flow vector")]
    TooShort { id: String, len: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector<T = f64> {
    pub x: T,
    pub y: T,
    pub u: T,
    pub v: T,
    /// Index of the source trajectory within its dataset.
    pub trajectory: usize,
    pub point_index: usize,
}

impl<T: Scalar> FlowVector<T> {
    pub fn features(&self) -> [T; 4] {
        [self.x, self.y, self.u, self.v]
    }

    pub fn magnitude(&self) -> T {
        self.u.hypot(self.v)
    }

    /// Heading in degrees, `None` for a zero-length step.
    pub fn heading(&self) -> Option<T> {
        (self.magnitude() > T::zero()).then(|| heading_degrees(self.u, self.v))
    }
}

#[derive(Debug, Clone)]
pub struct FlowField<T = f64> {
    pub flows: Vec<FlowVector<T>>,
    /// Trajectory ids of the source dataset, indexed by `FlowVector::trajectory`.
    pub trajectory_ids: Vec<String>,
}

impl<T: Scalar> FlowField<T> {
    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn trajectory_id(&self, flow: &FlowVector<T>) -> &str {
        &self.trajectory_ids[flow.trajectory]
    }

    pub fn features(&self) -> Vec<[T; 4]> {
        self.flows.iter().map(FlowVector::features).collect()
    }

    /// Debug dump: `trajectory_id,point_index,x,y,u,v`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FlowError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trajectory_id", "point_index", "x", "y", "u", "v"])?;
        for f in &self.flows {
            w.write_record([
                self.trajectory_id(f).to_string(),
                f.point_index.to_string(),
                f.x.to_string(),
                f.y.to_string(),
                f.u.to_string(),
                f.v.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Emits `(x_i, y_i, x_{i+1} - x_i, y_{i+1} - y_i)` for every consecutive point
/// pair, in trajectory order then point order. Zero-length steps are kept.
pub fn compute_flow_vectors<T: Scalar>(dataset: &Dataset<T>) -> Result<FlowField<T>, FlowError> {
    if let Some(t) = dataset.trajectories.iter().find(|t| t.len() < 2) {
        return Err(FlowError::TooShort {
            id: t.id.clone(),
            len: t.len(),
        });
    }
    let per_traj: Vec<Vec<FlowVector<T>>> = dataset
        .trajectories
        .par_iter()
        .enumerate()
        .map(|(j, t)| {
            t.points
                .windows(2)
                .enumerate()
                .map(|(i, w)| FlowVector {
                    x: w[0].x,
                    y: w[0].y,
                    u: w[1].x - w[0].x,
                    v: w[1].y - w[0].y,
                    trajectory: j,
                    point_index: i,
                })
                .collect()
        })
        .collect();
    Ok(FlowField {
        flows: per_traj.into_iter().flatten().collect(),
        trajectory_ids: dataset.trajectories.iter().map(|t| t.id.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Trajectory;
    use proptest::prelude::*;

    fn field(trajs: &[&[(f64, f64)]]) -> FlowField<f64> {
        let ds = Dataset::new(
            trajs
                .iter()
                .enumerate()
                .map(|(i, c)| Trajectory::from_xy(format!("t{i}"), c))
                .collect(),
        )
        .unwrap();
        compute_flow_vectors(&ds).unwrap()
    }

    #[test]
    fn l_shape() {
        let f = field(&[&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]]);
        let got: Vec<[f64; 4]> = f.features();
        assert_eq!(got, vec![[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 1.0]]);
        assert_eq!(f.flows[1].point_index, 1);
    }

    #[test]
    fn stationary_step_is_kept() {
        let f = field(&[&[(2.0, 2.0), (2.0, 2.0), (3.0, 2.0)]]);
        assert_eq!(f.features(), vec![[2.0, 2.0, 0.0, 0.0], [2.0, 2.0, 1.0, 0.0]]);
        assert_eq!(f.flows[0].heading(), None);
        assert_eq!(f.flows[1].heading(), Some(0.0));
    }

    #[test]
    fn short_trajectory_is_precondition_error() {
        let ds = Dataset::new(vec![Trajectory::from_xy("lonely", &[(0.0, 0.0)])]).unwrap();
        assert!(matches!(
            compute_flow_vectors(&ds),
            Err(FlowError::TooShort { len: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn count_and_reconstruction(
            trajs in proptest::collection::vec(
                proptest::collection::vec((-100f64..100.0, -100f64..100.0), 2..30), 1..8)
        ) {
            let refs: Vec<&[(f64, f64)]> = trajs.iter().map(|t| t.as_slice()).collect();
            let f = field(&refs);
            prop_assert_eq!(f.len(), trajs.iter().map(|t| t.len() - 1).sum::<usize>());
            let mut k = 0;
            for t in &trajs {
                let (mut x, mut y) = t[0];
                for p in &t[1..] {
                    let fv = &f.flows[k];
                    x += fv.u;
                    y += fv.v;
                    prop_assert!((x - p.0).abs() <= 1e-12 && (y - p.1).abs() <= 1e-12);
                    k += 1;
                }
            }
        }
    }
}
