//! Trajectory datasets: loading, normalization, month splitting and pruning.

mod csv_io;
mod hurdat2;
mod normalize;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use thiserror::Error;

use crate::Scalar;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use hurdat2::{load_hurdat2, parse_coordinate, read_hurdat2};
pub use normalize::{normalize, normalize_jointly, NormalizationRecord, NORMALIZED_EXTENT};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("missing or invalid header: {0}")]
    Header(String),
    #[error("line {line}: storm {storm} declares {declared} records but {found} follow")]
    RecordCount {
        line: u64,
        storm: String,
        declared: usize,
        found: usize,
    },
    #[error("duplicate trajectory id {0}")]
    DuplicateId(String),
    #[error("trajectory {0} has a point without a month tag")]
    MissingMonth(String),
    #[error("dataset contains no points")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One observation of a moving object. Only the order of `seq_index` matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T = f64> {
    pub seq_index: usize,
    pub x: T,
    pub y: T,
    /// Calendar month (1..=12), only filled by loaders that know it.
    pub month: Option<u8>,
}

impl<T: Scalar> TrajectoryPoint<T> {
    pub fn new(seq_index: usize, x: T, y: T) -> Self {
        Self {
            seq_index,
            x,
            y,
            month: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T = f64> {
    pub id: String,
    pub points: Vec<TrajectoryPoint<T>>,
}

impl<T: Scalar> Trajectory<T> {
    /// Builds a trajectory from ordered coordinates, indexing from 0.
    pub fn from_xy(id: impl Into<String>, coords: &[(T, T)]) -> Self {
        Self {
            id: id.into(),
            points: coords
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| TrajectoryPoint::new(i, x, y))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when every point sits on the same coordinate pair.
    pub fn is_stationary(&self) -> bool {
        match self.points.first() {
            None => true,
            Some(first) => self
                .points
                .iter()
                .all(|p| p.x == first.x && p.y == first.y),
        }
    }

    fn reindex(&mut self) {
        for (i, p) in self.points.iter_mut().enumerate() {
            p.seq_index = i;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    pub trajectories: Vec<Trajectory<T>>,
    pub normalization: Option<NormalizationRecord<T>>,
}

impl<T: Scalar> Default for Dataset<T> {
    fn default() -> Self {
        Self {
            trajectories: Vec::new(),
            normalization: None,
        }
    }
}

impl<T: Scalar> Dataset<T> {
    /// Wraps trajectories, rejecting duplicate ids.
    pub fn new(trajectories: Vec<Trajectory<T>>) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for t in &trajectories {
            if !seen.insert(t.id.as_str()) {
                return Err(IngestError::DuplicateId(t.id.clone()));
            }
        }
        Ok(Self {
            trajectories,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = &TrajectoryPoint<T>> + '_ {
        self.trajectories.iter().flat_map(|t| t.points.iter())
    }

    pub fn mean_points_per_trajectory(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.point_count() as f64 / self.len() as f64
        }
    }

    /// Appends the trajectories of `other`, rejecting id collisions.
    pub fn extend(&mut self, other: Dataset<T>) -> Result<(), IngestError> {
        let mut all = std::mem::take(&mut self.trajectories);
        all.extend(other.trajectories);
        self.trajectories = Dataset::new(all)?.trajectories;
        Ok(())
    }
}

/// Drops trajectories that cannot produce a meaningful flow vector: fewer than
/// two points, or one coordinate pair repeated.
pub fn prune_degenerate<T: Scalar>(dataset: &Dataset<T>) -> Dataset<T> {
    Dataset {
        trajectories: dataset
            .trajectories
            .iter()
            .filter(|t| t.len() >= 2 && !t.is_stationary())
            .cloned()
            .collect(),
        normalization: dataset.normalization,
    }
}

/// Partitions a month-tagged dataset by calendar month. Trajectories crossing a
/// month boundary are cut there; each piece is re-indexed from 0.
pub fn split_by_month<T: Scalar>(
    dataset: &Dataset<T>,
) -> Result<BTreeMap<u8, Dataset<T>>, IngestError> {
    let mut out: BTreeMap<u8, Dataset<T>> = BTreeMap::new();
    for traj in &dataset.trajectories {
        let mut runs: Vec<(u8, Vec<TrajectoryPoint<T>>)> = Vec::new();
        for p in &traj.points {
            let month = p
                .month
                .ok_or_else(|| IngestError::MissingMonth(traj.id.clone()))?;
            match runs.last_mut() {
                Some((m, pts)) if *m == month => pts.push(*p),
                _ => runs.push((month, vec![*p])),
            }
        }
        let single = runs.len() == 1;
        let mut seen: BTreeMap<u8, usize> = BTreeMap::new();
        for (month, points) in runs {
            let k = seen.entry(month).or_insert(0);
            let id = if single {
                traj.id.clone()
            } else if *k == 0 {
                format!("{}_{:02}", traj.id, month)
            } else {
                format!("{}_{:02}_{}", traj.id, month, k)
            };
            *k += 1;
            let mut piece = Trajectory { id, points };
            piece.reindex();
            let bucket = out.entry(month).or_insert_with(|| Dataset {
                trajectories: Vec::new(),
                normalization: dataset.normalization,
            });
            bucket.trajectories.push(piece);
        }
    }
    Ok(out)
}
