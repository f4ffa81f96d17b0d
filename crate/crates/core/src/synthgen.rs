//! Seeded synthetic trajectory scenarios with per-point ground-truth tags.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{Dataset, IngestError, Trajectory, TrajectoryPoint};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    StraightLane,
    Arc,
    SCurve,
    Merge,
    Diverge,
    OppositeOverlap,
    ParallelLanes,
    DenseSparse,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::StraightLane,
        ScenarioKind::Arc,
        ScenarioKind::SCurve,
        ScenarioKind::Merge,
        ScenarioKind::Diverge,
        ScenarioKind::OppositeOverlap,
        ScenarioKind::ParallelLanes,
        ScenarioKind::DenseSparse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::StraightLane => "straight_lane",
            ScenarioKind::Arc => "arc",
            ScenarioKind::SCurve => "s_curve",
            ScenarioKind::Merge => "merge",
            ScenarioKind::Diverge => "diverge",
            ScenarioKind::OppositeOverlap => "opposite_overlap",
            ScenarioKind::ParallelLanes => "parallel_lanes",
            ScenarioKind::DenseSparse => "dense_sparse",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SynthError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec<T = f64> {
    pub kind: ScenarioKind,
    pub trajectories_per_branch: usize,
    /// Distance between consecutive samples along the ideal path.
    pub step_length: T,
    /// Standard deviation of the isotropic point noise.
    pub noise_sigma: T,
    pub seed: u64,
}

impl<T: Scalar> ScenarioSpec<T> {
    /// 20 trajectories per branch, step 10, noise 0.5.
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            kind,
            trajectories_per_branch: 20,
            step_length: T::lit(10.0),
            noise_sigma: T::lit(0.5),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.trajectories_per_branch == 0 {
            return Err(SynthError::InvalidSpec("trajectories_per_branch must be positive".into()));
        }
        if !(self.step_length.is_finite() && self.step_length > T::zero()) {
            return Err(SynthError::InvalidSpec("step_length must be positive".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= T::zero()) {
            return Err(SynthError::InvalidSpec("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// A straight segment or circular arc of an ideal path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece<T = f64> {
    Line { from: [T; 2], to: [T; 2] },
    /// Angles in degrees; positive sweep is counter-clockwise.
    Arc { center: [T; 2], radius: T, start_deg: T, sweep_deg: T },
}

impl<T: Scalar> Piece<T> {
    pub fn length(&self) -> T {
        match *self {
            Piece::Line { from, to } => (to[0] - from[0]).hypot(to[1] - from[1]),
            Piece::Arc { radius, sweep_deg, .. } => radius * sweep_deg.abs().to_radians(),
        }
    }

    /// Point at arc length `s` from the start of the piece.
    pub fn point_at(&self, s: T) -> [T; 2] {
        let len = self.length();
        let t = if len > T::zero() { s / len } else { T::zero() };
        match *self {
            Piece::Line { from, to } => [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])],
            Piece::Arc {
                center,
                radius,
                start_deg,
                sweep_deg,
            } => {
                let a = (start_deg + t * sweep_deg).to_radians();
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }
}

/// Consecutive tagged pieces forming one ideal route.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPath<T = f64> {
    pub pieces: Vec<(Piece<T>, String)>,
}

impl<T: Scalar> TaggedPath<T> {
    pub fn new() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn then(mut self, piece: Piece<T>, tag: &str) -> Self {
        self.pieces.push((piece, tag.to_string()));
        self
    }

    pub fn line(from: [f64; 2], to: [f64; 2], tag: &str) -> Self {
        Self::new().then_line(from, to, tag)
    }

    pub fn then_line(self, from: [f64; 2], to: [f64; 2], tag: &str) -> Self {
        self.then(
            Piece::Line {
                from: from.map(T::lit),
                to: to.map(T::lit),
            },
            tag,
        )
    }

    pub fn then_arc(self, center: [f64; 2], radius: f64, start_deg: f64, sweep_deg: f64, tag: &str) -> Self {
        self.then(
            Piece::Arc {
                center: center.map(T::lit),
                radius: T::lit(radius),
                start_deg: T::lit(start_deg),
                sweep_deg: T::lit(sweep_deg),
            },
            tag,
        )
    }

    pub fn length(&self) -> T {
        self.pieces.iter().map(|(p, _)| p.length()).sum()
    }

    /// Point and tag at arc length `s` along the path.
    pub fn sample(&self, mut s: T) -> ([T; 2], &str) {
        for (i, (piece, tag)) in self.pieces.iter().enumerate() {
            let len = piece.length();
            if s <= len || i + 1 == self.pieces.len() {
                return (piece.point_at(s.min(len)), tag);
            }
            s = s - len;
        }
        panic!("sample on empty path");
    }
}

impl<T: Scalar> Default for TaggedPath<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedPoint {
    pub trajectory_id: String,
    pub point_index: usize,
    pub tag: String,
}

/// Expected pattern tag of every generated point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub points: Vec<TaggedPoint>,
    index: HashMap<(String, usize), usize>,
}

impl GroundTruth {
    fn push(&mut self, trajectory_id: &str, point_index: usize, tag: &str) {
        self.index.insert((trajectory_id.to_string(), point_index), self.points.len());
        self.points.push(TaggedPoint {
            trajectory_id: trajectory_id.to_string(),
            point_index,
            tag: tag.to_string(),
        });
    }

    pub fn tag(&self, trajectory_id: &str, point_index: usize) -> Option<&str> {
        self.index
            .get(&(trajectory_id.to_string(), point_index))
            .map(|&i| self.points[i].tag.as_str())
    }

    /// Distinct tags in sorted order.
    pub fn tags(&self) -> BTreeSet<&str> {
        self.points.iter().map(|p| p.tag.as_str()).collect()
    }

    /// `trajectory_id,point_index,tag`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trajectory_id", "point_index", "tag"])?;
        for p in &self.points {
            w.write_record([p.trajectory_id.as_str(), &p.point_index.to_string(), p.tag.as_str()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Samples `count` noisy trajectories along each path. Every trajectory
/// starts at a uniformly random phase within the first step. Ids are
/// `{prefix}{running index:04}`.
pub fn generate_paths<T: Scalar>(
    routes: &[(TaggedPath<T>, usize)],
    step: T,
    noise_sigma: T,
    seed: u64,
    prefix: &str,
) -> Result<(Dataset<T>, GroundTruth), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::new();
    let mut truth = GroundTruth::default();
    for (path, count) in routes {
        let total = path.length();
        for _ in 0..*count {
            let id = format!("{prefix}{:04}", trajectories.len());
            let mut s = step * T::lit(rng.random::<f64>());
            let mut points = Vec::new();
            while s <= total {
                let ([x, y], tag) = path.sample(s);
                let nx = noise_sigma * T::standard_normal(&mut rng);
                let ny = noise_sigma * T::standard_normal(&mut rng);
                truth.push(&id, points.len(), tag);
                points.push(TrajectoryPoint::new(points.len(), x + nx, y + ny));
                s = s + step;
            }
            if points.len() < 2 {
                return Err(SynthError::InvalidSpec(format!(
                    "path of length {total} yields fewer than two points at step {step}"
                )));
            }
            trajectories.push(Trajectory { id, points });
        }
    }
    Ok((Dataset::new(trajectories)?, truth))
}

/// Ideal routes of a scenario with their trajectory counts, in the
/// `[0, 1000]` square.
pub fn scenario_routes<T: Scalar>(kind: ScenarioKind, n: usize) -> Vec<(TaggedPath<T>, usize)> {
    match kind {
        ScenarioKind::StraightLane => vec![(TaggedPath::line([100.0, 500.0], [900.0, 500.0], "lane"), n)],
        ScenarioKind::Arc => vec![(TaggedPath::new().then_arc([500.0, 300.0], 300.0, 180.0, -180.0, "arc"), n)],
        ScenarioKind::SCurve => vec![(
            TaggedPath::new()
                .then_arc([300.0, 500.0], 200.0, 180.0, -180.0, "s_curve")
                .then_arc([700.0, 500.0], 200.0, 180.0, 180.0, "s_curve"),
            n,
        )],
        ScenarioKind::Merge => {
            let junction = [550.0, 500.0];
            vec![
                (
                    TaggedPath::line([100.0, 700.0], junction, "branch_a").then_line(junction, [950.0, 500.0], "shared"),
                    n,
                ),
                (
                    TaggedPath::line([100.0, 300.0], junction, "branch_b").then_line(junction, [950.0, 500.0], "shared"),
                    n,
                ),
            ]
        }
        ScenarioKind::Diverge => {
            let fork = [450.0, 500.0];
            vec![
                (
                    TaggedPath::line([50.0, 500.0], fork, "shared").then_line(fork, [900.0, 700.0], "branch_a"),
                    n,
                ),
                (
                    TaggedPath::line([50.0, 500.0], fork, "shared").then_line(fork, [900.0, 300.0], "branch_b"),
                    n,
                ),
            ]
        }
        ScenarioKind::OppositeOverlap => vec![
            (TaggedPath::line([100.0, 500.0], [900.0, 500.0], "eastbound"), n),
            (TaggedPath::line([900.0, 500.0], [100.0, 500.0], "westbound"), n),
        ],
        ScenarioKind::ParallelLanes => [480.0, 500.0, 520.0]
            .iter()
            .enumerate()
            .map(|(i, &y)| (TaggedPath::line([100.0, y], [900.0, y], &format!("lane_{i}")), n))
            .collect(),
        ScenarioKind::DenseSparse => vec![
            (TaggedPath::line([100.0, 650.0], [900.0, 650.0], "dense"), 10 * n),
            (TaggedPath::line([100.0, 350.0], [900.0, 350.0], "sparse"), n),
        ],
    }
}

/// Generates a scenario dataset and its ground truth.
pub fn generate<T: Scalar>(spec: &ScenarioSpec<T>) -> Result<(Dataset<T>, GroundTruth), SynthError> {
    spec.validate()?;
    let routes = scenario_routes(spec.kind, spec.trajectories_per_branch);
    generate_paths(&routes, spec.step_length, spec.noise_sigma, spec.seed, "t")
}
