//! Emerged and disappeared motion patterns between two epochs, found by
//! comparing per-pattern Gaussian mixture densities with sampled KL
//! divergence.

mod gmm;
pub mod linalg;

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::flowfield::FlowField;
use crate::kmeans::KmeansError;
use crate::patterns::PatternSet;
use crate::Scalar;

pub use gmm::{
    effective_components, estimate_kl, fit_density, ridge_for, Gaussian, PatternDensity, LOG_PROB_FLOOR,
    MIN_POINTS_PER_COMPONENT,
};

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("pattern {0} has no flow vectors")]
    EmptyPattern(usize),
    #[error("covariance is not positive-definite")]
    NotPositiveDefinite,
    #[error("invalid change-detection parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeParams<T = f64> {
    /// Mixture components per pattern density.
    pub mixture_components: usize,
    /// A pattern pair is similar when its KL estimate is below this.
    pub kl_threshold: T,
    pub n_samples: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for ChangeParams<T> {
    fn default() -> Self {
        Self {
            mixture_components: 5,
            kl_threshold: T::one(),
            n_samples: 10_000,
            seed: 0,
        }
    }
}

impl<T: Scalar> ChangeParams<T> {
    pub fn validate(&self) -> Result<(), DensityError> {
        if self.mixture_components == 0 {
            return Err(DensityError::InvalidParam("mixture_components must be positive".into()));
        }
        if self.n_samples == 0 {
            return Err(DensityError::InvalidParam("kl_samples must be positive".into()));
        }
        if !self.kl_threshold.is_finite() {
            return Err(DensityError::InvalidParam("kl_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Mixes a master seed with task indices into an independent stream seed.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits one density per non-noise pattern from the flow vectors it labels.
pub fn fit_pattern_densities<T: Scalar>(
    field: &FlowField<T>,
    patterns: &PatternSet<T>,
    mixture_components: usize,
    seed: u64,
) -> Result<Vec<PatternDensity<T>>, DensityError> {
    let mut members: Vec<Vec<[T; 4]>> = vec![Vec::new(); patterns.patterns.len()];
    for (f, &p) in field.flows.iter().zip(&patterns.flow_labels) {
        members[p].push(f.features());
    }
    patterns
        .non_noise()
        .map(|p| p.id)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|id| fit_density(id, &members[id], mixture_components, derive_seed(seed, id as u64, u64::MAX)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Epoch {
    First,
    Second,
}

impl Epoch {
    pub fn number(self) -> u8 {
        match self {
            Epoch::First => 1,
            Epoch::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeStatus {
    Matched,
    Emerged,
    Disappeared,
}

impl ChangeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeStatus::Matched => "matched",
            ChangeStatus::Emerged => "emerged",
            ChangeStatus::Disappeared => "disappeared",
        }
    }
}

/// Outcome for one pattern of one epoch. `nearest` is the closest pattern of
/// the other epoch with its KL estimate, present whenever that epoch is
/// non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeEntry<T = f64> {
    pub epoch: Epoch,
    pub pattern_id: usize,
    pub status: ChangeStatus,
    pub nearest: Option<(usize, T)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChangeReport<T = f64> {
    /// Epoch 1 entries first, then epoch 2, each in input order.
    pub entries: Vec<ChangeEntry<T>>,
}

impl<T: Scalar> ChangeReport<T> {
    fn ids_with(&self, status: ChangeStatus) -> Vec<usize> {
        self.entries.iter().filter(|e| e.status == status).map(|e| e.pattern_id).collect()
    }

    /// Epoch 2 patterns with no similar epoch 1 pattern.
    pub fn emerged(&self) -> Vec<usize> {
        self.ids_with(ChangeStatus::Emerged)
    }

    /// Epoch 1 patterns with no similar epoch 2 pattern.
    pub fn disappeared(&self) -> Vec<usize> {
        self.ids_with(ChangeStatus::Disappeared)
    }

    /// Matched entries of either epoch.
    pub fn matches(&self) -> impl Iterator<Item = &ChangeEntry<T>> + '_ {
        self.entries.iter().filter(|e| e.status == ChangeStatus::Matched)
    }

    /// `pattern_id,epoch,status,matched_to,kl`. `matched_to` is empty for
    /// unmatched patterns; `kl` holds the smallest estimate found.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DensityError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["pattern_id", "epoch", "status", "matched_to", "kl"])?;
        for e in &self.entries {
            let matched_to = match (e.status, e.nearest) {
                (ChangeStatus::Matched, Some((id, _))) => id.to_string(),
                _ => String::new(),
            };
            let kl = e.nearest.map(|(_, kl)| kl.to_string()).unwrap_or_default();
            w.write_record([
                e.pattern_id.to_string(),
                e.epoch.number().to_string(),
                e.status.as_str().to_string(),
                matched_to,
                kl,
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn argmin<T: Scalar>(values: impl Iterator<Item = (usize, T)>) -> Option<(usize, T)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, b)) if v >= b => best,
        _ => Some((i, v)),
    })
}

/// Matches patterns across epochs. `KL(g ‖ g′)` is estimated with samples
/// from the epoch 1 density `g`; a pattern is matched to its argmin
/// counterpart when that minimum is below the threshold.
pub fn diff<T: Scalar>(
    first: &[PatternDensity<T>],
    second: &[PatternDensity<T>],
    params: &ChangeParams<T>,
) -> Result<ChangeReport<T>, DensityError> {
    params.validate()?;
    let pairs: Vec<(usize, usize)> = (0..first.len())
        .flat_map(|i| (0..second.len()).map(move |j| (i, j)))
        .collect();
    let kl: Vec<T> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let seed = derive_seed(params.seed, i as u64, j as u64);
            estimate_kl(&first[i], &second[j], params.n_samples, seed)
        })
        .collect();
    let at = |i: usize, j: usize| kl[i * second.len() + j];

    let status = |nearest: Option<(usize, T)>, unmatched: ChangeStatus| match nearest {
        Some((_, v)) if v < params.kl_threshold => ChangeStatus::Matched,
        _ => unmatched,
    };
    let mut entries = Vec::with_capacity(first.len() + second.len());
    for (i, g) in first.iter().enumerate() {
        let nearest = argmin((0..second.len()).map(|j| (second[j].pattern_id, at(i, j))));
        entries.push(ChangeEntry {
            epoch: Epoch::First,
            pattern_id: g.pattern_id,
            status: status(nearest, ChangeStatus::Disappeared),
            nearest,
        });
    }
    for (j, g) in second.iter().enumerate() {
        let nearest = argmin((0..first.len()).map(|i| (first[i].pattern_id, at(i, j))));
        entries.push(ChangeEntry {
            epoch: Epoch::Second,
            pattern_id: g.pattern_id,
            status: status(nearest, ChangeStatus::Emerged),
            nearest,
        });
    }
    Ok(ChangeReport { entries })
}

#[cfg(test)]
mod tests {
    use super::linalg::identity;
    use super::*;

    fn unit(id: usize, x: f64) -> PatternDensity<f64> {
        PatternDensity::gaussian(id, [x, 0.0, 0.0, 0.0], identity()).unwrap()
    }

    fn params() -> ChangeParams<f64> {
        ChangeParams {
            n_samples: 2000,
            seed: 5,
            ..ChangeParams::default()
        }
    }

    #[test]
    fn identical_epochs_all_matched() {
        let epoch = vec![unit(0, 0.0), unit(1, 50.0)];
        let report = diff(&epoch, &epoch, &params()).unwrap();
        assert!(report.emerged().is_empty());
        assert!(report.disappeared().is_empty());
        assert_eq!(report.matches().count(), 4);
        let matched: Vec<_> = report.matches().map(|e| e.nearest.unwrap().0).collect();
        assert_eq!(matched, vec![0, 1, 0, 1]);
    }

    #[test]
    fn added_and_removed() {
        let a = vec![unit(0, 0.0), unit(1, 50.0)];
        let b = vec![unit(0, 0.0), unit(1, 50.0), unit(2, -40.0)];
        let report = diff(&a, &b, &params()).unwrap();
        assert_eq!(report.emerged(), vec![2]);
        assert!(report.disappeared().is_empty());
        let report = diff(&b, &a, &params()).unwrap();
        assert_eq!(report.disappeared(), vec![2]);
        assert!(report.emerged().is_empty());
    }

    #[test]
    fn empty_first_epoch() {
        let b = vec![unit(0, 0.0), unit(1, 50.0)];
        let report = diff(&[], &b, &params()).unwrap();
        assert_eq!(report.emerged(), vec![0, 1]);
        assert!(report.entries.iter().all(|e| e.nearest.is_none()));
    }

    #[test]
    fn many_to_one_matching() {
        let a = vec![unit(0, 0.0), unit(1, 0.1)];
        let b = vec![unit(7, 0.05)];
        let report = diff(&a, &b, &params()).unwrap();
        assert!(report.disappeared().is_empty());
        assert_eq!(report.matches().count(), 3);
    }

    #[test]
    fn report_csv_rows() {
        let a = vec![unit(0, 0.0)];
        let b = vec![unit(0, 0.0), unit(1, 90.0)];
        let report = diff(&a, &b, &params()).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "pattern_id,epoch,status,matched_to,kl");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,matched,0,"));
        assert!(lines[3].starts_with("1,2,emerged,,"));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = vec![unit(0, 0.0), unit(1, 3.0)];
        let b = vec![unit(0, 1.0)];
        assert_eq!(diff(&a, &b, &params()).unwrap(), diff(&a, &b, &params()).unwrap());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    }
}
