use super::{Dataset, IngestError};
use crate::Scalar;

/// Side length of the square every axis is mapped onto.
pub const NORMALIZED_EXTENT: f64 = 1000.0;

/// Per-axis affine map `x' = (x - x_offset) * x_scale`.
///
/// A scale of zero marks a degenerate axis (all input values equal); such an
/// axis maps every value to the middle of the extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationRecord<T = f64> {
    pub x_offset: T,
    pub x_scale: T,
    pub y_offset: T,
    pub y_scale: T,
}

#[derive(Debug, Clone, Copy)]
struct Axis<T> {
    offset: T,
    scale: T,
}

impl<T: Scalar> Axis<T> {
    fn fit(min: T, max: T) -> Self {
        let span = max - min;
        let scale = if span > T::zero() {
            T::lit(NORMALIZED_EXTENT) / span
        } else {
            T::zero()
        };
        Self { offset: min, scale }
    }

    fn apply(&self, v: T) -> T {
        if self.scale == T::zero() {
            T::lit(NORMALIZED_EXTENT / 2.0)
        } else {
            (v - self.offset) * self.scale
        }
    }

    fn invert(&self, v: T) -> T {
        if self.scale == T::zero() {
            self.offset
        } else {
            v / self.scale + self.offset
        }
    }

    /// `self` followed by `next`.
    fn then(self, next: Axis<T>) -> Axis<T> {
        if self.scale == T::zero() {
            return self;
        }
        Axis {
            offset: self.offset + next.offset / self.scale,
            scale: self.scale * next.scale,
        }
    }
}

impl<T: Scalar> NormalizationRecord<T> {
    fn axes(&self) -> (Axis<T>, Axis<T>) {
        (
            Axis {
                offset: self.x_offset,
                scale: self.x_scale,
            },
            Axis {
                offset: self.y_offset,
                scale: self.y_scale,
            },
        )
    }

    fn from_axes(x: Axis<T>, y: Axis<T>) -> Self {
        Self {
            x_offset: x.offset,
            x_scale: x.scale,
            y_offset: y.offset,
            y_scale: y.scale,
        }
    }

    /// Bounding-box map for the given datasets; `None` when they hold no points.
    pub fn fit<'a>(datasets: impl IntoIterator<Item = &'a Dataset<T>>) -> Option<Self> {
        let mut bounds: Option<(T, T, T, T)> = None;
        for p in datasets.into_iter().flat_map(|d| d.points()) {
            bounds = Some(match bounds {
                None => (p.x, p.x, p.y, p.y),
                Some((x0, x1, y0, y1)) => (x0.min(p.x), x1.max(p.x), y0.min(p.y), y1.max(p.y)),
            });
        }
        let (x0, x1, y0, y1) = bounds?;
        Some(Self::from_axes(Axis::fit(x0, x1), Axis::fit(y0, y1)))
    }

    pub fn apply(&self, x: T, y: T) -> (T, T) {
        let (ax, ay) = self.axes();
        (ax.apply(x), ay.apply(y))
    }

    /// Maps normalized coordinates back to the source frame.
    pub fn invert(&self, x: T, y: T) -> (T, T) {
        let (ax, ay) = self.axes();
        (ax.invert(x), ay.invert(y))
    }

    /// Composite of `self` followed by `next`, still invertible to the source frame.
    pub fn then(&self, next: &Self) -> Self {
        let (ax, ay) = self.axes();
        let (bx, by) = next.axes();
        Self::from_axes(ax.then(bx), ay.then(by))
    }

    pub fn is_degenerate(&self) -> bool {
        self.x_scale == T::zero() || self.y_scale == T::zero()
    }

    fn apply_to(&self, dataset: &Dataset<T>) -> Dataset<T> {
        let mut out = dataset.clone();
        for p in out.trajectories.iter_mut().flat_map(|t| t.points.iter_mut()) {
            (p.x, p.y) = self.apply(p.x, p.y);
        }
        out.normalization = Some(match &dataset.normalization {
            Some(prev) => prev.then(self),
            None => *self,
        });
        out
    }
}

/// Maps each axis independently so its range becomes `[0, 1000]`.
pub fn normalize<T: Scalar>(dataset: &Dataset<T>) -> Result<Dataset<T>, IngestError> {
    let rec = NormalizationRecord::fit([dataset]).ok_or(IngestError::Empty)?;
    Ok(rec.apply_to(dataset))
}

/// Normalizes several datasets with one shared bounding box, so they stay
/// comparable after the transform.
pub fn normalize_jointly<T: Scalar>(datasets: &[&Dataset<T>]) -> Result<Vec<Dataset<T>>, IngestError> {
    let rec = NormalizationRecord::fit(datasets.iter().copied()).ok_or(IngestError::Empty)?;
    Ok(datasets.iter().map(|d| rec.apply_to(d)).collect())
}
