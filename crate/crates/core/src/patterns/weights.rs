use rayon::prelude::*;

use super::PatternError;
use crate::components::ComponentModel;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams<T = f64> {
    pub w0: T,
    /// Gaussian kernel bandwidth in normalized spatial units.
    pub sigma: T,
}

impl<T: Scalar> WeightParams<T> {
    pub fn validate(&self) -> Result<(), PatternError> {
        if !(self.w0 > T::zero() && self.w0.is_finite()) {
            return Err(PatternError::InvalidParam(format!("w0 = {} must be positive", self.w0)));
        }
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(PatternError::InvalidParam(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Density-discounting weight of each component:
/// `1 / (w0 + Σ_j exp(-|ρ_ij|² / 2σ²))`, the sum running over all components
/// including `i` itself.
pub fn component_weights<T: Scalar>(model: &ComponentModel<T>, params: &WeightParams<T>) -> Result<Vec<T>, PatternError> {
    params.validate()?;
    let two_sigma_sq = T::lit(2.0) * params.sigma * params.sigma;
    let comps = &model.components;
    Ok(comps
        .par_iter()
        .map(|ci| {
            let density = comps.iter().fold(T::zero(), |acc, cj| {
                let dx = cj.mu_x - ci.mu_x;
                let dy = cj.mu_y - ci.mu_y;
                acc + (-(dx * dx + dy * dy) / two_sigma_sq).exp()
            });
            (params.w0 + density).recip()
        })
        .collect())
}
