//! Gaussian mixtures over `(x, y, u, v)` fitted by expectation-maximization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{cholesky, forward_solve, log_det_from_cholesky, lower_mul, trace, Mat4, Vec4};
use super::DensityError;
use crate::kmeans;
use crate::Scalar;

const MAX_EM_ITERS: usize = 200;
const EM_REL_TOL: f64 = 1e-10;
const KMEANS_INIT_ITERS: usize = 100;
/// Minimum flow vectors per requested mixture component.
pub const MIN_POINTS_PER_COMPONENT: usize = 5;
const RIDGE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T = f64> {
    pub weight: T,
    pub mean: Vec4<T>,
    pub cov: Mat4<T>,
    chol: Mat4<T>,
    log_norm: T,
}

impl<T: Scalar> Gaussian<T> {
    pub fn new(weight: T, mean: Vec4<T>, cov: Mat4<T>) -> Result<Self, DensityError> {
        let chol = cholesky(&cov).ok_or(DensityError::NotPositiveDefinite)?;
        let log_norm = -(T::lit(4.0) * (T::lit(2.0) * T::PI()).ln() + log_det_from_cholesky(&chol)) / T::lit(2.0);
        Ok(Self {
            weight,
            mean,
            cov,
            chol,
            log_norm,
        })
    }

    pub fn log_pdf(&self, x: &Vec4<T>) -> T {
        let d: Vec4<T> = std::array::from_fn(|i| x[i] - self.mean[i]);
        let y = forward_solve(&self.chol, &d);
        let maha = y.iter().fold(T::zero(), |acc, &v| acc + v * v);
        self.log_norm - maha / T::lit(2.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec4<T> {
        let z: Vec4<T> = std::array::from_fn(|_| T::standard_normal(rng));
        let lz = lower_mul(&self.chol, &z);
        std::array::from_fn(|i| self.mean[i] + lz[i])
    }
}

/// Density model of one motion pattern's flow vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDensity<T = f64> {
    pub pattern_id: usize,
    pub components: Vec<Gaussian<T>>,
    /// Data log-likelihood before each M-step and after the last one.
    pub log_likelihood_trace: Vec<T>,
}

fn log_sum_exp<T: Scalar>(values: impl Iterator<Item = T> + Clone) -> T {
    let max = values.clone().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    max + values.fold(T::zero(), |acc, v| acc + (v - max).exp()).ln()
}

impl<T: Scalar> PatternDensity<T> {
    /// Single Gaussian density.
    pub fn gaussian(pattern_id: usize, mean: Vec4<T>, cov: Mat4<T>) -> Result<Self, DensityError> {
        Ok(Self {
            pattern_id,
            components: vec![Gaussian::new(T::one(), mean, cov)?],
            log_likelihood_trace: Vec::new(),
        })
    }

    pub fn log_pdf(&self, x: &Vec4<T>) -> T {
        log_sum_exp(self.components.iter().map(|g| g.weight.ln() + g.log_pdf(x)))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec4<T> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        let idx = self
            .components
            .iter()
            .position(|g| {
                acc += g.weight.as_f64();
                u < acc
            })
            .unwrap_or(last);
        self.components[idx].sample(rng)
    }

    pub fn log_likelihood(&self, data: &[Vec4<T>]) -> T {
        data.iter().fold(T::zero(), |acc, x| acc + self.log_pdf(x))
    }
}

/// Number of mixture components actually fitted for `n` points.
pub fn effective_components(requested: usize, n: usize) -> usize {
    requested.min(n / MIN_POINTS_PER_COMPONENT).max(1)
}

fn mean_and_scatter<T: Scalar>(data: &[Vec4<T>], resp: impl Fn(usize) -> T) -> (T, Vec4<T>, Mat4<T>) {
    let mut total = T::zero();
    let mut mean = [T::zero(); 4];
    for (i, x) in data.iter().enumerate() {
        let r = resp(i);
        total = total + r;
        for d in 0..4 {
            mean[d] = mean[d] + r * x[d];
        }
    }
    if total > T::zero() {
        mean.iter_mut().for_each(|m| *m = *m / total);
    }
    let mut cov = [[T::zero(); 4]; 4];
    for (i, x) in data.iter().enumerate() {
        let r = resp(i);
        for a in 0..4 {
            for b in 0..=a {
                cov[a][b] = cov[a][b] + r * (x[a] - mean[a]) * (x[b] - mean[b]);
            }
        }
    }
    for a in 0..4 {
        for b in 0..=a {
            let v = if total > T::zero() { cov[a][b] / total } else { T::zero() };
            cov[a][b] = v;
            cov[b][a] = v;
        }
    }
    (total, mean, cov)
}

fn regularized<T: Scalar>(weight: T, mean: Vec4<T>, mut cov: Mat4<T>, ridge: T) -> Result<Gaussian<T>, DensityError> {
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] = row[i] + ridge;
    }
    Gaussian::new(weight, mean, cov)
}

/// Covariance ridge used for `data`: `1e-6 · trace(cov) / 4`, floored for
/// constant data.
pub fn ridge_for<T: Scalar>(data: &[Vec4<T>]) -> T {
    let (_, _, cov) = mean_and_scatter(data, |_| T::one());
    let r = T::lit(RIDGE_FRACTION) * trace(&cov) / T::lit(4.0);
    if r > T::zero() {
        r
    } else {
        T::lit(1e-9)
    }
}

/// Fits a `g`-component mixture, reduced so each component has at least
/// five points on average. Kmeans initializes the responsibilities.
pub fn fit_density<T: Scalar>(pattern_id: usize, data: &[Vec4<T>], g: usize, seed: u64) -> Result<PatternDensity<T>, DensityError> {
    if data.is_empty() {
        return Err(DensityError::EmptyPattern(pattern_id));
    }
    let g = effective_components(g.max(1), data.len());
    let ridge = ridge_for(data);
    let n = T::from_count(data.len());

    let init = kmeans::lloyd(data, g, KMEANS_INIT_ITERS, T::zero(), seed)?;
    let mut comps = (0..g)
        .map(|k| {
            let (count, mean, cov) = mean_and_scatter(data, |i| if init.assignment[i] == k { T::one() } else { T::zero() });
            regularized(count / n, mean, cov, ridge)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut trace_ll = Vec::new();
    let mut log_resp = vec![T::zero(); data.len() * g];
    for _ in 0..MAX_EM_ITERS {
        // E-step
        let mut ll = T::zero();
        for (i, x) in data.iter().enumerate() {
            let row = &mut log_resp[i * g..(i + 1) * g];
            for (k, c) in comps.iter().enumerate() {
                row[k] = c.weight.ln() + c.log_pdf(x);
            }
            let lse = log_sum_exp(row.iter().copied());
            row.iter_mut().for_each(|v| *v = *v - lse);
            ll = ll + lse;
        }
        if let Some(&prev) = trace_ll.last() {
            if ll - prev <= T::lit(EM_REL_TOL) * prev.abs() {
                trace_ll.push(ll);
                break;
            }
        }
        trace_ll.push(ll);

        // M-step
        comps = (0..g)
            .map(|k| {
                let (mass, mean, cov) = mean_and_scatter(data, |i| log_resp[i * g + k].exp());
                if mass > T::zero() {
                    regularized(mass / n, mean, cov, ridge)
                } else {
                    Ok(Gaussian { weight: T::zero(), ..comps[k].clone() })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
    }

    Ok(PatternDensity {
        pattern_id,
        components: comps,
        log_likelihood_trace: trace_ll,
    })
}

/// Per-sample log-probability floor used by [`estimate_kl`].
pub const LOG_PROB_FLOOR: f64 = -700.0;

/// Monte Carlo estimate of `KL(p ‖ q)` from `n_samples` draws of `p`.
pub fn estimate_kl<T: Scalar>(p: &PatternDensity<T>, q: &PatternDensity<T>, n_samples: usize, seed: u64) -> T {
    let n_samples = n_samples.max(1);
    let floor = T::lit(LOG_PROB_FLOOR);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = T::zero();
    for _ in 0..n_samples {
        let x = p.sample(&mut rng);
        acc = acc + p.log_pdf(&x).max(floor) - q.log_pdf(&x).max(floor);
    }
    acc / T::from_count(n_samples)
}
