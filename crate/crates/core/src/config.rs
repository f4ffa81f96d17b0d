//! Run configuration: the sixteen model parameters plus operational
//! settings, read from plain `key = value` files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::change_detect::ChangeParams;
use crate::components::KmeansParams;
use crate::patterns::{PatternParams, WeightParams};
use crate::reachability::{AngleParams, EllipseParams, ReachabilityParams, UnblockParams, WedgeParams};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value {value:?} for {key}")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("missing parameters: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

/// Names of the model parameters every config file must set.
pub const MODEL_KEYS: [&str; 16] = [
    "K",
    "beta",
    "a1",
    "b1",
    "a2",
    "b2",
    "alpha",
    "th_theta_psi",
    "th_theta",
    "search_distance",
    "th_w_theta",
    "th_w_psi",
    "th_w_rho",
    "w0",
    "sigma",
    "cutoff",
];

/// Optional operational keys.
pub const OPERATIONAL_KEYS: [&str; 13] = [
    "seed",
    "max_iters",
    "tol",
    "eps_speed",
    "min_pattern_support",
    "normalize",
    "mixture_components",
    "kl_threshold",
    "kl_samples",
    "workers",
    "input",
    "input_format",
    "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Csv,
    Hurdat2,
}

impl FromStr for InputFormat {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "hurdat2" => Ok(InputFormat::Hurdat2),
            _ => Err(()),
        }
    }
}

impl InputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::Csv => "csv",
            InputFormat::Hurdat2 => "hurdat2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T = f64> {
    pub k: usize,
    pub beta: T,
    pub a1: T,
    pub b1: T,
    pub a2: T,
    pub b2: T,
    pub alpha: T,
    pub th_theta_psi: T,
    pub th_theta: T,
    pub search_distance: T,
    pub th_w_theta: T,
    pub th_w_psi: T,
    pub th_w_rho: T,
    pub w0: T,
    pub sigma: T,
    pub cutoff: T,

    pub seed: u64,
    pub max_iters: usize,
    pub tol: T,
    pub eps_speed: T,
    pub min_pattern_support: T,
    /// Rescale input coordinates to the `[0, 1000]` square before mining.
    pub normalize: bool,
    pub mixture_components: usize,
    pub kl_threshold: T,
    pub kl_samples: usize,
    /// Worker threads; `None` lets the thread pool decide.
    pub workers: Option<usize>,
    pub input: Option<PathBuf>,
    pub input_format: InputFormat,
    pub output: Option<PathBuf>,
}

impl<T: Scalar> RunConfig<T> {
    /// Default profile for data in the `[0, 1000]` square.
    pub fn defaults() -> Self {
        Self {
            k: 300,
            beta: T::lit(45.0),
            a1: T::lit(30.0),
            b1: T::lit(12.0),
            a2: T::lit(15.0),
            b2: T::lit(12.0),
            alpha: T::lit(1.0),
            th_theta_psi: T::lit(12.0),
            th_theta: T::lit(30.0),
            search_distance: T::lit(2.0),
            th_w_theta: T::lit(15.0),
            th_w_psi: T::lit(120.0),
            th_w_rho: T::lit(25.0),
            w0: T::lit(1.0),
            sigma: T::lit(20.0),
            cutoff: T::lit(0.25),
            seed: 0,
            max_iters: 300,
            tol: T::lit(1e-6),
            eps_speed: T::lit(1e-6),
            min_pattern_support: T::lit(0.002),
            normalize: true,
            mixture_components: 5,
            kl_threshold: T::lit(1.0),
            kl_samples: 10_000,
            workers: None,
            input: None,
            input_format: InputFormat::Csv,
            output: None,
        }
    }

    /// Parses a config file body. Without a `base`, all sixteen model
    /// parameters are required; operational keys fall back to the defaults.
    pub fn parse(text: &str, base: Option<&Self>) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            let key = if key == "k" { "K" } else { key };
            let known = MODEL_KEYS.iter().chain(OPERATIONAL_KEYS.iter()).find(|&&k| k == key);
            let Some(&key) = known else {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            };
            if entries.insert(key, (line, value.trim())).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        if base.is_none() {
            let missing: Vec<String> = MODEL_KEYS
                .iter()
                .filter(|k| !entries.contains_key(*k))
                .map(|k| k.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(ConfigError::Missing(missing));
            }
        }

        let mut cfg = base.cloned().unwrap_or_else(Self::defaults);
        for (&key, &(line, value)) in &entries {
            let invalid = || ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            fn num<V: FromStr>(value: &str, invalid: impl Fn() -> ConfigError) -> Result<V, ConfigError> {
                value.parse().map_err(|_| invalid())
            }
            match key {
                "K" => cfg.k = num(value, invalid)?,
                "beta" => cfg.beta = num(value, invalid)?,
                "a1" => cfg.a1 = num(value, invalid)?,
                "b1" => cfg.b1 = num(value, invalid)?,
                "a2" => cfg.a2 = num(value, invalid)?,
                "b2" => cfg.b2 = num(value, invalid)?,
                "alpha" => cfg.alpha = num(value, invalid)?,
                "th_theta_psi" => cfg.th_theta_psi = num(value, invalid)?,
                "th_theta" => cfg.th_theta = num(value, invalid)?,
                "search_distance" => cfg.search_distance = num(value, invalid)?,
                "th_w_theta" => cfg.th_w_theta = num(value, invalid)?,
                "th_w_psi" => cfg.th_w_psi = num(value, invalid)?,
                "th_w_rho" => cfg.th_w_rho = num(value, invalid)?,
                "w0" => cfg.w0 = num(value, invalid)?,
                "sigma" => cfg.sigma = num(value, invalid)?,
                "cutoff" => cfg.cutoff = num(value, invalid)?,
                "seed" => cfg.seed = num(value, invalid)?,
                "max_iters" => cfg.max_iters = num(value, invalid)?,
                "tol" => cfg.tol = num(value, invalid)?,
                "eps_speed" => cfg.eps_speed = num(value, invalid)?,
                "min_pattern_support" => cfg.min_pattern_support = num(value, invalid)?,
                "normalize" => cfg.normalize = num(value, invalid)?,
                "mixture_components" => cfg.mixture_components = num(value, invalid)?,
                "kl_threshold" => cfg.kl_threshold = num(value, invalid)?,
                "kl_samples" => cfg.kl_samples = num(value, invalid)?,
                "workers" => cfg.workers = Some(num(value, invalid)?),
                "input" => cfg.input = Some(PathBuf::from(value)),
                "input_format" => cfg.input_format = value.parse().map_err(|_| invalid())?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, see [`RunConfig::parse`].
    pub fn load(path: impl AsRef<Path>, base: Option<&Self>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, base)
    }

    /// Serializes every setting in the file format accepted by
    /// [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let model = [
            self.beta,
            self.a1,
            self.b1,
            self.a2,
            self.b2,
            self.alpha,
            self.th_theta_psi,
            self.th_theta,
            self.search_distance,
            self.th_w_theta,
            self.th_w_psi,
            self.th_w_rho,
            self.w0,
            self.sigma,
            self.cutoff,
        ];
        let _ = writeln!(s, "K = {}", self.k);
        for (key, v) in MODEL_KEYS[1..].iter().zip(model) {
            let _ = writeln!(s, "{key} = {v}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "eps_speed = {}", self.eps_speed);
        let _ = writeln!(s, "min_pattern_support = {}", self.min_pattern_support);
        let _ = writeln!(s, "normalize = {}", self.normalize);
        let _ = writeln!(s, "mixture_components = {}", self.mixture_components);
        let _ = writeln!(s, "kl_threshold = {}", self.kl_threshold);
        let _ = writeln!(s, "kl_samples = {}", self.kl_samples);
        if let Some(w) = self.workers {
            let _ = writeln!(s, "workers = {w}");
        }
        if let Some(p) = &self.input {
            let _ = writeln!(s, "input = {}", p.display());
        }
        let _ = writeln!(s, "input_format = {}", self.input_format.as_str());
        if let Some(p) = &self.output {
            let _ = writeln!(s, "output = {}", p.display());
        }
        s
    }

    pub fn kmeans_params(&self) -> KmeansParams<T> {
        KmeansParams {
            k: self.k,
            beta: self.beta,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
        }
    }

    pub fn reachability_params(&self) -> ReachabilityParams<T> {
        ReachabilityParams {
            ellipse: EllipseParams {
                a1: self.a1,
                b1: self.b1,
                a2: self.a2,
                b2: self.b2,
            },
            angle: AngleParams {
                alpha: self.alpha,
                th_theta_psi: self.th_theta_psi,
                th_theta: self.th_theta,
            },
            wedge: WedgeParams {
                th_w_psi: self.th_w_psi,
                th_w_rho: self.th_w_rho,
                th_w_theta: self.th_w_theta,
            },
            unblock: UnblockParams {
                search_distance: self.search_distance,
            },
        }
    }

    pub fn pattern_params(&self) -> PatternParams<T> {
        PatternParams {
            weights: WeightParams {
                w0: self.w0,
                sigma: self.sigma,
            },
            cutoff: self.cutoff,
            min_pattern_support: self.min_pattern_support,
        }
    }

    pub fn change_params(&self) -> ChangeParams<T> {
        ChangeParams {
            mixture_components: self.mixture_components,
            kl_threshold: self.kl_threshold,
            n_samples: self.kl_samples,
            seed: self.seed,
        }
    }

    /// Checks every bound of the owning parameter types.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.k == 0 {
            return invalid("K must be at least 1".into());
        }
        if !(self.beta >= T::zero() && self.beta.is_finite()) {
            return invalid(format!("beta = {} must be non-negative", self.beta));
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1".into());
        }
        if !(self.tol >= T::zero() && self.tol.is_finite()) {
            return invalid(format!("tol = {} must be non-negative", self.tol));
        }
        if !(self.eps_speed >= T::zero() && self.eps_speed.is_finite()) {
            return invalid(format!("eps_speed = {} must be non-negative", self.eps_speed));
        }
        if self.workers == Some(0) {
            return invalid("workers must be at least 1".into());
        }
        self.reachability_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.pattern_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.change_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        Self::defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_text() -> String {
        RunConfig::<f64>::defaults().to_text()
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::<f64>::defaults();
        cfg.seed = 42;
        cfg.workers = Some(3);
        cfg.output = Some("out".into());
        let parsed = RunConfig::parse(&cfg.to_text(), None).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# profile\n\n{}  # trailing\n", full_text().replace("cutoff = 0.25", "cutoff = 0.3"));
        let cfg = RunConfig::<f64>::parse(&text, None).unwrap();
        assert_eq!(cfg.cutoff, 0.3);
    }

    #[test]
    fn model_keys_are_mandatory() {
        let text: String = full_text().lines().filter(|l| !l.starts_with("sigma")).map(|l| format!("{l}\n")).collect();
        match RunConfig::<f64>::parse(&text, None) {
            Err(ConfigError::Missing(keys)) => assert_eq!(keys, vec!["sigma".to_string()]),
            other => panic!("{other:?}"),
        }
        let base = RunConfig::defaults();
        assert_eq!(RunConfig::<f64>::parse("cutoff = 0.4\n", Some(&base)).unwrap().cutoff, 0.4);
    }

    #[test]
    fn rejects_bad_input() {
        let base = RunConfig::<f64>::defaults();
        assert!(matches!(
            RunConfig::parse("colour = red", Some(&base)),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("beta 45", Some(&base)),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("beta = x", Some(&base)),
            Err(ConfigError::InvalidValue { .. })
        ));
        assert!(matches!(
            RunConfig::parse("beta = 1\nbeta = 2", Some(&base)),
            Err(ConfigError::DuplicateKey { line: 2, .. })
        ));
    }

    #[test]
    fn bounds_revalidated() {
        let base = RunConfig::<f64>::defaults();
        for text in [
            "a1 = 0",
            "th_theta = 200",
            "search_distance = 0.5",
            "cutoff = 1.5",
            "sigma = -1",
            "K = 0",
            "workers = 0",
            "kl_samples = 0",
        ] {
            assert!(
                matches!(RunConfig::parse(text, Some(&base)), Err(ConfigError::Invalid(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn defaults_are_valid() {
        RunConfig::<f64>::defaults().validate().unwrap();
        RunConfig::<f32>::defaults().validate().unwrap();
    }
}
