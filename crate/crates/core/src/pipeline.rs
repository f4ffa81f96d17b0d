//! End-to-end orchestration: load, mine, compare epochs and write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use crate::change_detect::{derive_seed, diff, fit_pattern_densities, ChangeReport};
use crate::components::{fit_components, ComponentModel};
use crate::config::{InputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::flowfield::{compute_flow_vectors, FlowField};
use crate::ingest::{self, normalize, normalize_jointly, Dataset, IngestError};
use crate::patterns::{cluster, component_weights, signature, PatternSet, Signature};
use crate::reachability::{build_reachability, ReachabilityGraph};
use crate::render::{render_components, render_patterns, render_signature, RenderSpec};
use crate::Scalar;

/// Every intermediate product of one mining run.
#[derive(Debug, Clone)]
pub struct Mined<T = f64> {
    /// The dataset actually mined, after filtering and normalization.
    pub dataset: Dataset<T>,
    pub field: FlowField<T>,
    pub model: ComponentModel<T>,
    pub graph: ReachabilityGraph<T>,
    pub weights: Vec<T>,
    pub patterns: PatternSet<T>,
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Loads the configured input file.
pub fn load_input<T: Scalar>(cfg: &RunConfig<T>) -> Result<Dataset<T>> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::Usage("no input file given".into()))?;
    load_path(path, cfg.input_format)
}

pub fn load_path<T: Scalar>(path: &Path, format: InputFormat) -> Result<Dataset<T>> {
    Ok(match format {
        InputFormat::Csv => ingest::load_csv(path)?,
        InputFormat::Hurdat2 => ingest::load_hurdat2(path)?,
    })
}

/// Drops trajectories too short for a flow vector; fails when none remain.
fn usable<T: Scalar>(dataset: &Dataset<T>) -> Result<Dataset<T>> {
    let kept = Dataset {
        trajectories: dataset.trajectories.iter().filter(|t| t.len() >= 2).cloned().collect(),
        normalization: dataset.normalization,
    };
    if kept.is_empty() {
        return Err(IngestError::Empty.into());
    }
    Ok(kept)
}

/// Filters and, when configured, normalizes a dataset for mining.
pub fn prepare<T: Scalar>(dataset: &Dataset<T>, cfg: &RunConfig<T>) -> Result<Dataset<T>> {
    let kept = usable(dataset)?;
    Ok(if cfg.normalize { normalize(&kept)? } else { kept })
}

/// Flow vectors and motion components of a prepared dataset.
pub fn extract_components<T: Scalar>(dataset: &Dataset<T>, cfg: &RunConfig<T>) -> Result<(FlowField<T>, ComponentModel<T>)> {
    let field = compute_flow_vectors(dataset)?;
    let model = fit_components(&field, &cfg.kmeans_params(), cfg.eps_speed)?;
    Ok((field, model))
}

/// Mines a dataset that is already prepared.
pub fn mine_prepared<T: Scalar>(dataset: Dataset<T>, cfg: &RunConfig<T>) -> Result<Mined<T>> {
    cfg.validate()?;
    let (field, model) = extract_components(&dataset, cfg)?;
    let graph = build_reachability(&model, &cfg.reachability_params())?;
    let pattern_params = cfg.pattern_params();
    let weights = component_weights(&model, &pattern_params.weights)?;
    let patterns = cluster(&graph, &model, &pattern_params)?;
    Ok(Mined {
        dataset,
        field,
        model,
        graph,
        weights,
        patterns,
    })
}

/// Prepares and mines a dataset.
pub fn mine<T: Scalar>(dataset: &Dataset<T>, cfg: &RunConfig<T>) -> Result<Mined<T>> {
    cfg.validate()?;
    mine_prepared(prepare(dataset, cfg)?, cfg)
}

fn output_dir<T: Scalar>(cfg: &RunConfig<T>) -> Result<&Path> {
    let dir = cfg
        .output
        .as_deref()
        .ok_or_else(|| Error::Usage("no output directory given".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io("creating", dir, e))?;
    Ok(dir)
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|e| Error::io("writing", &path, e))?;
    Ok(path)
}

fn csv_bytes<E>(write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), E>) -> Result<Vec<u8>>
where
    Error: From<E>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Writes `components.csv`, `edges.csv`, `patterns.csv`, `summary.csv`,
/// `overview.svg` and `pattern_{id}.svg`. Returns the written paths.
pub fn write_artifacts<T: Scalar>(mined: &Mined<T>, dir: &Path, render: &RenderSpec) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io("creating", dir, e))?;
    let mut written = vec![
        write_file(dir.join("components.csv"), &csv_bytes(|b| mined.model.write_csv(b))?)?,
        write_file(dir.join("edges.csv"), &csv_bytes(|b| mined.graph.write_csv(b))?)?,
        write_file(
            dir.join("patterns.csv"),
            &csv_bytes(|b| mined.patterns.write_flow_csv(&mined.field, &mined.model, b))?,
        )?,
        write_file(dir.join("summary.csv"), &csv_bytes(|b| mined.patterns.write_summary_csv(b))?)?,
    ];
    let svgs = render_patterns(&mined.patterns, &mined.field, &mined.dataset, render).map_err(|e| Error::Usage(e.to_string()))?;
    written.push(write_file(dir.join("overview.svg"), svgs.overview.as_bytes())?);
    for (id, svg) in &svgs.per_pattern {
        written.push(write_file(dir.join(format!("pattern_{id}.svg")), svg.as_bytes())?);
    }
    Ok(written)
}

/// Loads the configured input, mines it and writes every artifact to the
/// output directory.
pub fn run_pipeline<T: Scalar>(cfg: &RunConfig<T>, render: &RenderSpec) -> Result<Mined<T>> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    let mined = mine(&load_input(cfg)?, cfg)?;
    write_artifacts(&mined, dir, render)?;
    Ok(mined)
}

/// Stops after motion components; writes `components.csv` and
/// `components.svg`.
pub fn debug_components<T: Scalar>(cfg: &RunConfig<T>, render: &RenderSpec) -> Result<ComponentModel<T>> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    let dataset = prepare(&load_input(cfg)?, cfg)?;
    let (_, model) = extract_components(&dataset, cfg)?;
    write_file(dir.join("components.csv"), &csv_bytes(|b| model.write_csv(b))?)?;
    let svg = render_components(&model, Some(&dataset), render).map_err(|e| Error::Usage(e.to_string()))?;
    write_file(dir.join("components.svg"), svg.as_bytes())?;
    Ok(model)
}

/// Stops after the reachability graph; writes `signature_{id}.svg`.
pub fn debug_signature<T: Scalar>(cfg: &RunConfig<T>, component: usize, render: &RenderSpec) -> Result<Signature> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    let dataset = prepare(&load_input(cfg)?, cfg)?;
    let (_, model) = extract_components(&dataset, cfg)?;
    let graph = build_reachability(&model, &cfg.reachability_params())?;
    let sig = signature(&graph, component)?;
    let svg = render_signature(&model, &sig, Some(&dataset), render).map_err(|e| Error::Usage(e.to_string()))?;
    write_file(dir.join(format!("signature_{component}.svg")), svg.as_bytes())?;
    Ok(sig)
}

/// Mines both epochs in one shared coordinate frame and compares their
/// patterns.
pub fn compare_epochs<T: Scalar>(
    first: &Dataset<T>,
    second: &Dataset<T>,
    cfg: &RunConfig<T>,
) -> Result<(Mined<T>, Mined<T>, ChangeReport<T>)> {
    cfg.validate()?;
    let (a, b) = (usable(first)?, usable(second)?);
    let (a, b) = if cfg.normalize {
        let mut joint = normalize_jointly(&[&a, &b])?;
        let b = joint.pop().expect("two datasets");
        (joint.pop().expect("two datasets"), b)
    } else {
        (a, b)
    };
    let mined_a = mine_prepared(a, cfg)?;
    let mined_b = mine_prepared(b, cfg)?;
    let g = cfg.mixture_components;
    // One fit seed for both epochs, so a density depends only on its data.
    let fit_seed = derive_seed(cfg.seed, 0, 0);
    let dens_a = fit_pattern_densities(&mined_a.field, &mined_a.patterns, g, fit_seed)?;
    let dens_b = fit_pattern_densities(&mined_b.field, &mined_b.patterns, g, fit_seed)?;
    let report = diff(&dens_a, &dens_b, &cfg.change_params())?;
    Ok((mined_a, mined_b, report))
}

/// Loads two epochs, compares them and writes `change_report.csv` to the
/// output directory.
pub fn diff_epochs<T: Scalar>(
    cfg: &RunConfig<T>,
    input1: &Path,
    input2: &Path,
) -> Result<ChangeReport<T>> {
    cfg.validate()?;
    let dir = output_dir(cfg)?;
    let first = load_path(input1, cfg.input_format)?;
    let second = load_path(input2, cfg.input_format)?;
    let (_, _, report) = compare_epochs(&first, &second, cfg)?;
    write_file(dir.join("change_report.csv"), &csv_bytes(|b| report.write_csv(b))?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Trajectory;

    fn small_cfg() -> RunConfig<f64> {
        RunConfig {
            k: 4,
            ..RunConfig::defaults()
        }
    }

    #[test]
    fn short_trajectories_filtered_and_empty_rejected() {
        let ds = Dataset::new(vec![Trajectory::from_xy("a", &[(0.0, 0.0)])]).unwrap();
        assert!(matches!(mine(&ds, &small_cfg()), Err(Error::Ingest(IngestError::Empty))));
    }

    #[test]
    fn too_many_components_is_data_error() {
        let ds = Dataset::new(vec![Trajectory::from_xy("a", &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])]).unwrap();
        let err = mine(&ds, &small_cfg()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn stationary_data_mines_without_headings() {
        let ds = Dataset::new(vec![
            Trajectory::from_xy("a", &[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]),
            Trajectory::from_xy("b", &[(3.0, 2.0), (3.0, 2.0), (3.0, 2.0)]),
        ])
        .unwrap();
        let cfg = RunConfig { k: 2, ..RunConfig::defaults() };
        let mined = mine(&ds, &cfg).unwrap();
        assert!(mined.model.components.iter().all(|c| c.heading.is_none()));
        assert!(mined.graph.edges.is_empty());
    }

    #[test]
    fn worker_pool_runs_closure() {
        assert_eq!(with_workers(Some(2), rayon::current_num_threads).unwrap(), 2);
    }
}
