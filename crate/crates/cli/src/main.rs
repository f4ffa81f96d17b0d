//! `motionpat`: mine motion patterns from trajectory files.

use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motion_patterns::config::{InputFormat, RunConfig};
use motion_patterns::pipeline::{self, with_workers};
use motion_patterns::render::{render_patterns, RenderSpec};
use motion_patterns::synthgen::{generate, ScenarioKind, ScenarioSpec};
use motion_patterns::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "motionpat", version, about = "Mine regional motion patterns from trajectories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write CSV and SVG artifacts.
    Mine(RunArgs),
    /// Stop after motion components; write components.csv and components.svg.
    Components(RunArgs),
    /// Plot the signature of one motion component.
    Signature {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        component_id: usize,
    },
    /// Run the pipeline and write only the SVG renderings.
    Render(RunArgs),
    /// Compare two epochs and report emerged and disappeared patterns.
    Diff {
        #[command(flatten)]
        run: RunArgs,
        /// Second-epoch trajectories.
        #[arg(long)]
        input2: PathBuf,
    },
    /// Generate a synthetic scenario with ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in default profile for any parameter not in --config.
    #[arg(long)]
    defaults: bool,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input format: csv or hurdat2.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Mine coordinates as given instead of rescaling to [0, 1000].
    #[arg(long)]
    no_normalize: bool,
    /// Canvas width and height in pixels.
    #[arg(long, default_value_t = 800)]
    canvas: u32,
    /// Fraction of trajectories drawn in the background.
    #[arg(long, default_value_t = 0.25)]
    sample_fraction: f64,
    #[arg(long)]
    no_legend: bool,
    /// Skip the per-pattern documents.
    #[arg(long)]
    overview_only: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// One of straight_lane, arc, s_curve, merge, diverge, opposite_overlap,
    /// parallel_lanes, dense_sparse.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trajectories: usize,
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let defaults = RunConfig::defaults();
        let base = self.defaults.then_some(&defaults);
        let mut cfg = match (&self.config, base) {
            (Some(path), base) => RunConfig::load(path, base)?,
            (None, Some(base)) => base.clone(),
            (None, None) => return Err(Error::Usage("either --config or --defaults is required".into())),
        };
        if let Some(input) = &self.input {
            cfg.input = Some(input.clone());
        }
        if let Some(format) = &self.format {
            cfg.input_format = format
                .parse::<InputFormat>()
                .map_err(|_| Error::Usage(format!("unknown input format {format:?}")))?;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = Some(workers);
        }
        if self.no_normalize {
            cfg.normalize = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn render(&self, seed: u64) -> Result<RenderSpec> {
        let spec = RenderSpec {
            width: self.canvas,
            height: self.canvas,
            sample_fraction: self.sample_fraction,
            per_pattern: !self.overview_only,
            legend: !self.no_legend,
            seed,
        };
        spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(spec)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io("writing", path, e))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let kind: ScenarioKind = args.scenario.parse()?;
    let spec = ScenarioSpec {
        kind,
        trajectories_per_branch: args.trajectories,
        step_length: args.step,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let (dataset, truth) = generate(&spec)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io("creating", &args.out, e))?;
    let data_path = args.out.join(format!("{kind}.csv"));
    let mut buf = Vec::new();
    motion_patterns::ingest::write_csv(&dataset, &mut buf)?;
    write(&data_path, &buf)?;
    let mut buf = Vec::new();
    truth.write_csv(&mut buf)?;
    write(&args.out.join(format!("{kind}_truth.csv")), &buf)?;
    let cfg = RunConfig::<f64> {
        normalize: false,
        input: Some(data_path.clone()),
        ..RunConfig::defaults()
    };
    write(&args.out.join(format!("{kind}.conf")), cfg.to_text().as_bytes())?;
    println!(
        "{kind}: {} trajectories, {} points -> {}",
        dataset.len(),
        dataset.point_count(),
        data_path.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth(args) = &cli.command {
        return synth(args);
    }
    let run_args = match &cli.command {
        Command::Mine(r) | Command::Components(r) | Command::Render(r) => r,
        Command::Signature { run, .. } | Command::Diff { run, .. } => run,
        Command::Synth(_) => unreachable!(),
    };
    let cfg = run_args.config()?;
    let render = run_args.render(cfg.seed)?;
    with_workers(cfg.workers, || match &cli.command {
        Command::Mine(_) => {
            let mined = pipeline::run_pipeline(&cfg, &render)?;
            println!(
                "{} flow vectors, {} components, {} edges, {} patterns ({} non-noise)",
                mined.field.len(),
                mined.model.len(),
                mined.graph.edges.len(),
                mined.patterns.patterns.len(),
                mined.patterns.non_noise_count()
            );
            Ok(())
        }
        Command::Components(_) => {
            let model = pipeline::debug_components(&cfg, &render)?;
            let drawn = model.components.iter().filter(|c| c.heading.is_some()).count();
            println!("{} components, {drawn} with a heading", model.len());
            Ok(())
        }
        Command::Signature { component_id, .. } => {
            let sig = pipeline::debug_signature(&cfg, *component_id, &render)?;
            println!("signature of component {component_id}: {} members", sig.len());
            Ok(())
        }
        Command::Render(_) => {
            let dataset = pipeline::load_input(&cfg)?;
            let mined = pipeline::mine(&dataset, &cfg)?;
            let dir = cfg.output.as_deref().ok_or_else(|| Error::Usage("no output directory given".into()))?;
            fs::create_dir_all(dir).map_err(|e| Error::io("creating", dir, e))?;
            let svgs = render_patterns(&mined.patterns, &mined.field, &mined.dataset, &render)
                .map_err(|e| Error::Usage(e.to_string()))?;
            write(&dir.join("overview.svg"), svgs.overview.as_bytes())?;
            for (id, svg) in &svgs.per_pattern {
                write(&dir.join(format!("pattern_{id}.svg")), svg.as_bytes())?;
            }
            println!("{} pattern renderings", svgs.per_pattern.len());
            Ok(())
        }
        Command::Diff { input2, .. } => {
            let input1 = cfg.input.clone().ok_or_else(|| Error::Usage("no input file given".into()))?;
            let report = pipeline::diff_epochs(&cfg, &input1, input2)?;
            println!(
                "emerged: {:?}, disappeared: {:?}",
                report.emerged(),
                report.disappeared()
            );
            Ok(())
        }
        Command::Synth(_) => unreachable!(),
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
