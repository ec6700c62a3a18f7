use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{FileConfig, Overrides, RunConfig, SilhouetteDims};

/// Estimate concept subspaces from score vectors, edit along them and
/// diagnose whether style and content are separable.
#[derive(Debug, Parser)]
#[command(name = "concept-lens", version)]
struct Cli {
    /// JSON file with flat keys; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override for synthetic generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress informational output on stdout and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset from a synthetic factor model.
    Synth {
        /// Recipe or fully specified model, as JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Prompt grid, as JSON.
        #[arg(long)]
        grid: PathBuf,
    },
    /// Estimate the style subspace from the baseline-content slice.
    Subspace {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        estimate: EstimateArgs,
    },
    /// Project a dataset into a subspace and run the separability diagnostics.
    Diag {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Subspace file written by `subspace`.
        #[arg(long)]
        subspace: PathBuf,
        #[command(flatten)]
        diag: DiagArgs,
    },
    /// Rank several datasets (one per prompt template) by separability.
    Rank {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        estimate: EstimateArgs,
        #[command(flatten)]
        diag: DiagArgs,
    },
    /// Swap the subspace component of one score vector for another's.
    Edit {
        #[arg(long)]
        subspace: PathBuf,
        /// Score vector(s) under the original prompt (.f32, T×D).
        #[arg(long)]
        orig: PathBuf,
        /// Score vector(s) under the prompt carrying the new concept (.f32, T×D).
        #[arg(long)]
        new: PathBuf,
    },
    /// Check a dataset manifest and every blob it references.
    Validate {
        #[command(flatten)]
        dataset: DatasetArgs,
    },
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset directory (repeatable for `rank`).
    #[arg(long = "dataset")]
    datasets: Vec<PathBuf>,
    /// How timesteps are collapsed: `mean` or `t:N`.
    #[arg(long)]
    aggregate: Option<String>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Content label whose samples define the style variation.
    #[arg(long)]
    baseline: Option<String>,
    /// Subspace dimension, or `auto`.
    #[arg(long)]
    k: Option<String>,
    /// Do not subtract the slice mean.
    #[arg(long)]
    no_center: bool,
}

#[derive(Debug, Args)]
struct DiagArgs {
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    t_delta: Option<f64>,
    #[arg(long)]
    t_low: Option<f64>,
    #[arg(long, value_enum)]
    silhouette_dims: Option<SilhouetteDims>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides {
            out: self.out.clone(),
            seed: self.seed,
            quiet: self.quiet,
            ..Overrides::default()
        };
        let (ds, est, diag) = match &self.command {
            Command::Subspace { dataset, estimate } => (Some(dataset), Some(estimate), None),
            Command::Diag { dataset, diag, .. } => (Some(dataset), None, Some(diag)),
            Command::Rank {
                dataset,
                estimate,
                diag,
            } => (Some(dataset), Some(estimate), Some(diag)),
            Command::Validate { dataset } => (Some(dataset), None, None),
            Command::Synth { .. } | Command::Edit { .. } => (None, None, None),
        };
        if let Some(d) = ds {
            o.datasets = d.datasets.clone();
            o.aggregate = d.aggregate.clone();
        }
        if let Some(e) = est {
            o.baseline = e.baseline.clone();
            o.k = e.k.clone();
            o.no_center = e.no_center;
        }
        if let Some(d) = diag {
            o.bins = d.bins;
            o.smoothing = d.smoothing;
            o.t_delta = d.t_delta;
            o.t_low = d.t_low;
            o.silhouette_dims = d.silhouette_dims;
        }
        o
    }
}

fn run(cli: Cli) -> concept_lens::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(file, cli.overrides())?;
    match &cli.command {
        Command::Synth { spec, grid } => commands::synth(&cfg, spec, grid),
        Command::Subspace { .. } => commands::subspace(&cfg),
        Command::Diag { subspace, .. } => commands::diag(&cfg, subspace),
        Command::Rank { .. } => commands::rank(&cfg),
        Command::Edit { subspace, orig, new } => commands::edit(&cfg, subspace, orig, new),
        Command::Validate { .. } => commands::validate(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONCEPT_LENS_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 1 } else { 2 })
        }
    }
}
