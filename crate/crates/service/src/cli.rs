use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netq_core::eval::{Algo, TeacherSpec};
use netq_core::scenario::ScenarioKind;

#[derive(Debug, Parser)]
#[command(name = "netq", version, about = "Learn a network design from preference queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a gravity-model demand matrix for a topology.
    Demands(DemandsArgs),
    /// Precompute a pool of objective/design pairs.
    Pool(PoolArgs),
    /// Run repeated oracle sessions and write a quality curve.
    Run(RunArgs),
    /// Rerun an experiment on subsamples of a large pool.
    SweepPool(SweepArgs),
    /// Check sortability, the half lemma, the adversarial sets and the convergence bound.
    CheckTheory(TheoryArgs),
    /// Serve interactive sessions over HTTP.
    Serve(ServeArgs),
    /// Render quality curves as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    Mcf,
    Bw,
    Nf,
    Ospf,
}

impl From<ScenarioName> for ScenarioKind {
    fn from(s: ScenarioName) -> Self {
        match s {
            ScenarioName::Mcf => ScenarioKind::Mcf,
            ScenarioName::Bw => ScenarioKind::Bw,
            ScenarioName::Nf => ScenarioKind::Nf,
            ScenarioName::Ospf => ScenarioKind::Ospf,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemandsArgs {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub classes: usize,
    /// Total demand as a multiple of the summed link capacity.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    /// Keep only this many random node pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioName,
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub demands: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Tunnels per flow for MCF and NF.
    #[arg(long)]
    pub tunnels: Option<usize>,
    /// Multiplier from allocation times path weight to the MCF latency metric.
    #[arg(long)]
    pub latency_unit: Option<f64>,
    /// Flow groups for NF.
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// `perfect` or `imperfect:P` with P the noise percentage.
    #[arg(long, default_value = "perfect", value_parser = parse_teacher)]
    pub teacher: TeacherSpec,
    #[arg(long, default_value = "net10q", value_parser = parse_algo)]
    pub algo: Algo,
    #[arg(long, default_value_t = 10)]
    pub queries: usize,
    /// Defaults to 301 with NETQ_FULL=1 and 31 otherwise.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub pool: PathBuf,
    /// Pool whose designs define the quality ranking; defaults to `--pool`.
    #[arg(long)]
    pub rank_pool: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// CSV destination; the configuration goes next to it as JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// The master pool that every size is drawn from and ranked against.
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "10,100,300,1000")]
    pub sizes: Vec<usize>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub pool: PathBuf,
    /// Sets sampled from the pool for the sortability and half-lemma checks.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Repetitions of the synthetic convergence experiment.
    #[arg(long, default_value_t = 301)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub pool: PathBuf,
    /// Directory of the built web UI.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Idle seconds before a session expires.
    #[arg(long, default_value_t = 7200)]
    pub ttl_secs: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub curves: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
}

fn parse_teacher(s: &str) -> Result<TeacherSpec, String> {
    s.parse()
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse()
}
