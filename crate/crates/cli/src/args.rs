use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lcoal", version, about = "Simulate and classify Lambda-coalescents")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the behaviour regime (A-D) and the moment predicates.
    Classify(ClassifyArgs),
    /// Monte Carlo campaign on the restricted chain.
    SimulateChain(ChainArgs),
    /// Monte Carlo campaign on the flow of bridges.
    SimulateFlow(FlowArgs),
    /// Run the oracle suite and the dichotomy experiment.
    Verify(VerifyArgs),
    /// Write a bridge as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct MeasureArgs {
    /// Beta(2 - ALPHA, ALPHA) measure, ALPHA in (0, 2].
    #[arg(long, value_name = "ALPHA")]
    pub beta: Option<f64>,
    /// Point mass at 0.
    #[arg(long)]
    pub kingman: bool,
    /// Lebesgue measure on [0, 1].
    #[arg(long)]
    pub uniform: bool,
    /// x^2 dx on [0, 1].
    #[arg(long)]
    pub x2: bool,
    /// Measure in text form, e.g. `atoms:0.5@1` or `piecewise:0,1;0,0,1`.
    #[arg(long, value_name = "SPEC")]
    pub measure: Option<String>,
}

impl MeasureArgs {
    pub fn text(&self) -> Option<String> {
        if let Some(a) = self.beta {
            Some(format!("beta:{a}"))
        } else if self.kingman {
            Some("kingman".into())
        } else if self.uniform {
            Some("uniform".into())
        } else if self.x2 {
            Some("x2".into())
        } else {
            self.measure.clone()
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// key=value config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root seed; a fresh one is generated and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output file (relative paths resolve against $LCOAL_OUT_DIR when set).
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    /// Horizon, or the reference time with --embed.
    #[arg(long)]
    pub t: Option<f64>,
    /// Comma-separated snapshot times in [0, t].
    #[arg(long, value_name = "LIST")]
    pub snapshots: Option<String>,
    /// Run the induced coalescent on block representatives at time t.
    #[arg(long)]
    pub embed: bool,
    /// Select all blocks at t instead of non-singleton blocks (with --embed).
    #[arg(long)]
    pub all_blocks: bool,
    /// Write the event list of replicate 0 to this file.
    #[arg(long, value_name = "FILE")]
    pub trajectory: Option<PathBuf>,
    /// Write one JSON line per replicate to this file.
    #[arg(long, value_name = "FILE")]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,
    /// Paintbox sample size (0 disables the paintbox).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Strictly decreasing truncation levels, comma-separated.
    #[arg(long, value_name = "LIST")]
    pub eps: Option<String>,
    /// Hole-size thresholds for the census, comma-separated.
    #[arg(long, value_name = "LIST")]
    pub thresholds: Option<String>,
    /// Write one JSON line per replicate to this file.
    #[arg(long, value_name = "FILE")]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Truncation grid of the flow experiments (default 2^-2 .. 2^-8).
    #[arg(long, value_name = "LIST")]
    pub eps: Option<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Bridge in text form `slope;u:s,u:s`.
    #[arg(long, value_name = "TEXT", conflicts_with_all = ["beta", "kingman", "uniform", "x2", "measure", "simple"])]
    pub bridge: Option<String>,
    /// Simple bridge with jump size X at location U, as `X,U`.
    #[arg(long, value_name = "X,U", conflicts_with_all = ["beta", "kingman", "uniform", "x2", "measure"])]
    pub simple: Option<String>,
    /// Horizon of a simulated flow bridge.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Truncation level of a simulated flow bridge.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "svg")]
    pub format: Format,
}
