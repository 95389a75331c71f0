use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tbechart", version, about = "Shewhart charts for Weibull time-between-events data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute control limits from known parameters or a Phase I sample.
    Design(DesignArgs),
    /// Run-length performance of a known-parameter or estimated-scale chart.
    Eval(EvalArgs),
    /// Monte Carlo distribution of the conditional ARL over Phase I samples.
    Table1(Table1Args),
    /// Adjust the false-alarm rate of estimated limits to meet a criterion.
    Adjust(AdjustArgs),
    /// Check a Phase II series against a design.
    Monitor(MonitorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report format; defaults to `table` on stdout and `json` with --out.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// In-control false-alarm rate per plotted point.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Known in-control shape.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Known in-control scale.
    #[arg(long, conflicts_with = "phase1")]
    pub beta: Option<f64>,
    /// Phase I sample (one value per line) to estimate the scale from.
    #[arg(long)]
    pub phase1: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub limits: LimitArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Case {
    /// Known parameters.
    K,
    /// Scale estimated from a Phase I sample of size --m.
    U,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "k")]
    pub case: Case,
    #[arg(long, default_value_t = 0.0027)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Scale shift beta1/beta0.
    #[arg(long, default_value_t = 1.0)]
    pub delta1: f64,
    /// Shape shift eta1/eta0.
    #[arg(long, default_value_t = 1.0)]
    pub delta2: f64,
    /// Phase I sample size (case u).
    #[arg(long)]
    pub m: Option<u32>,
    /// Nominal ARL for the exceedance probability (case u).
    #[arg(long, default_value_t = 370.4)]
    pub target: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// TOML study configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Phase I sample sizes, repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<u32>,
    /// In-control (eta0, beta0) blocks, e.g. "(0.5,10)"; repeatable.
    #[arg(long = "params", value_parser = parse_pair)]
    pub params: Vec<(f64, f64)>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub delta1: Option<f64>,
    #[arg(long)]
    pub delta2: Option<f64>,
    /// Run every parameter block of the published table.
    #[arg(long)]
    pub all_blocks: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Criterion {
    /// Match the expected conditional ARL to the target.
    Ecarl,
    /// Cap P(CARL < target) at epsilon.
    Epc,
    /// Cap SDCARL at epsilon * target.
    Sdcarl,
}

#[derive(Debug, Args)]
pub struct AdjustArgs {
    /// Phase I sample sizes, repeatable or comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub m: Vec<u32>,
    #[arg(long, value_enum, default_value = "ecarl")]
    pub criterion: Criterion,
    #[arg(long, default_value_t = 370.4)]
    pub target: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Monte Carlo replications for an independent check (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub reps: u64,
    #[arg(long, default_value_t = 20_250_101)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Design file written by `design --format json`.
    #[arg(long, conflicts_with_all = ["alpha", "eta", "beta", "phase1"])]
    pub design: Option<PathBuf>,
    #[command(flatten)]
    pub limits: LimitArgs,
    /// Phase II series, one positive value per line.
    pub data: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let mut parts = inner.split(',').map(str::trim);
    let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected \"(eta0,beta0)\", got {s:?}"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(a)?, num(b)?))
}
