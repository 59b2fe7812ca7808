use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use friedrichs::mellin::Kind;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "friedrichs", version, about = "Thresholds and negative-eigenvalue counts for x^{2l} + gamma V")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Coupling threshold sigma.
    #[command(args_override_self = true)]
    Sigma(SigmaArgs),
    /// Closed-form negative-eigenvalue counts.
    #[command(args_override_self = true)]
    Predict(PredictArgs),
    /// Galerkin refinement sweep compared with the predictors.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Thresholds and counts over an (l, gamma) grid.
    #[command(args_override_self = true)]
    Table(TableArgs),
    /// Fixed verification suite; exits 4 when a predictor disagrees with the numerics.
    #[command(args_override_self = true)]
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SigmaArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_parser = parse_kind, default_value = "c")]
    pub kind: Kind,
    #[arg(long)]
    pub l: f64,
    /// Bessel order; with `--q`, the threshold of `t^q J_p(t)` instead.
    #[arg(long, requires = "q", allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, requires = "p", allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_parser = parse_kind, default_value = "c")]
    pub kind: Kind,
    #[arg(long)]
    pub l: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Cos,
    Sin,
    Bessel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Half-width of the base window in ln x.
    #[arg(long, default_value_t = 25.0)]
    pub window: f64,
    #[arg(long, default_value_t = 64)]
    pub base_cells: usize,
    /// Number of nested grids, each doubling window and cells.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-6, 1e-8, 1e-10])]
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "cos")]
    pub kernel: KernelArg,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long)]
    pub l: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write the scaled matrices of every level here.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_parser = parse_kind, default_value = "c")]
    pub kind: Kind,
    #[arg(long)]
    pub l_min: f64,
    #[arg(long)]
    pub l_max: f64,
    #[arg(long)]
    pub l_step: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_max: f64,
    #[arg(long)]
    pub gamma_step: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelfcheckArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Sigma(a) => &a.out,
            Command::Predict(a) => &a.out,
            Command::Verify(a) => &a.out,
            Command::Table(a) => &a.out,
            Command::Selfcheck(a) => &a.out,
        }
    }
}
