//! Flag definitions. Every subcommand lets a later flag override an earlier
//! one, which is how config-file values yield to the command line.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tailwedge", version, about = "Right-tail asymptotics from MGF explosion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log-MGF at each requested p.
    Mgf(MgfArgs),
    /// Critical moments and the pole coefficient of the CIR superposition.
    Critical(CriticalArgs),
    /// Legendre transform, Chernoff bound and asymptotic bands per level R.
    Tail(TailArgs),
    /// Monte Carlo tail and MGF estimates next to the closed forms.
    Simulate(SimulateArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gamma,
    Vg,
    Cir,
    Heston,
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a decimal number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Comma-separated finite decimals.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

fn list(s: &str) -> Result<List, String> {
    s.split(',').map(finite).collect::<Result<Vec<_>, _>>().map(List)
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Write CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Gamma shape.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Gamma scale.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Variance-gamma rate parameter c.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Variance-gamma lower critical moment G.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub g: Option<f64>,
    /// Variance-gamma upper critical moment M.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// CIR drift level.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// CIR mean-reversion speed.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// CIR volatility.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// CIR starting value.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    /// Heston price-variance correlation.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// Weight of V_t.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub l1: Option<f64>,
    /// Weight of I_t.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub l2: Option<f64>,
    /// Horizon.
    #[arg(long, value_parser = finite, allow_negative_numbers = true)]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct MgfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Exponents, comma separated.
    #[arg(long, value_parser = list, allow_negative_numbers = true, default_value = "1")]
    pub p: List,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct TailArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tail levels, comma separated.
    #[arg(long = "R", value_parser = list, allow_negative_numbers = true)]
    pub r: List,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Tail levels, comma separated.
    #[arg(long = "R", value_parser = list, allow_negative_numbers = true)]
    pub r: Option<List>,
    /// MGF exponents, comma separated.
    #[arg(long, value_parser = list, allow_negative_numbers = true)]
    pub p: Option<List>,
    #[arg(long, default_value_t = 200_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Thread count or `auto`; falls back to TAILWEDGE_WORKERS.
    #[arg(long)]
    pub workers: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ValidateArgs {
    /// Run a single criterion by key, e.g. `riccati`.
    #[arg(long)]
    pub only: Option<String>,
    /// Fewer samples and random configurations.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Mgf(a) => &a.common,
            Command::Critical(a) => &a.common,
            Command::Tail(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Validate(a) => &a.common,
        }
    }
}
