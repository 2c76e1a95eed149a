use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Squeezed-light optomechanical entanglement sweeps.
#[derive(Debug, Parser)]
#[command(name = "pondera", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every metric at a single configuration.
    Point(PointArgs),
    /// Run a parameter sweep and write grid.csv + manifest.json.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Regenerate the data behind one of the canned figures.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON config file. Defaults to the bundled reference parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-path override, e.g. `squeezers[0].r=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Drop unknown config keys instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
    /// Squeezing strength for both squeezers.
    #[arg(long)]
    pub r: Option<f64>,
    /// Bath temperature (K).
    #[arg(long)]
    pub temp: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; default is all available cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Base RNG seed (else $PONDERA_SEED, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Homodyne samples per point for the sampled cumulant column.
    #[arg(long, default_value_t = 0)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Also write record.json, config.json and manifest.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// Grid over both squeezing angles.
    Angles(AngleArgs),
    /// Squeezing strength μ with r_j = μ√P_j.
    Strength(StrengthArgs),
    /// Sideband frequency.
    Frequency(FrequencyArgs),
    /// Quantum/thermal output noise over both squeezing angles.
    NoiseRatio(AngleArgs),
    /// Conventional beamsplitter entanglement against the cavity.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// θ₁ axis as start:stop:count. Default: 32 points on [0, 2π).
    #[arg(long)]
    pub theta1: Option<AxisSpec>,
    /// θ₂ axis as start:stop:count. Default: 32 points on [0, 2π).
    #[arg(long)]
    pub theta2: Option<AxisSpec>,
}

#[derive(Debug, Args)]
pub struct StrengthArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "0:30:31")]
    pub mu: AxisSpec,
    /// Fixed θ₁ (rad).
    #[arg(long = "angle1", default_value_t = 0.0)]
    pub angle1: f64,
    /// Fixed θ₂ (rad).
    #[arg(long = "angle2", default_value_t = 0.0)]
    pub angle2: f64,
}

#[derive(Debug, Args)]
pub struct FrequencyArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Ω axis in rad/s as start:stop:count.
    #[arg(long, default_value = "10:1e8:120")]
    pub omega: AxisSpec,
    /// Space the Ω axis linearly instead of logarithmically.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "0:30:16")]
    pub mu: AxisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub figure: Figure,
    #[command(flatten)]
    pub run: RunArgs,
}

/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let start: f64 = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
        let stop: f64 = b.trim().parse().map_err(|_| format!("bad stop `{b}`"))?;
        let count: usize = n.trim().parse().map_err(|_| format!("bad count `{n}`"))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err("axis bounds must be finite".into());
        }
        if count == 0 {
            return Err("axis count must be positive".into());
        }
        if count > 1 && start == stop {
            return Err("axis with several points needs start != stop".into());
        }
        Ok(Self { start, stop, count })
    }
}
