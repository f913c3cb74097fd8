use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ca2d", version, about = "Lyapunov exponents, entropy and bounds for two-dimensional cellular automata")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_threads)]
    pub threads: Threads,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    /// JSON.
    Machine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a configuration and write its dump.
    ///
    /// Example: ca2d step --rule F3 --random 64x64 --steps 10 --seed 1 --out s.txt
    Step(StepArgs),
    /// Write the directional profile Λ_n(θ) as CSV.
    ///
    /// Example: ca2d lyapunov --rule F3 --n 64 --angles 64 --strategy exact
    Lyapunov(LyapunovArgs),
    /// Estimate the always finite entropy.
    ///
    /// Example: ca2d entropy --rule F3 --method rank --p-max 6 --n-max 12
    Entropy(EntropyArgs),
    /// Rectangle, integral and quadrant bound factors of a profile.
    ///
    /// Example: ca2d bound --rule F3 --n 256 --angles 256
    Bound(BoundArgs),
    /// Full pipeline: profile, entropy, bounds and inequality verdicts.
    ///
    /// Example: ca2d report --rule F3 --n 64 --angles 64 --p-max 6 --plot theta.csv
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RuleArgs {
    /// Builtin name (F1, F2, F3, Fk) or path to a rule file.
    #[arg(long)]
    pub rule: String,

    /// Parameter of the builtin Fk.
    #[arg(long, default_value_t = 1)]
    pub k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Periodic,
    Shrink,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[command(flatten)]
    pub rule: RuleArgs,

    /// Uniform random initial window, `WIDTHxHEIGHT`.
    #[arg(long, value_parser = parse_size, conflicts_with = "init", required_unless_present = "init")]
    pub random: Option<(usize, usize)>,

    /// Initial configuration dump.
    #[arg(long)]
    pub init: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub steps: usize,

    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    pub boundary: BoundaryArg,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let parse = |v: &str| v.parse::<usize>().ok().filter(|&v| v > 0).ok_or_else(|| format!("invalid size `{s}`"));
    Ok((parse(w)?, parse(h)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Exact,
    Sample,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub rule: RuleArgs,

    /// Iteration horizon.
    #[arg(long, default_value_t = 64)]
    pub n: usize,

    /// Angle count M (grid 2πk/M plus cardinals).
    #[arg(long, default_value_t = 64)]
    pub angles: usize,

    #[arg(long, value_enum, default_value_t = StrategyArg::Exact)]
    pub strategy: StrategyArg,

    /// Samples per angle for the sample strategy.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMethodArg {
    Rank,
    Empirical,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub rule: RuleArgs,

    #[arg(long, value_enum, default_value_t = EntropyMethodArg::Rank)]
    pub method: EntropyMethodArg,

    /// Largest patch side (rank), or the patch side (empirical).
    #[arg(long, default_value_t = 6)]
    pub p_max: usize,

    #[arg(long, default_value_t = 12)]
    pub n_max: usize,

    /// Sampled windows for the empirical method.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Profile CSV written by `ca2d lyapunov`.
    #[arg(long, conflicts_with = "rule")]
    pub profile: Option<PathBuf>,

    /// Rule to profile exactly when no CSV is given.
    #[arg(long, required_unless_present = "profile")]
    pub rule: Option<String>,

    #[arg(long, default_value_t = 1)]
    pub k: u32,

    #[arg(long, default_value_t = 64)]
    pub n: usize,

    #[arg(long, default_value_t = 64)]
    pub angles: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub rule: RuleArgs,

    #[arg(long, default_value_t = 64)]
    pub n: usize,

    #[arg(long, default_value_t = 64)]
    pub angles: usize,

    #[arg(long, default_value_t = 6)]
    pub p_max: usize,

    #[arg(long, default_value_t = 8)]
    pub n_max: usize,

    /// Samples per angle for the sampled profile (table rules).
    #[arg(long, default_value_t = 64)]
    pub samples: usize,

    /// Sampled windows for the empirical entropy (table rules).
    #[arg(long, default_value_t = 20_000)]
    pub entropy_samples: usize,

    /// Plot-data CSV `theta,lambda_hat`; defaults to `<out>.plot.csv`.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}
