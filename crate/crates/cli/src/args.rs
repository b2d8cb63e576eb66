use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Trace-distance security analysis of classical-quantum key ensembles.
#[derive(Debug, Parser)]
#[command(name = "tdsec", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Seed for the random built-in ensemble.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Override a setting, e.g. `--set solver.tol=1e-10`. Known names:
    /// solver.tol, solver.max_iter.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,

    /// Default solver tolerance, overridden by `--set solver.tol=...`.
    #[arg(long, global = true, env = "TDSEC_POVM_TOL", hide_env_values = true)]
    pub povm_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance `d` of an ensemble from an ideal key, with the joint-state cross-check.
    ComputeD(EnsembleArgs),
    /// Run a guessing attack on the whole key, a subset of bits, or with known plaintext.
    Attack(AttackArgs),
    /// Achieved attack performance next to every bound implied by `d`.
    Compare(EnsembleArgs),
    /// Evaluate the scalar bounds for a given `eps`.
    Bounds(BoundsArgs),
    /// Recompute the worked numbers for a 4000-bit key.
    Reproduce,
    /// Show one of the built-in counterexamples.
    Counterexample(CounterexampleArgs),
    /// Write an ensemble as JSON.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// Two-bit information-locking ensemble.
    Locking,
    /// Uniform key, every key sharing the maximally mixed state.
    Ideal,
    /// Biased classical key with no quantum side information.
    Biased,
    /// Random priors and states drawn from `--seed`.
    Random,
}

#[derive(Clone, Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, value_enum, conflicts_with = "input", required_unless_present = "input")]
    pub builtin: Option<Builtin>,

    /// Ensemble JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Key length for the ideal, biased and random built-ins.
    #[arg(long)]
    pub n_bits: Option<usize>,

    /// Hilbert-space dimension for the ideal and random built-ins.
    #[arg(long)]
    pub dim: Option<usize>,

    /// Bias of the biased built-in.
    #[arg(long)]
    pub eps: Option<f64>,

    /// Draw pure rather than mixed states for the random built-in.
    #[arg(long)]
    pub pure: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetKind {
    Whole,
    Subset,
    Kpa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Map,
    Pgm,
    Iterative,
    PerBit,
    Helstrom,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    #[arg(long, value_enum, default_value_t = TargetKind::Whole)]
    pub target: TargetKind,

    /// Target bit positions (0 is the leftmost key bit), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub positions: Vec<usize>,

    /// Known bit positions for `--target kpa`.
    #[arg(long, value_delimiter = ',')]
    pub known: Vec<usize>,

    /// Values of the known bits, e.g. `10`.
    #[arg(long)]
    pub values: Option<String>,

    #[arg(long, value_enum, default_value_t = MethodArg::Iterative)]
    pub method: MethodArg,

    /// Write the measurement used as POVM JSON.
    #[arg(long)]
    pub povm_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub eps: f64,

    /// Number of Markov applications for the failure budget.
    #[arg(long, default_value_t = 2)]
    pub uses: u32,

    /// Key length for the guessing-probability bound.
    #[arg(long, default_value_t = 4000)]
    pub n_bits: u32,

    /// Key length for the entropy lower bound; the row is omitted without it.
    #[arg(long)]
    pub entropy_n: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CounterexampleName {
    Locking,
    Biased,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(value_enum)]
    pub name: CounterexampleName,

    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,

    #[arg(long, default_value_t = 10)]
    pub n_bits: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
