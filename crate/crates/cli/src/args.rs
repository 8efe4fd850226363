use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "torus-split",
    version,
    about = "Laplacian eigenspaces on flat tori and their splitting under Gaussian potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Number of lattice vectors k in Z^n with |k|^2 = lambda.
    Multiplicity(LatticeArgs),
    /// Sorted non-negative solutions of a_1^2 + ... + a_n^2 = lambda.
    Representations(LatticeArgs),
    /// Distinct eigenvalues up to a bound, with multiplicities.
    Spectrum(SpectrumArgs),
    /// First-order splitting of one eigenspace.
    Split(SplitArgs),
    /// Compare first-order predictions with a truncated Galerkin operator.
    Oracle(OracleArgs),
    /// Reproduce the published reference matrices A, B, C, D, F and G.
    #[command(alias = "paper-repro")]
    Reference(ReferenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Pretty,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Diag {
    /// Drop the constant Fourier mode, so the diagonal is 0.
    Zero,
    /// Keep the constant mode, so the diagonal is 1.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fixture,
    Definition,
    Diff,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub lambda: u64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: TextFormat,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub max: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: TextFormat,
}

/// Potential and eigenspace selection shared by `split` and `oracle`.
#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// TOML file with flat keys; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Torus dimension; defaults to the number of weights.
    #[arg(long)]
    pub n: Option<usize>,
    /// Unperturbed eigenvalue |k|^2.
    #[arg(long)]
    pub lambda: Option<u64>,
    /// Comma-separated Gaussian weights, one per coordinate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Option<Vec<f64>>,
    /// Diagonal convention of the secular matrix.
    #[arg(long, value_enum)]
    pub diag: Option<Diag>,
    /// Allow every weight to be zero.
    #[arg(long)]
    pub formal: bool,
    /// Terms per coordinate when evaluating the potential in real space.
    #[arg(long)]
    pub eval_truncation: Option<u32>,
    /// Adjacent corrections closer than this are one cluster.
    #[arg(long)]
    pub gap_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Also compute second-order corrections for isolated branches.
    #[arg(long)]
    pub second_order: bool,
    /// Resolvent box half-width for second order.
    #[arg(long)]
    pub cutoff: Option<u32>,
    #[arg(long, value_enum, default_value = "pretty")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated couplings, strictly descending, each in [0, 1).
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Galerkin box half-width.
    #[arg(long)]
    pub cutoff: Option<u32>,
    /// Skip the repeat at cutoff + 2.
    #[arg(long)]
    pub no_cutoff_check: bool,
    /// Write `epsilon,branch_index,eigenvalue` rows to this file.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pretty")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long, value_enum, ignore_case = true, default_value = "all")]
    pub which: Which,
    #[arg(long, value_enum, default_value = "fixture")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "pretty")]
    pub format: ReportFormat,
}
