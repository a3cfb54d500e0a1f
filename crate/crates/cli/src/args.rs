use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pla_core::pla::{EvFormula, PlaMode};
use pla_core::simulate::Table;
use pla_core::{DispersionKind, NaPolicy};

#[derive(Debug, Parser)]
#[command(name = "pla", version, about = "Principal loading analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect blocks and report which variables can be discarded
    Analyze(AnalyzeArgs),
    /// Write the data without the variables recommended for discarding
    Discard(DiscardArgs),
    /// Finite-difference sensitivity of eigenvector entries to one variance
    Sensitivity(SensitivityArgs),
    /// Eigengap bound on eigenvector perturbations
    Bound(BoundArgs),
    /// Monte Carlo type I error of one scenario
    Simulate(SimulateArgs),
    /// Monte Carlo type I error over a table grid, as CSV
    ReproduceTable(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Covariance,
    Correlation,
    CovarianceRescaled,
    CorrelationRescaled,
}

impl From<ModeArg> for PlaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Covariance => PlaMode::Covariance,
            ModeArg::Correlation => PlaMode::Correlation,
            ModeArg::CovarianceRescaled => PlaMode::CovarianceRescaled,
            ModeArg::CorrelationRescaled => PlaMode::CorrelationRescaled,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormulaArg {
    Exact,
    Approx,
}

impl From<FormulaArg> for EvFormula {
    fn from(f: FormulaArg) -> Self {
        match f {
            FormulaArg::Exact => EvFormula::Exact,
            FormulaArg::Approx => EvFormula::Approx,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NaArg {
    Fail,
    DropRow,
}

impl From<NaArg> for NaPolicy {
    fn from(n: NaArg) -> Self {
        match n {
            NaArg::Fail => NaPolicy::Fail,
            NaArg::DropRow => NaPolicy::DropRow,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Covariance,
    Correlation,
}

impl From<KindArg> for DispersionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Covariance => DispersionKind::Covariance,
            KindArg::Correlation => DispersionKind::Correlation,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    SingleVars,
    OneBlock,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableArg {
    #[value(name = "I", alias = "i", alias = "1")]
    I,
    #[value(name = "II", alias = "ii", alias = "2")]
    II,
}

impl From<TableArg> for Table {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::I => Table::I,
            TableArg::II => Table::II,
        }
    }
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// First row holds data, not names
    #[arg(long)]
    pub no_header: bool,
    /// What to do with rows containing missing or non-numeric cells
    #[arg(long, value_enum, default_value_t = NaArg::Fail)]
    pub na_policy: NaArg,
}

#[derive(Debug, Args)]
pub struct PlaArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::CorrelationRescaled)]
    pub mode: ModeArg,
    /// Loadings with |value| > tau link a variable to an eigenvector
    #[arg(long, default_value_t = 0.6)]
    pub tau: f64,
    /// Blocks explaining at most this share of variance are discardable
    #[arg(long, default_value_t = 0.05)]
    pub ev_cutoff: f64,
    #[arg(long, value_enum, default_value_t = FormulaArg::Exact)]
    pub ev_formula: FormulaArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Data CSV, one column per variable
    #[arg(long, required_unless_present = "covariance")]
    pub input: Option<PathBuf>,
    /// Covariance matrix CSV instead of data
    #[arg(long, conflicts_with = "input")]
    pub covariance: Option<PathBuf>,
    /// Correlation matrix CSV accompanying --covariance
    #[arg(long, requires = "covariance")]
    pub correlation: Option<PathBuf>,
    #[command(flatten)]
    pub pla: PlaArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (standard output if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscardArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub pla: PlaArgs,
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Output CSV (standard output if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Covariance matrix CSV
    #[arg(long)]
    pub input: PathBuf,
    /// Variable whose variance is raised: name or 1-based index
    #[arg(long)]
    pub variable: String,
    /// Probe this eigenvector (1-based) instead of searching for one
    #[arg(long)]
    pub eigenvector: Option<usize>,
    /// Explicit increment grid, comma separated
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["max_increment", "steps"])]
    pub increments: Option<Vec<f64>>,
    /// Largest increment of an evenly spaced grid
    #[arg(long, default_value_t = 1.0)]
    pub max_increment: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Base matrix CSV
    #[arg(long)]
    pub input: PathBuf,
    /// Symmetric perturbation CSV
    #[arg(long)]
    pub delta: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Covariance)]
    pub kind: KindArg,
    #[arg(long)]
    pub tau: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub factor_rank: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub min_eigengap: Option<f64>,
    #[arg(long)]
    pub min_planted_correlation: Option<f64>,
    /// Cross-block covariance magnitude
    #[arg(long, default_value_t = 0.0)]
    pub epsilon_scale: f64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Monte Carlo iterations
    #[arg(long = "S", default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::SingleVars)]
    pub scenario: ScenarioArg,
    #[arg(long = "M")]
    pub m: usize,
    /// Planted variables (k) or block size (kappa)
    #[arg(long, alias = "kappa")]
    pub k: usize,
    #[arg(long = "N")]
    pub n: usize,
    /// One or more thresholds, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub tau: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::CorrelationRescaled)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub table: TableArg,
    /// M values (the full grid if omitted)
    #[arg(long = "M", value_delimiter = ',')]
    pub m: Vec<usize>,
    /// k or kappa values
    #[arg(long, alias = "kappa", value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Sample sizes
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::CorrelationRescaled)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// CSV output (standard output if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a JSON run manifest here
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
