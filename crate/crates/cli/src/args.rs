use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "tnm",
    version,
    about = "Sample-size thresholds and MLE behaviour for tensor normal models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full classification report for one model and sample count.
    Classify(ClassifyArgs),
    /// Boundedness, existence and uniqueness thresholds for a model.
    Threshold(ThresholdArgs),
    /// Cross-check classifiers over a grid of data and write a CSV.
    Scan(ScanArgs),
    /// Draw standard normal samples and write them as JSON.
    Simulate(SimulateArgs),
    /// Fit simulated or given data and compare with the prediction.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Closed-form and recursive classifiers agree.
    Equivalence,
    /// The class does not drop when one sample is added.
    Monotone,
    /// A castle step keeps class, R, Delta, g_max and GIT dimension.
    Castling,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Equivalence => "equivalence",
            Check::Monotone => "monotone",
            Check::Castling => "castling",
        }
    }
}

fn positive_u64() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(1..)
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Comma-separated factor dimensions, e.g. 2,3,4.
    #[arg(long, required = true, value_delimiter = ',', value_parser = positive_u64())]
    pub dims: Vec<u64>,
    /// Number of samples m.
    #[arg(long, value_parser = positive_u64())]
    pub samples: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, required = true, value_delimiter = ',', value_parser = positive_u64())]
    pub dims: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Largest number of factors.
    #[arg(long, value_parser = positive_u64())]
    pub max_k: u64,
    /// Largest factor dimension.
    #[arg(long, value_parser = positive_u64())]
    pub max_dim: u64,
    /// Largest sample count.
    #[arg(long, value_parser = positive_u64())]
    pub max_m: u64,
    #[arg(long, value_enum, default_value_t = Check::Equivalence)]
    pub check: Check,
    /// Destination CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, value_parser = clap::value_parser!(usize))]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required = true, value_delimiter = ',', value_parser = positive_u64())]
    pub dims: Vec<u64>,
    #[arg(long, value_parser = positive_u64())]
    pub samples: u64,
    #[arg(long, env = "TNM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Destination JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Required unless --data is given.
    #[arg(long, value_delimiter = ',', value_parser = positive_u64())]
    pub dims: Option<Vec<u64>>,
    /// Required unless --data is given.
    #[arg(long, value_parser = positive_u64())]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(usize))]
    pub trials: usize,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(usize))]
    pub restarts: usize,
    #[arg(long, env = "TNM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fit this SampleSet file instead of simulating.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(usize))]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}
