use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "svmenum", version, about = "Enumerate SVM models with distinct support sets in descending objective order")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the top-K models as JSON lines and print a summary table.
    Enumerate(EnumerateArgs),
    /// Choose C by k-fold cross-validation on the mean hinge loss.
    Cv(CvArgs),
    /// Compare exhaustive enumeration with brute force on random instances.
    Verify(VerifyArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Libsvm,
    Json,
}

/// Where and how to read a dataset.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training data file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Label column (CSV only).
    #[arg(long)]
    pub label: Option<String>,
    /// Label value mapped to +1 (CSV only); the other value maps to -1.
    #[arg(long)]
    pub positive: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Regularisation constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Kernel as JSON, e.g. '{"kind":"rbf","gamma":0.5}'.
    #[arg(long, default_value = r#"{"kind":"linear"}"#)]
    pub kernel: String,
    /// Number of models to emit.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,
    /// Test data in the same format; metrics use it instead of the training set.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Split the data randomly, keeping this fraction for training and the
    /// rest as the test set.
    #[arg(long, conflicts_with = "test")]
    pub train_fraction: Option<f64>,
    /// Binary sensitive column used for demographic parity.
    #[arg(long)]
    pub sensitive: Option<String>,
    /// Keep the sensitive column out of the training features.
    #[arg(long, requires = "sensitive")]
    pub exclude_sensitive: bool,
    /// Flip this many training labels among rows whose label differs from
    /// the sensitive attribute.
    #[arg(long, requires = "sensitive")]
    pub inject_flips: Option<usize>,
    /// JSON-lines output; defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for splitting and label injection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = r#"{"kind":"linear"}"#)]
    pub kernel: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated candidate values; defaults to 1e-2, 1e-1, ..., 1e3.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Examples per random instance.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..=12))]
    pub n: u64,
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative tolerance on objectives.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Pops the heap in ascending order; used to check that verify notices.
    #[arg(long, hide = true)]
    pub invert_order: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// Directory of UI assets served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Where datasets and session snapshots are stored.
    #[arg(long, default_value = "svmenum-data")]
    pub data_dir: PathBuf,
}
