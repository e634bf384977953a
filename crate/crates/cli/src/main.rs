mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CommonArgs;

/// Genetic-programming classifier for imbalanced credit data.
#[derive(Parser, Debug)]
#[command(name = "imbagp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the multi-run protocol for one or more fitness functions and write result tables.
    Run(CommonArgs),
    /// Population-size sweep: mean best training fitness per generation for each size.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated population sizes [default: 100,200,300,400,500].
        #[arg(long, value_name = "a,b,c")]
        sizes: Option<String>,
    },
    /// Classify rows with a saved tree; prints metrics when labels are available.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Tree file in s-expression form.
    #[arg(long, value_name = "FILE")]
    pub tree: PathBuf,

    /// Feature file to classify (values used as-is).
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "dataset",
        required_unless_present = "dataset"
    )]
    pub data: Option<PathBuf>,

    /// Field delimiter for --data: comma, tab, semicolon, whitespace or a single character.
    #[arg(long, default_value = "comma")]
    pub delimiter: String,

    /// --data starts with a header row.
    #[arg(long)]
    pub header: bool,

    /// 0-based label column in --data; enables metrics.
    #[arg(long, requires = "minority_value")]
    pub label_column: Option<usize>,

    /// Label value of the minority class in --data.
    #[arg(long)]
    pub minority_value: Option<String>,

    /// Classify the test split of this dataset profile instead of --data.
    #[arg(long, value_name = "PROFILE")]
    pub dataset: Option<PathBuf>,

    /// Split seed for --dataset (the run seed printed in runs.csv).
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,

    /// Print only the metrics, not one label per row.
    #[arg(long)]
    pub quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(&args),
        Command::Sweep { common, sizes } => commands::sweep(&common, sizes.as_deref()),
        Command::Predict(args) => commands::predict(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
