//! `oglasses`: build datasets, train and evaluate classifiers, and scan
//! files for embedded x86 code.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oglasses_core::visualize::ImageFormat;
use oglasses_core::{Error, Method, DEFAULT_SEED};

/// Exit status for I/O failures (unreadable input, unwritable output).
pub const EXIT_IO: u8 = 3;
/// Exit status for inputs that parse but are invalid for the request.
pub const EXIT_INVALID: u8 = 4;
/// Exit status when training diverges.
pub const EXIT_DIVERGED: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "oglasses", version, about = "x86 code vs. non-code block classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Force single-threaded execution.
    #[arg(long, global = true)]
    deterministic: bool,

    /// More progress output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Only print errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample block and code datasets from a corpus manifest.
    BuildDataset(BuildArgs),
    /// Train a classifier, or cross-validate one with --kfold.
    Train(TrainArgs),
    /// Cross-validate a method, or evaluate a trained classifier.
    Eval(EvalArgs),
    /// Classify every offset of a file and render images.
    Scan(ScanArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Entropy,
    Mlp,
    Cnn,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Entropy => Method::Entropy,
            MethodArg::Mlp => Method::Mlp,
            MethodArg::Cnn => Method::Cnn,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Ppm,
    Png,
}

impl From<FormatArg> for ImageFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ppm => ImageFormat::Ppm,
            FormatArg::Png => ImageFormat::Png,
        }
    }
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Manifest: one `category<TAB>source<TAB>path` line per file.
    manifest: PathBuf,
    /// Output block dataset.
    #[arg(long)]
    block_out: PathBuf,
    /// Output code dataset.
    #[arg(long)]
    code_out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct TrainOpts {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f32,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training dataset (OGDS).
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Cnn)]
    method: MethodArg,
    /// Where to write the trained model (OGNN, or a range file for entropy).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Learning curve text: `epoch<TAB>train_err<TAB>test_err`.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Run k-fold cross-validation and print the report.
    #[arg(long)]
    kfold: Option<usize>,
    /// Per-epoch min/mean/max across folds (with --kfold).
    #[arg(long)]
    envelope: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Labeled dataset (OGDS).
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Cnn)]
    method: MethodArg,
    #[arg(long, default_value_t = 10)]
    kfold: usize,
    /// Evaluate this trained model instead of cross-validating.
    #[arg(long, conflicts_with = "range")]
    model: Option<PathBuf>,
    /// Evaluate this entropy range (`low--high`) instead of cross-validating.
    #[arg(long)]
    range: Option<String>,
    /// Also write the report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// File to scan.
    input: PathBuf,
    /// Trained model (OGNN) or entropy range file.
    #[arg(long, required_unless_present = "range", conflicts_with = "range")]
    model: Option<PathBuf>,
    /// Entropy range `low--high`.
    #[arg(long)]
    range: Option<String>,
    /// Expected method; checked against the model when given.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Classification overlay image.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Ppm)]
    format: FormatArg,
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Per-offset decisions as `offset<TAB>decision`.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also render a grayscale image here.
    #[arg(long)]
    grayscale: Option<PathBuf>,
    /// Also render a bit-class image here.
    #[arg(long)]
    bitimage: Option<PathBuf>,
    /// Also render a sliding-entropy image here.
    #[arg(long)]
    entropy_map: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Path { .. } => EXIT_IO,
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if cli.deterministic {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(1).build_global() {
            log::warn!("could not pin thread pool: {e}");
        }
    }
    let parallel = !cli.deterministic;
    let result = match cli.command {
        Command::BuildDataset(a) => commands::build_dataset(&a, parallel),
        Command::Train(a) => commands::train(&a, parallel),
        Command::Eval(a) => commands::eval(&a, parallel),
        Command::Scan(a) => commands::scan(&a, parallel),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oglasses: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
