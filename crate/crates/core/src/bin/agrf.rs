//! Command-line front end: fit, predict, eval, datagen, reproduce.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agrf_core::io::commands;

#[derive(Parser)]
#[command(
    name = "agrf",
    version,
    about = "Gaussian random field regression over function and derivative observations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit hyperparameters to an observation file and save the model.
    Fit {
        /// Observation CSV (header: order,x,value).
        #[arg(long)]
        data: PathBuf,
        /// TOML run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output model file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict posterior curves from a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Prediction grid, lo:hi:count.
        #[arg(long, default_value = "0:1:201")]
        grid: String,
        /// Comma-separated derivative orders.
        #[arg(long, default_value = "0")]
        orders: String,
        /// Output prediction CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative L2 error of a prediction file against a truth file.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Optional output CSV (order,rle).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate observation (and truth) files for a benchmark problem.
    Datagen {
        /// composite | oscillator | kdv | burgers
        example: String,
        /// Composite case 1..=4 (composite only; default 4).
        #[arg(long)]
        case: Option<u8>,
        /// Noise fraction, e.g. 0.1 for 10% noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output observation CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional truth CSV on a uniform grid.
        #[arg(long)]
        truth_out: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        truth_points: usize,
    },
    /// Reproduce one benchmark experiment variant into a report directory.
    Reproduce {
        /// composite | oscillator | kdv | burgers
        example: String,
        /// Variant: case1..case4, gp|gek|agrf, noise10|noise20|noise40,
        /// no-delta|one-delta|multi-delta.
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the number of optimizer restarts.
        #[arg(long)]
        restarts: Option<usize>,
        /// Override the evaluation budget per restart.
        #[arg(long)]
        max_evals: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit { data, config, out } => commands::cmd_fit(&data, config.as_deref(), &out),
        Command::Predict {
            model,
            grid,
            orders,
            out,
        } => commands::cmd_predict(&model, &grid, &orders, &out),
        Command::Eval { pred, truth, out } => commands::cmd_eval(&pred, &truth, out.as_deref()),
        Command::Datagen {
            example,
            case,
            noise,
            seed,
            out,
            truth_out,
            truth_points,
        } => commands::cmd_datagen(
            &example,
            case,
            noise,
            seed,
            &out,
            truth_out.as_deref(),
            truth_points,
        ),
        Command::Reproduce {
            example,
            variant,
            seed,
            out,
            restarts,
            max_evals,
        } => commands::cmd_reproduce(&example, &variant, seed, &out, restarts, max_evals),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
