//! `brl` binary: train, eval, matrix and export subcommands.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use brl_cli::{
    noise_from_flags, run_eval, run_export, run_matrix, run_train, scenario_set, CliError,
    EvalArgs, ExportArgs, MatrixArgs, TrainArgs, MATRIX_NOISE_BLOBS, MATRIX_NOISE_FLIP,
};

#[derive(Parser)]
#[command(
    name = "brl",
    version,
    about = "Mixture RL lane-following agent: training, evaluation and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its checkpoint and training log.
    Train {
        /// TOML configuration file (defaults apply when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed for all randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-pixel class-flip probability of the input corruption.
        #[arg(long = "noise-flip", default_value_t = 0.0)]
        noise_flip: f64,
        /// Expected spurious object blobs per frame.
        #[arg(long = "noise-blobs", default_value_t = 0.0)]
        noise_blobs: f64,
        /// Scenario set: straight, right, left or all.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// Output directory.
        #[arg(long, default_value = "out/train")]
        out: PathBuf,
        /// Reduced step budget for smoke runs.
        #[arg(long)]
        quick: bool,
    },
    /// Deploy a checkpoint greedily and write metrics and exports.
    Eval {
        /// Checkpoint produced by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long, default_value_t = 9)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "noise-flip", default_value_t = 0.0)]
        noise_flip: f64,
        #[arg(long = "noise-blobs", default_value_t = 0.0)]
        noise_blobs: f64,
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, default_value = "out/eval")]
        out: PathBuf,
    },
    /// Run the 2x2 ground-truth/estimated input experiment.
    Matrix {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Models trained per input type.
        #[arg(long, default_value_t = 9)]
        models: usize,
        /// Evaluation episodes per cell and model.
        #[arg(long, default_value_t = 9)]
        episodes: usize,
        /// Corruption level of the estimated-input arm.
        #[arg(long = "noise-flip", default_value_t = MATRIX_NOISE_FLIP)]
        noise_flip: f64,
        #[arg(long = "noise-blobs", default_value_t = MATRIX_NOISE_BLOBS)]
        noise_blobs: f64,
        #[arg(long, default_value = "out/matrix")]
        out: PathBuf,
        #[arg(long)]
        quick: bool,
    },
    /// Convert a saved records.json into steps.csv and summary.json.
    Export {
        /// records.json produced by `eval`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "out/export")]
        out: PathBuf,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            config,
            seed,
            noise_flip,
            noise_blobs,
            scenario,
            out,
            quick,
        } => {
            let args = TrainArgs {
                config,
                seed,
                noise: noise_from_flags(noise_flip, noise_blobs)?,
                scenarios: scenario_set(&scenario)?,
                out,
                quick,
            };
            let output = run_train(&args)?;
            println!(
                "trained {} steps ({} components, mean reward {:.3})",
                output.steps, output.n_components, output.mean_reward
            );
            println!("checkpoint: {}", output.checkpoint_path.display());
            println!("training log: {}", output.log_csv_path.display());
            Ok(())
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            noise_flip,
            noise_blobs,
            scenario,
            out,
        } => {
            let args = EvalArgs {
                checkpoint,
                episodes,
                seed,
                noise: noise_from_flags(noise_flip, noise_blobs)?,
                scenarios: scenario_set(&scenario)?,
                out,
            };
            let output = run_eval(&args)?;
            let s = output.summary.summary;
            println!(
                "score {:.3} | either {:.1}% success {:.1}% no-collision {:.1}% | dist {:.0} m",
                s.score,
                100.0 * s.either,
                100.0 * s.success,
                100.0 * s.no_collision,
                s.dist
            );
            println!("summary: {}", output.summary_path.display());
            Ok(())
        }
        Command::Matrix {
            config,
            seed,
            models,
            episodes,
            noise_flip,
            noise_blobs,
            out,
            quick,
        } => {
            let noise = noise_from_flags(noise_flip, noise_blobs)?.ok_or_else(|| {
                CliError::Usage("matrix needs a non-zero corruption level".into())
            })?;
            let args = MatrixArgs {
                config,
                seed,
                models,
                episodes,
                noise,
                out: out.clone(),
                quick,
            };
            let report = run_matrix(&args)?;
            for (name, cell) in [
                ("TGDG", &report.tgdg),
                ("TGDE", &report.tgde),
                ("TEDG", &report.tedg),
                ("TEDE", &report.tede),
            ] {
                println!(
                    "{name}: score {:.3} (+-{:.3}) dist {:.0} m (best {:.3})",
                    cell.mean_score, cell.std_score, cell.mean_dist, cell.best.score
                );
            }
            println!("report: {}", out.join("matrix.json").display());
            Ok(())
        }
        Command::Export { records, out } => {
            let summary = run_export(&ExportArgs {
                records,
                out: out.clone(),
            })?;
            println!(
                "exported {:.2} km of driving (score {:.3})",
                summary.infractions.total_km, summary.summary.score
            );
            println!("csv: {}", out.join("steps.csv").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
