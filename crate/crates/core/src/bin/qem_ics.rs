//! Experiment CLI: runs configured experiments, fits power laws on their
//! CSV output, and dumps sampled training circuits.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use qem_ics::circuit::CircuitFrame;
use qem_ics::harness::{fit_power_law, rng_for, run_experiment, ExperimentConfig};
use qem_ics::ics::{self, default_burn_in, default_proposal, SlotPattern};
use qem_ics::{Error, Result};

#[derive(Parser)]
#[command(name = "qem-ics", version, about = "Importance Clifford sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algorithm {
    Nonuniform,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Fit a power law through two columns of a results CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Column used as x.
        #[arg(long)]
        x: String,
        /// Column used as y.
        #[arg(long)]
        y: String,
    },
    /// Sample error-sensitive circuits for a frame and write them as
    /// JSON lines (circuit, w, f, weight_factor).
    Sample {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Slots resampled per Metropolis proposal (uniform algorithm).
        #[arg(long)]
        resample_slots: Option<usize>,
        /// Chain burn-in steps (uniform algorithm); default 10x slot count.
        #[arg(long)]
        burn_in: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_)
                | Error::InvalidParameter(_) | Error::OutOfRange(_)
                | Error::DimensionMismatch(_) => 2,
                _ => 3,
            };
            std::process::exit(code);
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out, workers } => {
            let text = std::fs::read_to_string(&config)?;
            let mut config = ExperimentConfig::from_json(&text)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(out) = out {
                config.output_path = out;
            }
            let summary = run_experiment(&config, workers)?;
            for file in &summary.files {
                println!("{}", file.display());
            }
            Ok(())
        }
        Command::Fit { input, x, y } => {
            let points = read_csv_columns(&input, &x, &y)?;
            let fit = fit_power_law(&points)?;
            println!(
                "{}",
                serde_json::json!({
                    "exponent": fit.exponent,
                    "prefactor": fit.prefactor,
                    "r_squared": fit.r_squared,
                    "points": fit.points.len(),
                })
            );
            Ok(())
        }
        Command::Sample { frame, algorithm, count, seed, out, resample_slots, burn_in } => {
            let text = std::fs::read_to_string(&frame)?;
            let frame = std::sync::Arc::new(CircuitFrame::from_json(&text)?);
            let mut rng = rng_for(seed, 0);
            let samples = match algorithm {
                Algorithm::Nonuniform => ics::sample_nonuniform(&frame, count, &mut rng)?,
                Algorithm::Uniform => {
                    let free = frame.slot_count() - frame.n();
                    let m = resample_slots.unwrap_or_else(|| (free / 8).clamp(1, free.max(1)));
                    let proposal = default_proposal(&frame, m)?;
                    let initial = SlotPattern::random(&frame, &mut rng);
                    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(&frame));
                    ics::sample_uniform(&frame, count, &proposal, &initial, burn_in, &mut rng)?
                        .samples
                }
            };
            let mut lines = String::new();
            for sample in &samples {
                let circuit: serde_json::Value =
                    serde_json::from_str(&sample.circuit.to_json())?;
                let line = serde_json::json!({
                    "circuit": circuit,
                    "w": sample.weight,
                    "f": sample.f,
                    "weight_factor": sample.weight_factor,
                });
                lines.push_str(&line.to_string());
                lines.push('\n');
            }
            match out {
                Some(path) => std::fs::write(path, lines)?,
                None => print!("{lines}"),
            }
            Ok(())
        }
    }
}

fn read_csv_columns(path: &PathBuf, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let x_idx = headers
        .iter()
        .position(|h| h == x)
        .ok_or_else(|| Error::Config(format!("column {x:?} not found")))?;
    let y_idx = headers
        .iter()
        .position(|h| h == y)
        .ok_or_else(|| Error::Config(format!("column {y:?} not found")))?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let xv: f64 = match record.get(x_idx).map(str::parse) {
            Some(Ok(v)) => v,
            _ => continue,
        };
        let yv: f64 = match record.get(y_idx).map(str::parse) {
            Some(Ok(v)) => v,
            _ => continue,
        };
        if xv.is_finite() && yv.is_finite() {
            points.push((xv, yv));
        }
    }
    Ok(points)
}
