use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use ptspike::config::{self, RunConfig};
use ptspike::experiment;
use ptspike::metrics::{self, ReportFormat};
use ptspike::Error;

/// Single-spike temporal classifier for MNIST-style IDX data.
#[derive(Debug, Parser)]
#[command(name = "ptspike", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a weight matrix and write it with per-epoch statistics.
    Train(Common),
    /// Evaluate saved weights with first-spike (Fire&Cut) readout.
    Eval(Common),
    /// Dump the spike train of one image as CSV.
    Encode(Common),
    /// Print the derived network structure.
    Info(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// IDX image file.
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Weight file (written by train, read by eval).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Output directory (train, eval) or CSV file (encode; stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Image index for encode.
    #[arg(long, default_value_t = 0)]
    index: usize,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn required(value: &Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
    value
        .clone()
        .ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let text = match &common.config {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let loaded = config::parse_config(text.as_deref(), &common.set)?;
    for w in &loaded.warnings {
        warn!("{w}");
    }
    for line in loaded.config.to_text().lines() {
        info!("config: {line}");
    }
    Ok(loaded.config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Info(common) => {
            let cfg = load_config(&common)?;
            println!("{}", experiment::info(&cfg)?);
        }
        Command::Encode(common) => {
            let cfg = load_config(&common)?;
            let images = required(&common.images, "images")?;
            let train = experiment::encode_one(&cfg, &images, common.index)?;
            match &common.out {
                Some(path) => fs::write(path, train.to_csv())
                    .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?,
                None => print!("{}", train.to_csv()),
            }
        }
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            let images = required(&common.images, "images")?;
            let labels = required(&common.labels, "labels")?;
            let weights = required(&common.weights, "weights")?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let run = experiment::run_train(&cfg, &images, &labels, &weights, &out, |e, s| {
                info!(
                    "epoch {:>3}: {} images, {} false fire, {} false missing, {} updates, train acc {:.4}",
                    e + 1,
                    s.images,
                    s.false_fire,
                    s.false_missing,
                    s.updates,
                    s.train_acc()
                );
            })?;
            let last = run.epochs.last().map_or(0.0, |s| s.train_acc());
            println!("trained {} epochs, final train acc {:.4}", run.epochs.len(), last);
            println!("weights written to {}", weights.display());
        }
        Command::Eval(common) => {
            let cfg = load_config(&common)?;
            let images = required(&common.images, "images")?;
            let labels = required(&common.labels, "labels")?;
            let weights = required(&common.weights, "weights")?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let run = experiment::run_eval(&cfg, &weights, &images, &labels, &out)?;
            let s = run.summary;
            println!("images          {}", s.images);
            println!("accuracy        {:.4}", s.accuracy());
            println!("strict accuracy {:.4}", s.strict_accuracy());
            println!("fallback rate   {:.4}", s.fallback_rate());
            print!("{}", metrics::report(&run.counters, &cfg.energy_model()?, ReportFormat::Text));
            println!(
                "pe_cycles               {}",
                metrics::pe_cycles(run.counters.weighting_ops, cfg.multipliers)?
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
