use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wva_bench::config::ExperimentConfig;
use wva_bench::error::{BenchError, ConfigError};
use wva_bench::fisher_run::run_fisher;
use wva_bench::output::{dump_trials, emit_rows, jsonl_string, Format, Rows};
use wva_bench::runner::{run_experiment, sweep, RunOptions};

/// Monte Carlo benchmarks for weak-value amplification versus full-data estimation.
#[derive(Parser)]
#[command(name = "wva-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base config and report the three estimators.
    Estimate(RunArgs),
    /// Run the base config and report the likelihood-ratio detection row.
    Detect(RunArgs),
    /// Fisher-information decomposition for the [fisher] section (JSON lines).
    Fisher(RunArgs),
    /// One run per value of the [sweep] section.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Per-trial records as JSON lines.
    #[arg(long)]
    dump_trials: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, Format), ConfigError> {
        let mut config = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.run.trials = trials;
        }
        let format = self.format.parse().map_err(|e| ConfigError::new("--format", e))?;
        Ok((config, format))
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let (command, args) = match &cli.command {
        Command::Estimate(a) => ("estimate", a),
        Command::Detect(a) => ("detect", a),
        Command::Fisher(a) => ("fisher", a),
        Command::Sweep(a) => ("sweep", a),
    };
    let (config, format) = args.load()?;
    let out = args.out.as_deref();

    if command == "fisher" {
        if format != Format::Jsonl {
            return Err(ConfigError::new("--format", "fisher output is jsonl only").into());
        }
        let records = run_fisher(&config)?;
        write_out(&jsonl_string(&records), out)?;
        return Ok(());
    }

    let opts = RunOptions {
        threads: None,
        keep_trials: args.dump_trials.is_some(),
    };
    let (results, rows) = match command {
        "estimate" => (vec![run_experiment(&config, &opts)?], Rows::Estimators),
        "detect" => (vec![run_experiment(&config, &opts)?], Rows::Detection),
        _ => (sweep(&config, &opts)?, Rows::All),
    };
    for r in &results {
        log::info!("point {:?}: {} trials in {:.2?}", r.sweep_value, r.trials, r.wall_time);
    }
    emit_rows(&results, format, rows, out)?;
    if let Some(path) = &args.dump_trials {
        dump_trials(&results, path)?;
    }
    Ok(())
}

fn write_out(text: &str, path: Option<&std::path::Path>) -> std::io::Result<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
