use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mimo_core::scenario::{
    build_network, emit_results, parse_scenario, run_monte_carlo, write_channels_csv, write_pattern_csv, OutputFormat,
    RunOptions, ScenarioConfig, ScenarioError,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Monte-Carlo MIMO network simulation driven by a JSON scenario file.
#[derive(Debug, Parser)]
#[command(name = "mimo-sim", version)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides `run.trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `run.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Dump every forward channel realization to this CSV file.
    #[arg(long)]
    emit_channels: Option<PathBuf>,
    /// Write azimuth/elevation pattern cuts of this device's array.
    #[arg(long)]
    pattern_cut: Option<String>,
    /// Pattern destination; defaults to `<device>-pattern.csv`.
    #[arg(long, requires = "pattern_cut")]
    pattern_output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>, ScenarioError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| ScenarioError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_pattern(cfg: &ScenarioConfig, device: &str, path: &Path) -> Result<(), ScenarioError> {
    let net = build_network(cfg)?;
    let dev = net
        .device(device)
        .map_err(|_| ScenarioError::Config(format!("--pattern-cut: unknown device {device:?}")))?;
    let array = match (dev.transmitter(), dev.receiver()) {
        (Some(tx), _) => tx.array(),
        (None, Some(rx)) => rx.array(),
        (None, None) => unreachable!("every device transmits or receives"),
    };
    write_pattern_csv(array, create(path)?)
}

fn run(cli: &Cli) -> Result<(), ScenarioError> {
    let text = std::fs::read_to_string(&cli.scenario)
        .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", cli.scenario.display())))?;
    let cfg = parse_scenario(&text)?;

    if let Some(device) = &cli.pattern_cut {
        let path = cli
            .pattern_output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{device}-pattern.csv")));
        write_pattern(&cfg, device, &path)?;
    }

    let options = RunOptions {
        trials: cli.trials,
        master_seed: cli.seed,
        collect_channels: cli.emit_channels.is_some(),
    };
    let out = run_monte_carlo(&cfg, options)?;
    if let Some(path) = &cli.emit_channels {
        write_channels_csv(&out.channels, create(path)?)?;
    }
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    emit_results(&out.records, format, cli.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mimo-sim: {e}");
            match e {
                ScenarioError::Config(_) => ExitCode::from(2),
                ScenarioError::Runtime { .. } | ScenarioError::Io(_) => ExitCode::from(3),
            }
        }
    }
}
