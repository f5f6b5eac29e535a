use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpump::models::MODEL_KINDS;
use qpump_cli::commands::{self, CliError};
use qpump_cli::config::{parse_config, validate, Format, RunConfig};
use qpump_cli::output::Output;
use qpump_cli::selfcheck;

#[derive(Parser, Debug)]
#[command(name = "qpump", version, about = "Adiabatic quantum pump transport from frozen scattering matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Points of the time grid and of the T=0 noise grid.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the zero-temperature shot-noise integral.
    #[arg(long, global = true)]
    zero_t: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Currents, dissipation, entropy and noise currents, cycle charges.
    Transport,
    /// Global angle, line and fractional charges, winding numbers.
    Geometry,
    /// Johnson-Nyquist and shot noise per channel.
    Noise,
    /// Classical snowplow: partition table, charges, trajectories.
    Classical,
    /// Available model kinds.
    ModelsList,
    /// Runs the invariant suite; nonzero exit on any violation.
    Selfcheck,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.grid {
        cfg.quadrature.time_points = n;
        cfg.quadrature.noise_points = n;
    }
    if let Some(t) = cli.temperature {
        cfg.thermal.temperature = t;
    }
    if let Some(mu) = cli.mu {
        cfg.thermal.mu = mu;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(format) = cli.format {
        cfg.outputs.format = format;
    }
    if let Some(path) = &cli.out {
        cfg.outputs.path = Some(path.display().to_string());
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn sink(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.outputs.path {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn models_list(cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = sink(cfg)?;
    match cfg.outputs.format {
        Format::Json => {
            let list: Vec<_> = MODEL_KINDS
                .iter()
                .map(|(kind, description)| serde_json::json!({ "kind": kind, "description": description }))
                .collect();
            serde_json::to_writer_pretty(&mut out, &list).map_err(io::Error::from)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["kind", "description"]).map_err(io::Error::from)?;
            for (kind, description) in MODEL_KINDS {
                w.write_record([kind, description]).map_err(io::Error::from)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn selfcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let results = selfcheck::run(cfg.seed);
    let mut out = sink(cfg)?;
    for r in &results {
        writeln!(out, "{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail)?;
    }
    out.flush()?;
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let output: Output = match cli.command {
        Command::Transport => commands::transport(&cfg)?,
        Command::Geometry => commands::geometry(&cfg)?,
        Command::Noise => commands::noise(&cfg, cli.zero_t)?,
        Command::Classical => commands::classical(&cfg)?,
        Command::ModelsList => return models_list(&cfg),
        Command::Selfcheck => return selfcheck(&cfg),
    };
    let mut out = sink(&cfg)?;
    output.write(cfg.outputs.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qpump: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
