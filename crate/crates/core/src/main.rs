use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bwls::experiments::{
    emit_report, render_table, run_design_job, run_experiment, run_point_location_study, run_stability_study,
    DesignJob, ExperimentConfig, PointsConfig, ReportFormat, StabilityConfig,
};

#[derive(Parser)]
#[command(name = "bwls", version, about = "Boosted optimal weighted least-squares experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the root seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Error tables for one example.
    Experiment(Common),
    /// Z samples per method.
    Stability(Common),
    /// Sorted point locations over replicates.
    Points(Common),
    /// A single design (SampleSet).
    Design(Common),
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad configuration {}: {e}", path.display()))
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), String> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Experiment(c) => {
            let mut cfg: ExperimentConfig = read_config(&c.config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            let result = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let format = match c.format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            match c.out.or_else(|| cfg.output.clone()) {
                Some(path) => {
                    let written = emit_report(&result, &path, format).map_err(|e| e.to_string())?;
                    for p in written {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => {
                    let bytes = match format {
                        ReportFormat::Csv => {
                            let mut buf = Vec::new();
                            bwls::experiments::write_cells_csv(&result.cells, &mut buf).map_err(|e| e.to_string())?;
                            eprint!("{}", render_table(&result));
                            buf
                        }
                        ReportFormat::Json => serde_json::to_vec_pretty(&result).map_err(|e| e.to_string())?,
                    };
                    write_out(None, &bytes)?;
                }
            }
        }
        Command::Stability(c) => {
            let mut cfg: StabilityConfig = read_config(&c.config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let result = run_stability_study(&cfg).map_err(|e| e.to_string())?;
            let bytes = match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    result.write_csv(&mut buf).map_err(|e| e.to_string())?;
                    buf
                }
                Format::Json => serde_json::to_vec_pretty(&result).map_err(|e| e.to_string())?,
            };
            write_out(c.out.as_deref(), &bytes)?;
        }
        Command::Points(c) => {
            let mut cfg: PointsConfig = read_config(&c.config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let result = run_point_location_study(&cfg).map_err(|e| e.to_string())?;
            let bytes = match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    result.write_csv(&mut buf).map_err(|e| e.to_string())?;
                    buf
                }
                Format::Json => serde_json::to_vec_pretty(&result).map_err(|e| e.to_string())?,
            };
            write_out(c.out.as_deref(), &bytes)?;
        }
        Command::Design(c) => {
            let mut job: DesignJob = read_config(&c.config)?;
            if let Some(s) = c.seed {
                job.seed = s;
            }
            let sample = run_design_job(&job).map_err(|e| e.to_string())?;
            let bytes = match c.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    sample.write_csv(&mut buf).map_err(|e| e.to_string())?;
                    buf
                }
                Format::Json => sample.to_json().map_err(|e| e.to_string())?.into_bytes(),
            };
            write_out(c.out.as_deref(), &bytes)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("bwls: {msg}");
            ExitCode::from(2)
        }
    }
}
