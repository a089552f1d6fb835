use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use vertail::scenario::{self, RunOptions};
use vertail::{Record, ScenarioError, ScenarioFile};

/// Simulate a pneumatically driven vertebraic tail.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Directory searched for config files given as relative paths that do
    /// not exist in the working directory.
    #[arg(long, global = true, env = "VERTAIL_CONFIG_DIR")]
    config_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file, writing trajectory CSVs and a metrics file.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Merge metrics files (or directories of them) and fit trend lines.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Also write the merged table to `<out>/report.toml`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve(config: &Path, config_dir: Option<&Path>) -> PathBuf {
    match config_dir {
        Some(dir) if config.is_relative() && !config.exists() => dir.join(config),
        _ => config.to_path_buf(),
    }
}

fn format_value(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => format!("{f:.6}"),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn print_records(records: &[Record]) {
    for r in records {
        let line: Vec<String> = r
            .iter()
            .map(|(k, v)| format!("{k}={}", format_value(v)))
            .collect();
        println!("{}", line.join("  "));
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out, dt } => {
            let path = resolve(&config, cli.config_dir.as_deref());
            let file = ScenarioFile::load(&path)?;
            let summary = scenario::run_scenario(&file, &RunOptions { out_dir: out, dt })?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            if !cli.quiet {
                print_records(&summary.records);
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
            }
        }
        Command::Report { paths, out } => {
            let records = scenario::report(&paths)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                vertail::io::write_metrics(&dir.join("report.toml"), &records)?;
            }
            if !cli.quiet {
                print_records(&records);
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<ScenarioError>() {
        Some(e) if e.is_input_error() => (2, "config"),
        Some(_) => (3, "numerical"),
        None if err.downcast_ref::<vertail::IoError>().is_some() => (2, "config"),
        None => (1, "other"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, category) = exit_code(&err);
            let record = serde_json::json!({
                "error": category,
                "exit_code": code,
                "message": if code == 1 { format!("{err:#}") } else { err.to_string() },
            });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
