use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use vimsim::config::OutputFormat;
use vimsim::{CliError, RunOptions};
use vimsim_core::fitting::DatasetKind;
use vimsim_core::ModelFamily;

#[derive(Parser)]
#[command(name = "vimsim", version, about = "Variable impedance module simulations, virtual rheometry and fits")]
struct Cli {
    /// Worker threads for sweeps and multi-temperature fits (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Override a config value by dotted path, e.g. protocol.temperature_c=100.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, env = "VIMSIM_OUT")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            overrides: self.set.clone(),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol in a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config once per value of a dotted key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: String,
        /// Comma-separated values, run and tabulated in this order.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Check a config and print every violation; writes nothing.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a model family to rheometer CSV files given as PATH@TEMP_C.
    Fit {
        #[arg(required = true, value_name = "PATH@TEMP_C")]
        data: Vec<String>,
        #[arg(long, default_value = "kelvin_voigt")]
        family: String,
        #[arg(long, default_value = "frequency_sweep")]
        kind: String,
        /// Optional config supplying geometry (needed for perturbation data).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn fit_config(data: &[String], family: &str, kind: &str, config: Option<&PathBuf>) -> Result<PathBuf, CliError> {
    let invalid = |m: String| CliError::Validation(vec![m]);
    let family: ModelFamily =
        serde_json::from_value(json!(family)).map_err(|_| invalid(format!("--family: unknown family `{family}`")))?;
    let kind: DatasetKind =
        serde_json::from_value(json!(kind)).map_err(|_| invalid(format!("--kind: unknown dataset kind `{kind}`")))?;
    let mut datasets = Vec::new();
    for d in data {
        let (path, t) = d
            .rsplit_once('@')
            .ok_or_else(|| invalid(format!("{d}: expected PATH@TEMP_C")))?;
        let t: f64 = t.parse().map_err(|_| invalid(format!("{d}: temperature `{t}` is not a number")))?;
        let path = std::fs::canonicalize(path).unwrap_or_else(|_| PathBuf::from(path));
        datasets.push(json!({"path": path, "temperature_c": t}));
    }
    let mut base = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: invalid JSON: {e}", p.display())))?
        }
        None => json!({"geometry": {}}),
    };
    base["protocol"] = json!({"name": "fit", "family": family, "kind": kind, "datasets": datasets});
    let dir = std::env::temp_dir().join(format!("vimsim-fit-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(e.into()))?;
    let file = dir.join("fit.json");
    std::fs::write(&file, base.to_string()).map_err(|e| CliError::Runtime(e.into()))?;
    Ok(file)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let (dir, _) = vimsim::run(&config, &common.options())?;
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, axis, values, common } => {
            let dir = vimsim::sweep(&config, &common.options(), &axis, &values)?;
            println!("wrote {}", dir.join("sweep.csv").display());
        }
        Command::Validate { config, common } => {
            let violations = vimsim::validate(&config, &common.options());
            if !violations.is_empty() {
                return Err(CliError::Validation(violations));
            }
            println!("{}: ok", config.display());
        }
        Command::Fit { data, family, kind, config, common } => {
            let file = fit_config(&data, &family, &kind, config.as_ref())?;
            let result = vimsim::run(&file, &common.options());
            let _ = std::fs::remove_dir_all(file.parent().expect("temp file has a parent"));
            let (dir, _) = result?;
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
