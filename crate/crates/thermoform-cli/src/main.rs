//! `thermoform`: reproducible experiment runner for the thermoform
//! library.  One self-describing JSON input file per run; flags only
//! override tolerances, seed, threads, and artifact destinations.
//!
//! Exit codes: 0 success, 2 bad input or domain rejection, 1 internal
//! failure.

mod commands;
mod errors;
mod input;
mod output;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use errors::CliError;
use thermoform::Tolerances;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Pressure,
    Equilibrium,
    Levelset,
    Spectrum,
    BirkhoffRange,
    CarpetDim,
    MeasureDim,
    OracleCompare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Equilibrium => "equilibrium",
            Command::Levelset => "levelset",
            Command::Spectrum => "spectrum",
            Command::BirkhoffRange => "birkhoff-range",
            Command::CarpetDim => "carpet-dim",
            Command::MeasureDim => "measure-dim",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

/// Thermodynamic formalism on subshifts of finite type: pressure,
/// equilibrium states, Birkhoff level sets, and the Hausdorff dimension
/// of self-affine carpets.
#[derive(Parser)]
#[command(name = "thermoform", version)]
struct Cli {
    /// Computation to run.
    #[arg(value_enum)]
    command: Command,

    /// Self-describing JSON input file (system plus command parameters).
    input: PathBuf,

    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Write the CSV artifact (spectrum points or carpet trace) here.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Seed for stochastic components; recorded in certificates.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads: a positive number, or `auto` for the default.
    #[arg(long, default_value = "auto")]
    threads: String,

    /// Override a tolerance, e.g. `--tol beta_root=1e-12`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(&cli) {
        log::error!("{}", e.message());
        if let CliError::Domain { message, witness } = &e {
            // Domain rejections still produce a report so the caller gets
            // the witness objects (e.g. extremal cycles) machine-readably.
            let mut report = json!({
                "command": cli.command.name(),
                "error": { "kind": "domain", "message": message },
            });
            if let Some((key, v)) = witness {
                report["error"][*key] = v.clone();
            }
            let _ = output::write_report(report, cli.output.as_deref());
        }
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let tol = tolerances(&cli.tol)?;
    threads(&cli.threads)?;
    let described: Vec<String> = tol
        .describe()
        .iter()
        .map(|(name, v)| format!("{name}={v:e}"))
        .collect();
    log::info!(
        "seed {}; threads {}; tolerances {}",
        cli.seed,
        cli.threads,
        described.join(" ")
    );

    let root = input::load(&cli.input)?;
    let (mut report, csv) = match cli.command {
        Command::Pressure => commands::pressure(&root, &tol)?,
        Command::Equilibrium => commands::equilibrium_cmd(&root, &tol)?,
        Command::Levelset => commands::levelset(&root, &tol)?,
        Command::Spectrum => commands::spectrum(&root, &tol)?,
        Command::BirkhoffRange => commands::birkhoff_range_cmd(&root, &tol)?,
        Command::CarpetDim => commands::carpet_dim(&root, &tol)?,
        Command::MeasureDim => commands::measure_dim(&root, &tol)?,
        Command::OracleCompare => commands::oracle_compare(&root, cli.seed, &tol)?,
    };
    report
        .as_object_mut()
        .expect("report payloads are objects")
        .insert("command".into(), Value::String(cli.command.name().into()));
    output::write_report(report, cli.output.as_deref())?;

    match (csv, &cli.csv) {
        (Some(data), Some(path)) => output::write_csv(&data, path)?,
        (Some(data), None) => {
            log::info!(
                "{} CSV rows available; pass --csv to write them",
                data.rows.len()
            );
        }
        (None, Some(_)) => {
            log::warn!(
                "`{}` produces no CSV artifact; --csv ignored",
                cli.command.name()
            );
        }
        (None, None) => {}
    }
    Ok(())
}

fn tolerances(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for entry in overrides {
        let (name, value) = entry.split_once('=').ok_or_else(|| {
            CliError::Input(format!("tolerance override `{entry}` is not NAME=VALUE"))
        })?;
        let name = name.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| CliError::Input(format!("tolerance `{name}`: bad value: {e}")))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Input(format!(
                "tolerance `{name}` must be positive and finite"
            )));
        }
        tol.set(name, value).map_err(CliError::Input)?;
    }
    Ok(tol)
}

fn threads(request: &str) -> Result<(), CliError> {
    if request == "auto" {
        return Ok(());
    }
    let n: usize = request.parse().map_err(|_| {
        CliError::Input(format!(
            "--threads takes a positive number or `auto`, got `{request}`"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("cannot size the worker pool: {e}")))
}
