use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use covert_isac_harness::beampattern::beampattern_csv;
use covert_isac_harness::config::load_config;
use covert_isac_harness::output::{to_csv, to_json};
use covert_isac_harness::{
    emit_beampattern, run_experiment, BaseConfig, BeampatternSpec, ExperimentSpec, HarnessError,
    OutputFormat, Result, Scheme, SweepVar,
};

/// Run beamforming sweeps and write result tables.
#[derive(Debug, Parser)]
#[command(name = "covert-isac", version)]
struct Cli {
    /// key = value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// qos, eps, gamma, antennas, rfChains, carols or deltaSq.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values (clutter powers in dBW with --beampattern).
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated schemes: FDBF, HBF, ZF, MRT, TS, CommOnlyFD, CommOnlyHBF, RobustFDBF, RobustHBF.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; the table goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Record per-design wall-clock time (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    /// Emit receive beampatterns of single designs instead of a sweep.
    #[arg(long)]
    beampattern: bool,
}

fn list<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(f).collect()
}

fn number(s: &str) -> Result<f64> {
    s.parse().map_err(|_| HarnessError::Config(format!("bad number {s}")))
}

fn run(cli: Cli) -> Result<()> {
    let (base, file) = match &cli.config {
        Some(p) => load_config(p)?,
        None => (BaseConfig::default(), Default::default()),
    };
    let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
    let schemes = list(&pick(&cli.schemes, "schemes").unwrap_or_else(|| "FDBF".into()), str::parse::<Scheme>)?;
    let values = pick(&cli.values, "values").map(|v| list(&v, number)).transpose()?;
    let seed = match (cli.seed, file.get("seed")) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(|_| HarnessError::Config(format!("bad seed {s}")))?,
        (None, None) => 0,
    };
    let output = cli.out.clone().or_else(|| file.get("out").map(PathBuf::from));

    if cli.beampattern {
        let spec = BeampatternSpec { base, schemes, clutter_powers_db: values.unwrap_or_default(), seed, output };
        let rows = emit_beampattern(&spec)?;
        if spec.output.is_none() {
            print!("{}", beampattern_csv(&rows));
        }
        return Ok(());
    }

    let sweep: SweepVar = pick(&cli.sweep, "sweep")
        .ok_or_else(|| HarnessError::Config("--sweep is required".into()))?
        .parse()?;
    let trials = match (cli.trials, file.get("trials")) {
        (Some(t), _) => t,
        (None, Some(t)) => t.parse().map_err(|_| HarnessError::Config(format!("bad trials {t}")))?,
        (None, None) => 20,
    };
    let format: OutputFormat = pick(&cli.format, "format").unwrap_or_else(|| "csv".into()).parse()?;
    let spec = ExperimentSpec {
        sweep,
        values: values.ok_or_else(|| HarnessError::Config("--values is required".into()))?,
        schemes,
        trials,
        base,
        seed,
        output,
        format,
        timing: cli.timing,
    };
    let rows = run_experiment(&spec)?;
    if spec.output.is_none() {
        match format {
            OutputFormat::Csv => print!("{}", to_csv(&rows)?),
            OutputFormat::Json => println!("{}", to_json(&rows)?),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
