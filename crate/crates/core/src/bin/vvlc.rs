use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use vvlc_sim::geometry::GeometryBackend;
use vvlc_sim::optics::LensGainMode;
use vvlc_sim::scenario_io::{self, ScenarioConfig, SweepSpec, SweepVariable, SWEEP_COLUMNS};
use vvlc_sim::Error;

/// Vehicular visible-light MISO channel simulator.
#[derive(Parser)]
#[command(name = "vvlc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file; the paper-table preset is used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `paper` or `oracle`.
    #[arg(long)]
    geometry_backend: Option<GeometryBackend>,
    /// `paper-form` or `constant-cpc`.
    #[arg(long)]
    lens_mode: Option<LensGainMode>,
}

#[derive(Args)]
struct Sweep {
    /// Comma-separated values; distance sweeps walk the trajectory when omitted.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Link length for k, alpha0 and mode-number sweeps (m).
    #[arg(long, default_value_t = scenario_io::REFERENCE_DISTANCE)]
    distance: f64,
    /// Comma-separated subset of output columns.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Received power along the trajectory (or at given distances).
    LosSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// SB power versus k, alpha0, mode number or distance.
    SbSweep {
        #[command(flatten)]
        common: Common,
        /// distance, k, alpha0 or mode_number.
        #[arg(long, default_value = "k")]
        variable: SweepVariable,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// Noise breakdown and SNR along the trajectory.
    SnrSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: Sweep,
    },
    /// The scenario against its planar reduction.
    #[command(name = "compare-2d3d")]
    Compare2d3d {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form versus oracle discrepancy report.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the scenario (preset or file) in the configuration format.
    EmitPreset {
        #[command(flatten)]
        common: Common,
    },
}

fn load(c: &Common) -> vvlc_sim::Result<ScenarioConfig> {
    let mut scn = match &c.scenario {
        Some(p) => scenario_io::load_scenario(p)?,
        None => scenario_io::paper_table(),
    };
    if let Some(s) = c.seed {
        scn.seed = s;
    }
    if let Some(b) = c.geometry_backend {
        scn.backend = b;
    }
    if let Some(m) = c.lens_mode {
        scn.receiver.lens_gain_mode = m;
    }
    scn.validate()?;
    Ok(scn)
}

fn snr_columns(requested: Vec<String>) -> Vec<String> {
    if !requested.is_empty() {
        return requested;
    }
    ["value", "time_s", "distance_m", "total_w"]
        .into_iter()
        .chain(SWEEP_COLUMNS.iter().copied().filter(|c| c.ends_with("_a2") || c.starts_with("snr")))
        .map(String::from)
        .collect()
}

fn run(cli: Cli) -> vvlc_sim::Result<(String, Option<PathBuf>)> {
    let (common, text) = match cli.command {
        Command::LosSweep { common, sweep } => {
            let scn = load(&common)?;
            let spec = SweepSpec {
                variable: SweepVariable::Distance,
                values: sweep.values,
                distance: sweep.distance,
                outputs: sweep.columns,
            };
            let text = scenario_io::run_sweep(&scn, &spec)?;
            (common, text)
        }
        Command::SbSweep { common, variable, sweep } => {
            let scn = load(&common)?;
            let spec = SweepSpec { variable, values: sweep.values, distance: sweep.distance, outputs: sweep.columns };
            let text = scenario_io::run_sweep(&scn, &spec)?;
            (common, text)
        }
        Command::SnrSweep { common, sweep } => {
            let scn = load(&common)?;
            let spec = SweepSpec {
                variable: SweepVariable::Distance,
                values: sweep.values,
                distance: sweep.distance,
                outputs: snr_columns(sweep.columns),
            };
            let text = scenario_io::run_sweep(&scn, &spec)?;
            (common, text)
        }
        Command::Compare2d3d { common } => {
            let text = scenario_io::compare_2d3d(&load(&common)?)?;
            (common, text)
        }
        Command::Validate { common } => {
            let text = scenario_io::validate(&load(&common)?)?;
            (common, text)
        }
        Command::EmitPreset { common } => {
            let text = scenario_io::emit(&load(&common)?);
            (common, text)
        }
    };
    Ok((text, common.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(text, out)| match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
