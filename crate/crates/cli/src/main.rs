#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foldspdc::config::SourceConfig;
use foldspdc::ErrorKind;

mod commands;
mod output;

use output::{Format, Meta, Sink};

/// Phase-compensation design and count-rate simulation for folded
/// double-pass SPDC polarization-entanglement sources.
#[derive(Parser)]
#[command(name = "foldspdc", version)]
struct Cli {
    /// Source configuration (JSON). Without it the bundled reference setup is used.
    #[arg(long, global = true, env = "FOLDSPDC_CONFIG")]
    config: Option<PathBuf>,

    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative phase over a signal/idler window.
    PhaseMap(PhaseMapArgs),
    /// Compensator length giving the flattest phase.
    Optimize(OptimizeArgs),
    /// Polarizer correlation curves, fitted visibilities and the fidelity witness.
    Correlations(CorrelationArgs),
    /// Singles, coincidences, accidentals and raw fidelity versus pump power.
    Rates(RatesArgs),
    /// Time-tag simulation compared against the closed-form rates.
    Montecarlo(MonteCarloArgs),
    /// Temperature sensitivity of the YVO4 or KTP phase.
    Temperature(TemperatureArgs),
}

#[derive(Args)]
pub struct PhaseMapArgs {
    /// Half-width of the signal window, nm.
    #[arg(long, default_value_t = 15.0)]
    pub window: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 301)]
    pub grid: usize,
    #[arg(long, conflicts_with = "uncompensated")]
    pub compensated: bool,
    /// Leave the YVO4 crystal out.
    #[arg(long)]
    pub uncompensated: bool,
    /// Override the compensator length, mm.
    #[arg(long)]
    pub length_mm: Option<f64>,
    /// Sample the full signal × idler plane instead of the energy-conserving line.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    Spectrum,
    All,
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Half-width of the signal window, nm. Defaults to half the filter FWHM.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, default_value_t = 141)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    #[value(name = "phi+")]
    PhiPlus,
    #[value(name = "phi-")]
    PhiMinus,
}

#[derive(Args)]
pub struct CorrelationArgs {
    /// Idler analyzer angles θ_B, degrees.
    #[arg(long = "basis-angle", value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 90.0, 45.0, -45.0])]
    pub basis_angles: Vec<f64>,
    /// θ_A step over [0°, 180°), degrees.
    #[arg(long, default_value_t = 5.0)]
    pub step_deg: f64,
    /// Offset of the YVO4 temperature from its set point, K.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub yvo_detune: f64,
    #[arg(long, value_enum, default_value_t = TargetArg::PhiPlus)]
    pub target: TargetArg,
}

#[derive(Args)]
pub struct RatesArgs {
    /// Pump powers at the crystal, mW.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1.., allow_negative_numbers = true)]
    pub powers: Vec<f64>,
    /// Coincidence windows, ns. Defaults to the configured window.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub windows: Vec<f64>,
    /// State visibility entering the raw fidelity. Defaults to the modeled state.
    #[arg(long)]
    pub visibility: Option<f64>,
}

#[derive(Args)]
pub struct MonteCarloArgs {
    /// Pump power, mW. Defaults to the calibration power.
    #[arg(long)]
    pub power: Option<f64>,
    /// Simulated time, s.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also dump the time tags as CSV.
    #[arg(long)]
    pub timetags: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ElementArg {
    Yvo,
    Ktp,
}

#[derive(Args)]
pub struct TemperatureArgs {
    #[arg(long, value_enum, default_value_t = ElementArg::Yvo)]
    pub element: ElementArg,
    #[arg(long, default_value_t = 0.995)]
    pub fidelity_target: f64,
    /// Upper end of the π-shift search, K.
    #[arg(long, default_value_t = 20.0)]
    pub max_delta: f64,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Config => 3,
        ErrorKind::Domain => 4,
        ErrorKind::Numeric => 5,
        ErrorKind::Io => 6,
    }
}

fn load_config(path: Option<&PathBuf>) -> foldspdc::Result<(SourceConfig, String)> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| foldspdc::Error::Config(format!("{}: {e}", p.display())))?;
            Ok((SourceConfig::from_path(p)?, text))
        }
        None => Ok((SourceConfig::reference(), SourceConfig::reference_json().to_string())),
    }
}

fn run(cli: Cli) -> foldspdc::Result<()> {
    let (config, text) = load_config(cli.config.as_ref())?;
    let args: Vec<String> = std::iter::once("foldspdc".to_string()).chain(std::env::args().skip(1)).collect();
    let sink = Sink { format: cli.format, out: cli.out, meta: Meta::new(&text, &args) };
    match cli.command {
        Command::PhaseMap(a) => commands::phase_map(&config, &sink, &a),
        Command::Optimize(a) => commands::optimize(&config, &sink, &a),
        Command::Correlations(a) => commands::correlations(&config, &sink, &a),
        Command::Rates(a) => commands::rates(&config, &sink, &a),
        Command::Montecarlo(a) => commands::montecarlo(&config, &sink, &a),
        Command::Temperature(a) => commands::temperature(&config, &sink, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foldspdc: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
