//! Command-line front end for `cvqkd-core`: single key rates, region scans,
//! parameter sweeps and figure data, written as CSV or JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cvqkd_core::{Error, Variant};

mod commands;
pub mod output;

use output::{ErrorRecord, Format, Report};

/// Worker-pool size; unset or `0` lets rayon decide.
pub const THREADS_ENV: &str = "CVQKD_RATES_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_KEY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cvqkd-rates", version, about = "Key rates and security regions for unidimensional CV-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate of one protocol variant at one channel setting.
    Keyrate(KeyrateArgs),
    /// Physical and secure C_p intervals along a range of V_p^B.
    Region(RegionArgs),
    /// Key rate versus loss on a phase-insensitive channel.
    SweepLoss(SweepLossArgs),
    /// Key rate versus C_p across the physical interval.
    SweepCp(SweepCpArgs),
    /// Largest excess noise with a positive key rate versus loss.
    TolerableNoise(TolerableNoiseArgs),
    /// Data behind one of the standard figures (2 to 5).
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format [default: json for keyrate, csv otherwise].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to PATH instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Grid size of the worst-case C_p search (odd, at least 101).
    #[arg(long, default_value_t = 2001)]
    grid_points: usize,
    /// Reconciliation efficiency in (0, 1].
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Modulation variance V_M (shot-noise units).
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    vm: f64,
    /// x-quadrature transmittance.
    #[arg(long, allow_negative_numbers = true)]
    eta_x: f64,
    /// p-quadrature transmittance [default: eta-x].
    #[arg(long, allow_negative_numbers = true)]
    eta_p: Option<f64>,
    /// x-quadrature excess noise, as a decimal in shot-noise units (5% = 0.05).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    eps_x: f64,
    /// p-quadrature excess noise [default: eps-x].
    #[arg(long, allow_negative_numbers = true)]
    eps_p: Option<f64>,
}

#[derive(Debug, Args)]
struct LossArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    loss_db_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 30.0)]
    loss_db_max: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    loss_db_step: f64,
}

#[derive(Debug, Args)]
struct KeyrateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Bob's measured p-variance [default: 1 + eta-p * eps-p].
    #[arg(long, allow_negative_numbers = true)]
    vpb: Option<f64>,
    /// Evaluate at this p-correlation instead of the variant's choice.
    #[arg(long, allow_negative_numbers = true)]
    cp: Option<f64>,
    #[arg(long, value_parser = parse_variant, default_value = "ud-pessimistic")]
    variant: Variant,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Lower end of the V_p^B range [default: parabola vertex].
    #[arg(long, allow_negative_numbers = true)]
    vpb_min: Option<f64>,
    /// Upper end of the V_p^B range [default: vertex + 0.03].
    #[arg(long, allow_negative_numbers = true)]
    vpb_max: Option<f64>,
    /// Number of V_p^B rows.
    #[arg(long, default_value_t = 61)]
    resolution: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepCpArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Measured p-variance; repeat for several slices [default: 1 + eta-p * eps-p].
    #[arg(long, allow_negative_numbers = true)]
    vpb: Vec<f64>,
    /// C_p samples per slice.
    #[arg(long, default_value_t = 2001)]
    resolution: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    beta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepLossArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 100.0)]
    vm: f64,
    /// Excess noise of the phase-insensitive channel.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.05)]
    eps_x: f64,
    /// Variant to include; repeatable [default: all].
    #[arg(long = "variant", value_parser = parse_variant)]
    variants: Vec<Variant>,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct TolerableNoiseArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 100.0)]
    vm: f64,
    /// Variant to include; repeatable [default: all].
    #[arg(long = "variant", value_parser = parse_variant)]
    variants: Vec<Variant>,
    #[command(flatten)]
    loss: LossArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FigureArgs {
    /// Figure number.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=5))]
    id: u8,
    /// Override the figure's modulation variance.
    #[arg(long, allow_negative_numbers = true)]
    vm: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    grid_points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command before or during computation.
#[derive(Debug)]
enum Failure {
    /// Computation error, reported with a structured record when it means
    /// "no key".
    Core(Error),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::NonPhysicalMatrix(_) => EXIT_INVALID,
        Error::EmptyRegion { .. } | Error::NoPositiveRate { .. } => EXIT_NO_KEY,
        Error::DegenerateMeasurement { .. } | Error::Unbracketed { .. } => EXIT_FAILURE,
    }
}

/// Output destination and format chosen for a command.
struct Sink {
    format: Format,
    out: Option<PathBuf>,
}

impl Command {
    fn sink(&self) -> Sink {
        let (o, default) = match self {
            Command::Keyrate(a) => (&a.output, Format::Json),
            Command::Region(a) => (&a.output, Format::Csv),
            Command::SweepLoss(a) => (&a.output, Format::Csv),
            Command::SweepCp(a) => (&a.output, Format::Csv),
            Command::TolerableNoise(a) => (&a.output, Format::Csv),
            Command::Figure(a) => (&a.output, Format::Csv),
        };
        Sink {
            format: o.format.unwrap_or(default),
            out: o.out.clone(),
        }
    }
}

fn emit(report: &Report, sink: &Sink, stdout: &mut dyn Write) -> Result<(), String> {
    let text = report.render(sink.format);
    match &sink.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn thread_count() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got '{s}'")),
        Err(_) => Ok(0),
    }
}

/// Runs one invocation and returns the process exit code.
///
/// `args` includes the program name, as with [`std::env::args_os`].
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_INVALID
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let threads = match thread_count() {
        Ok(n) => n,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INVALID;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return EXIT_FAILURE;
        }
    };
    let sink = cli.command.sink();
    let (name, config, outcome) = pool.install(|| commands::execute(&cli.command));
    let report = match outcome {
        Ok(mut report) => {
            report.config = config;
            report
        }
        Err(Failure::Core(e)) if exit_code(&e) == EXIT_NO_KEY => {
            let _ = writeln!(stderr, "error: {e}");
            let report = Report {
                command: name.into(),
                config,
                table: Default::default(),
                summary: Vec::new(),
                error: Some(ErrorRecord {
                    kind: e.kind().into(),
                    message: e.to_string(),
                }),
            };
            return match emit(&report, &sink, stdout) {
                Ok(()) => EXIT_NO_KEY,
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_FAILURE
                }
            };
        }
        Err(Failure::Core(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INVALID;
        }
    };
    match emit(&report, &sink, stdout) {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}
