//! `vortex-steer`: loss-tolerant steering bounds, seeded steering
//! simulations, orientation sweeps and tomography from the command line.

mod config;
mod error;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vortex_steer::encoding::{werner_visibility_for_fidelity, Encoding};

use config::{grid, CommandKind, DynamicMode, Format, RunConfig, TomographySet};
use error::CliError;

#[derive(Parser)]
#[command(name = "vortex-steer", version, about, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Re-run from a saved configuration (for example a `.config.json` sidecar).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output path overriding the one stored in `--config`.
    #[arg(long, value_name = "PATH", requires = "config")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Loss-tolerant bound C_n over a grid of announce fractions.
    Bound {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// `start:stop:step`, a comma list, or one value.
        #[arg(long, default_value = "0.01:1:0.01")]
        xi: String,
        /// Require the announce fraction for every setting separately.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// One run at a fixed receiver orientation.
    Steer {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Receiver orientation in degrees.
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// One run per receiver orientation.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Orientations in degrees, `start:stop:step` or a comma list.
        #[arg(long, default_value = "0:90:15")]
        thetas: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// One run with a randomly rotating receiver.
    Dynamic {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 0.0)]
        theta_min: f64,
        #[arg(long, default_value_t = 90.0)]
        theta_max: f64,
        #[arg(long, value_enum, default_value_t = DynamicMode::PerTrial)]
        dynamic_mode: DynamicMode,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Simulated tomography of the state reaching Bob's detectors.
    Tomo {
        #[arg(long, default_value = "vortex")]
        encoding: Encoding,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Mean pairs per measurement basis pair.
        #[arg(long, default_value_t = 100_000.0)]
        counts: f64,
        #[arg(long, value_enum, default_value_t = TomographySet::Standard)]
        settings: TomographySet,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct NoiseArgs {
    /// Singlet fidelity of the Werner source.
    #[arg(long, conflicts_with = "visibility")]
    fidelity: Option<f64>,
    /// Werner visibility v.
    #[arg(long)]
    visibility: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    dephasing: f64,
}

#[derive(Args)]
struct SourceArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value = "vortex")]
    encoding: Encoding,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct ChannelArgs {
    /// Bob's heralding efficiency.
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    #[arg(long, default_value_t = 1.0)]
    alice_efficiency: f64,
    /// Judge against the per-setting announce bound.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = vortex_steer::experiment::DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Result file; a `<output>.config.json` sidecar is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl NoiseArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), CliError> {
        if let Some(f) = self.fidelity {
            c.werner_v = werner_visibility_for_fidelity(f)?;
        }
        if let Some(v) = self.visibility {
            c.werner_v = v;
        }
        c.dephasing = self.dephasing;
        Ok(())
    }
}

impl SourceArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<(), CliError> {
        c.n = self.n;
        c.encoding = self.encoding;
        self.noise.apply(c)
    }
}

impl ChannelArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.efficiency = self.efficiency;
        c.alice_efficiency = self.alice_efficiency;
        c.strict = self.strict;
    }
}

impl SamplingArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.trials = self.trials;
        c.seed = self.seed;
    }
}

impl OutputArgs {
    fn apply(&self, c: &mut RunConfig, default_format: Format) {
        c.output = self.output.clone();
        c.format = self.format.unwrap_or(default_format);
    }
}

fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::default();
    match command {
        Command::Bound { n, xi, strict, out } => {
            c.command = CommandKind::Bound;
            c.n = n;
            c.xi = grid(&xi)?;
            c.strict = strict;
            out.apply(&mut c, Format::Csv);
        }
        Command::Steer { source, channel, theta, sampling, out } => {
            c.command = CommandKind::Steer;
            source.apply(&mut c)?;
            channel.apply(&mut c);
            c.theta_deg = theta;
            sampling.apply(&mut c);
            out.apply(&mut c, Format::Csv);
        }
        Command::Sweep { source, channel, thetas, sampling, out } => {
            c.command = CommandKind::Sweep;
            source.apply(&mut c)?;
            channel.apply(&mut c);
            c.thetas_deg = grid(&thetas)?;
            sampling.apply(&mut c);
            out.apply(&mut c, Format::Csv);
        }
        Command::Dynamic { source, channel, theta_min, theta_max, dynamic_mode, sampling, out } => {
            c.command = CommandKind::Dynamic;
            source.apply(&mut c)?;
            channel.apply(&mut c);
            c.theta_range_deg = [theta_min, theta_max];
            c.dynamic_mode = dynamic_mode;
            sampling.apply(&mut c);
            out.apply(&mut c, Format::Csv);
        }
        Command::Tomo { encoding, noise, theta, counts, settings, seed, out } => {
            c.command = CommandKind::Tomo;
            c.encoding = encoding;
            noise.apply(&mut c)?;
            c.theta_deg = theta;
            c.counts_per_setting = counts;
            c.tomography_set = settings;
            c.seed = seed;
            out.apply(&mut c, Format::Json);
        }
    }
    c.clear_unused();
    Ok(c)
}

fn load(path: &Path, output: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut c: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if output.is_some() {
        c.output = output;
    }
    Ok(c)
}

/// Writes via a temporary file in the same directory and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().ok_or_else(|| CliError::Validation(format!("bad output path {}", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    output.with_file_name(name)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let config = match (cli.config, cli.command) {
        (Some(path), None) => load(&path, cli.output)?,
        (None, Some(command)) => resolve(command)?,
        _ => return Err(CliError::Validation("give a subcommand or --config".into())),
    };
    let bytes = run::execute(&config)?;
    match &config.output {
        Some(path) => {
            write_atomic(path, &bytes)?;
            write_atomic(&sidecar_path(path), &run::to_json(&config)?)?;
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vortex-steer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
