use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fishsim::harness::{
    calibrate_tail, run_launch, sweep, write_speed_vs_amplitude, write_speed_vs_period,
    write_sweep_csv, Execution, SteadyOptions,
};
use fishsim::params::load_config;
use fishsim::server::{serve, DEFAULT_PORT};
use fishsim::{validate_command, RobotParams, SimConfig, TailCommand};

/// Robotic fish simulator and swim-test harness.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single launch from rest; writes the trajectory CSV.
    Run {
        /// Stroke amplitude, degrees.
        #[arg(long)]
        amp: f64,
        /// Stroke frequency, Hz.
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Amplitude x frequency grid; writes the results table and the two
    /// speed tables (`<out>_speed_vs_amplitude.csv`, `<out>_speed_vs_period.csv`).
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0, 60.0, 80.0])]
        amps: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 3.0, 5.0, 7.0])]
        freqs: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; with stdout the three tables are separated by blank lines.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate cells one after another on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Clamped-body bench run; prints measured amplitude and period.
    Calibrate {
        #[arg(long)]
        amp: f64,
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Ground-station TCP endpoint.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(config: Option<&Path>) -> Result<(RobotParams, SimConfig)> {
    let Some(path) = config else {
        return Ok((RobotParams::default(), SimConfig::default()));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_config(&text).with_context(|| format!("in {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `results.csv` -> `results_<suffix>.csv` in the same directory.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

fn command(amp: f64, freq: f64) -> Result<TailCommand> {
    let cmd = TailCommand::new(amp, freq);
    validate_command(&cmd)?;
    Ok(cmd)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Run { amp, freq, config, out } => {
            let cmd = command(amp, freq)?;
            let (params, sim) = load(config.as_deref())?;
            let log = run_launch(&cmd, &sim, &params)?;
            let mut w = output(out.as_deref())?;
            log.write_csv(&mut w)?;
            w.flush()?;
        }
        Cmd::Sweep { amps, freqs, config, out, sequential } => {
            let (params, sim) = load(config.as_deref())?;
            let execution = if sequential { Execution::Sequential } else { Execution::Parallel };
            let res = sweep(&amps, &freqs, &sim, &params, &SteadyOptions::default(), execution)?;
            for (cmd, err) in &res.failures {
                eprintln!("cell {} deg / {} Hz failed: {err}", cmd.amplitude, cmd.frequency);
            }
            match out.as_deref() {
                Some(path) => {
                    let mut w = output(Some(path))?;
                    write_sweep_csv(&res.records, &mut w)?;
                    w.flush()?;
                    let mut w = output(Some(&sibling(path, "speed_vs_amplitude")))?;
                    write_speed_vs_amplitude(&res.records, &mut w)?;
                    w.flush()?;
                    let mut w = output(Some(&sibling(path, "speed_vs_period")))?;
                    write_speed_vs_period(&res.records, &mut w)?;
                    w.flush()?;
                }
                None => {
                    let mut w = output(None)?;
                    write_sweep_csv(&res.records, &mut w)?;
                    writeln!(w)?;
                    write_speed_vs_amplitude(&res.records, &mut w)?;
                    writeln!(w)?;
                    write_speed_vs_period(&res.records, &mut w)?;
                    w.flush()?;
                }
            }
            if !res.failures.is_empty() {
                bail!("{} of {} cells failed", res.failures.len(), res.records.len());
            }
        }
        Cmd::Calibrate { amp, freq, config } => {
            let cmd = command(amp, freq)?;
            let (params, sim) = load(config.as_deref())?;
            let cal = calibrate_tail(&cmd, &sim, &params)?;
            println!("amp_actual_deg,period_actual_s");
            println!("{},{}", fishsim::fmt::sig9(cal.amp_actual), fishsim::fmt::sig9(cal.period_actual));
        }
        Cmd::Serve { port, config } => {
            let (params, sim) = load(config.as_deref())?;
            eprintln!("listening on port {port}");
            serve(port, sim, params).with_context(|| format!("serving on port {port}"))?;
        }
    }
    Ok(())
}
