use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gco_tdc::experiment::{run_command, run_efficiency_report, Command, ExperimentConfig, ReportBundle};
use gco_tdc::Result;

#[derive(Parser)]
#[command(name = "gco-tdc", version, about = "Simulate and calibrate gray-code-oscillator TDC channels")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize and export bin profiles.
    Profile(Common),
    /// Emit compensation and calibration table files.
    Calibrate(Common),
    /// Linearity against the number of fraction bits.
    SweepMbar(Common),
    /// Raw and calibrated linearity at each configured resolution.
    SweepResolution(Common),
    /// RMS resolution from repeated fixed-delay measurements.
    IntervalTest(Common),
    /// Calibrate and evaluate every channel.
    Multichannel(Common),
    /// Resolution-improvement efficiency from a device,m,lsb_ps,lut_count table.
    Efficiency {
        table: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use exact rational weights.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    mbar: Option<u32>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(mbar) = self.mbar {
            cfg.mbar = mbar;
        }
        cfg.exact |= self.exact;
        let out = self.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| "out".into());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    let (bundle, out): (ReportBundle, PathBuf) = match cli.command {
        Cmd::Efficiency { table, out } => (run_efficiency_report(&table)?, out),
        Cmd::Profile(c) => with_config(&c, Command::Profile)?,
        Cmd::Calibrate(c) => with_config(&c, Command::Calibrate)?,
        Cmd::SweepMbar(c) => with_config(&c, Command::SweepMbar)?,
        Cmd::SweepResolution(c) => with_config(&c, Command::SweepResolution)?,
        Cmd::IntervalTest(c) => with_config(&c, Command::IntervalTest)?,
        Cmd::Multichannel(c) => with_config(&c, Command::Multichannel)?,
    };
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    for path in bundle.write_to(&out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn with_config(c: &Common, command: Command) -> Result<(ReportBundle, PathBuf)> {
    let (cfg, out) = c.load()?;
    Ok((run_command(&cfg, command)?, out))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_calibration() { 3 } else { 2 })
        }
    }
}
