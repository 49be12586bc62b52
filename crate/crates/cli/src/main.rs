use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csb_core::experiments::{cmd_apn_dist, cmd_attack, cmd_beam_pattern, cmd_ser, cmd_smi_sweep, OutputFile};
use csb_core::{CsbError, ExperimentConfig};

const DEFAULT_OUT: &str = "out";

/// Experiments for circulant shift-based beamforming on low-resolution arrays
/// and the AirSpy eavesdropper. Every command writes plot-ready CSV files.
#[derive(Debug, Parser)]
#[command(name = "csb", version)]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`; default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalized beam amplitude over a (θ, φ) grid per phase resolution.
    BeamPattern,
    /// Secrecy mutual information versus eavesdropper angle, CSB against ASM.
    SmiSweep,
    /// Optimal eavesdropper trajectory and per-step secrecy rate.
    Attack {
        /// Shrink to G=5 with 4 steps and also write the enumeration oracle.
        #[arg(long)]
        tiny: bool,
    },
    /// SER versus SNR along the attack episode, plus RX SNR versus ASM fraction.
    Ser,
    /// Artificial phase noise law and PSK partition per grid offset.
    ApnDist,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

enum Failure {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Io(m) => m,
        }
    }
}

impl From<CsbError> for Failure {
    fn from(e: CsbError) -> Self {
        match e {
            CsbError::Infeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<(), Failure> {
    let io = |p: &Path, e: std::io::Error| Failure::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.contents).map_err(|e| io(&path, e))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    cfg.validate()?;
    let files = match cli.command {
        Command::BeamPattern => cmd_beam_pattern(&cfg)?,
        Command::SmiSweep => cmd_smi_sweep(&cfg)?,
        Command::Attack { tiny } => cmd_attack(&cfg, tiny)?,
        Command::Ser => cmd_ser(&cfg)?,
        Command::ApnDist => cmd_apn_dist(&cfg)?,
        Command::ShowConfig => unreachable!(),
    };
    let dir = PathBuf::from(cfg.out_dir.as_deref().unwrap_or(DEFAULT_OUT));
    write_outputs(&dir, &files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
