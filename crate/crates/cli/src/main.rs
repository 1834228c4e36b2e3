//! `ris-atomic`: runs phase optimization, convergence traces and BER
//! campaigns from a TOML configuration.
//!
//! Exit codes: 0 success, 1 numerical failure during a run, 2 configuration
//! error, 3 I/O error, 4 budget refusal.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ris_atomic::channel::write_channel_file;
use ris_atomic::sim::{run_ber, run_single, write_ber_csv, SimConfig};
use ris_atomic::{Error, Execution};

use ris_atomic_cli::config::{dump_defaults, parse_config};
use ris_atomic_cli::output::{sibling, PhaseSolution, RunManifest, VERSION};

#[derive(Parser, Debug)]
#[command(name = "ris-atomic", version, about = "RIS-assisted atomic MIMO receiver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (CSV for `ber`/`convergence`, TOML for `optimize`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed; overrides `campaign.seed` from the file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for BER campaigns; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Print the default configuration (to `--out` if given) and exit.
    #[arg(long)]
    dump_defaults: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Optimize the RIS phases for one channel realization.
    Optimize,
    /// Bit error rate versus Eb/N0 for the enabled detectors.
    Ber,
    /// Objective and gradient norm per Adam iteration.
    Convergence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Optimize => "optimize",
            Command::Ber => "ber",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Runtime(String),
    Config(String),
    Io(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Budget(_) => 4,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Runtime(m) => write!(f, "error: {m}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
            Failure::Budget(m) => write!(f, "budget refusal: {m}"),
        }
    }
}

fn library_failure(e: Error, cfg: &SimConfig) -> Failure {
    match e {
        Error::Budget { what, cost, budget } => Failure::Budget(format!(
            "{what} needs Q^K = {}^{} = {cost} candidate vectors, above the budget of {budget}",
            cfg.system.order, cfg.system.users
        )),
        Error::Config { field, message } => Failure::Config(format!("field `{field}`: {message}")),
        other => Failure::Runtime(other.to_string()),
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<SimConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        cfg.campaign.seed = seed;
    }
    cfg.validate().map_err(|e| library_failure(e, &cfg))?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>, written: std::io::Result<()>) -> Result<(), Failure> {
    written.and_then(|_| w.flush()).map_err(|e| Failure::io(path, e))
}

fn convergence(cfg: &SimConfig, out: &Path) -> Result<(), Failure> {
    let link = run_single(cfg).map_err(|e| library_failure(e, cfg))?;
    let mut w = create(out)?;
    let res = link.trace.write_csv(&mut w);
    finish(out, w, res)
}

fn optimize(cfg: &SimConfig, out: &Path) -> Result<(), Failure> {
    let link = run_single(cfg).map_err(|e| library_failure(e, cfg))?;
    let channels_path = sibling(out, "channels.txt");
    let mut w = create(&channels_path)?;
    let res = write_channel_file(&mut w, &link.realization.channels, Some(&link.realization.lo));
    finish(&channels_path, w, res)?;

    let solution = PhaseSolution {
        version: VERSION.to_string(),
        seed: cfg.campaign.seed,
        trial: cfg.campaign.first_trial,
        cells: cfg.system.cells,
        ris_elements: cfg.system.ris_elements,
        users: cfg.system.users,
        initial_objective: link.trace.initial_objective().unwrap_or(link.trace.final_objective),
        objective: link.trace.final_objective,
        gradient_evals: link.trace.evals.gradient_evals,
        channels: channels_path.display().to_string(),
        theta: link.theta.into_vec(),
    };
    fs::write(out, solution.to_toml()).map_err(|e| Failure::io(out, e))
}

fn ber(cfg: &SimConfig, out: &Path, threads: usize) -> Result<(), Failure> {
    let report = run_ber(cfg, Execution::with_threads(threads)).map_err(|e| library_failure(e, cfg))?;
    let mut w = create(out)?;
    let res = write_ber_csv(&mut w, &report.records);
    finish(out, w, res)?;

    let manifest_path = sibling(out, "manifest.toml");
    let manifest = RunManifest {
        version: VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        command: Command::Ber.name().to_string(),
        threads,
        outputs: vec![out.display().to_string(), manifest_path.display().to_string()],
        config: cfg.clone(),
        points: report.points,
    };
    fs::write(&manifest_path, manifest.to_toml()).map_err(|e| Failure::io(&manifest_path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.dump_defaults {
        let text = dump_defaults();
        return match &cli.out {
            Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
            None => {
                print!("{text}");
                Ok(())
            }
        };
    }
    let Some(command) = cli.command else {
        return Err(Failure::Config("no command given; use optimize, ber or convergence".into()));
    };
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Config(format!("`{}` needs --config <path>", command.name())))?;
    let out = cli
        .out
        .as_deref()
        .ok_or_else(|| Failure::Config(format!("`{}` needs --out <path>", command.name())))?;
    let cfg = load(config, cli.seed)?;
    match command {
        Command::Optimize => optimize(&cfg, out),
        Command::Ber => ber(&cfg, out, cli.threads),
        Command::Convergence => convergence(&cfg, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
