use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bathtraj::scenario::{enumerate_outcomes, enumeration_csv, parse_config, run_scenario, write_outputs, ScenarioConfig};
use bathtraj::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "trajcli", version, about = "Run, enumerate and validate trajectory scenarios")]
struct Cli {
    /// Directory for written artifacts; overrides `outputs.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for the ensemble (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replaces the config seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenario and write CSVs plus manifest.json.
    Run { config: PathBuf },
    /// Branch exhaustively over every outcome sequence (at most 2 steps).
    Enumerate {
        config: PathBuf,
        #[arg(long)]
        state: String,
    },
    /// Check a config and print its canonical form and hash.
    Validate { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 1,
        Error::Trajectory { source, .. } => exit_code(source),
        _ => 3,
    }
}

fn load(path: &Path, cli: &Cli) -> Result<ScenarioConfig, Error> {
    let text = fs::read(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed_override {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.outputs.dir = dir.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Contract(e.to_string()))?;
    }
    match &cli.command {
        Command::Validate { config } => {
            let cfg = load(config, cli)?;
            println!("{}", cfg.canonical_json());
            println!("config_hash {}", cfg.hash());
        }
        Command::Enumerate { config, state } => {
            let cfg = load(config, cli)?;
            let table = enumeration_csv(&enumerate_outcomes(&cfg, state)?);
            print!("{table}");
            if let Some(dir) = &cli.out_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("enumerate_{state}.csv")), table)?;
            }
        }
        Command::Run { config } => {
            let cfg = load(config, cli)?;
            let report = run_scenario(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let files = write_outputs(&cfg, &report, Path::new(&cfg.outputs.dir))?;
            println!(
                "{} engine, {} trajectories, max |mean - me| {:.3e}, {} files in {} ({:.2} s)",
                report.engine,
                report.n_traj,
                report.max_me_deviation,
                files.len(),
                cfg.outputs.dir,
                report.wall_time_s
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
