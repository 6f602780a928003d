use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lpsim::config::ScenarioConfig;
use lpsim::runner::{self, SweepSpec};

#[derive(Parser)]
#[command(name = "lpsim", version, about = "Packet-level simulator for low-priority datacenter transports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-flow results.
    Run {
        config: PathBuf,
        /// Run only this seed instead of every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "LPSIM_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Run a scenario and its oracle baseline on the same trace and write normalized FCTs.
    Paired {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "LPSIM_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Run every grid point of a sweep spec.
    Sweep {
        spec: PathBuf,
        #[arg(long, env = "LPSIM_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Check a scenario file and print its normalized form.
    Validate { config: PathBuf },
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    cfg.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(cfg)
}

fn seeds(cfg: &ScenarioConfig, one: Option<u64>) -> Vec<u64> {
    one.map_or_else(|| cfg.seeds.clone(), |s| vec![s])
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("  {}", f.display());
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = load(&config)?;
            let base = config.parent();
            for s in seeds(&cfg, seed) {
                let files = runner::run(&cfg, s, &out, base).with_context(|| format!("seed {s}"))?;
                println!("{} seed {s}:", cfg.name);
                print_files(&files);
            }
        }
        Command::Paired { config, seed, out } => {
            let cfg = load(&config)?;
            let base = config.parent();
            for s in seeds(&cfg, seed) {
                let files = runner::run_paired(&cfg, s, &out, base).with_context(|| format!("seed {s}"))?;
                println!("{} seed {s} (paired):", cfg.name);
                print_files(&files);
            }
        }
        Command::Sweep { spec, out } => {
            let s = SweepSpec::load(&spec).with_context(|| format!("loading {}", spec.display()))?;
            let index = runner::sweep(&s, &out, spec.parent())?;
            println!("{} runs; index at {}", index.runs.len(), out.join(runner::INDEX_FILE).display());
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
