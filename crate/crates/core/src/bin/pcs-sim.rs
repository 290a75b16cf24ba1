use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use pcs_sim::config::{Overrides, RunConfig};
use pcs_sim::{parse_config, run_scenario, Error, Scenario};

/// Pair coherent state preparation simulator.
#[derive(Parser, Debug)]
#[command(name = "pcs-sim", version)]
struct Cli {
    /// relax_me, relax_mc, quench, pcs_build or reduction_check
    scenario: String,

    /// TOML or JSON configuration file; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed of the trajectory ensemble
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of trajectories
    #[arg(long)]
    traj: Option<usize>,

    /// Fock cutoff per mode
    #[arg(long)]
    cutoff: Option<usize>,
}

fn configure(cli: &Cli) -> Result<RunConfig, Error> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let overrides = Overrides {
        scenario: Some(Scenario::parse(&cli.scenario)?),
        master_seed: cli.seed,
        n_traj: cli.traj,
        cutoff: cli.cutoff,
        output_dir: cli.out.clone(),
    };
    parse_config(&text)?.with_overrides(&overrides)
}

fn init_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("PCS_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("PCS_SIM_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| configure(&cli)).and_then(|cfg| run_scenario(&cfg));
    match result {
        Ok(out) => {
            let dir = out.summary["config"]["output"]["dir"].as_str().unwrap_or_default().to_owned();
            for (name, _) in &out.files {
                println!("{}", PathBuf::from(&dir).join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let cat = e.category();
            let report = json!({
                "error": {
                    "category": cat.as_str(),
                    "message": e.to_string(),
                }
            });
            eprintln!("{report}");
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
