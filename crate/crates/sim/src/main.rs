use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vbtrack::campaign::{run_campaign, RunMatrix};
use vbtrack::config::{parse_case, Config};
use vbtrack::{oracles, output, Result};

/// Adaptive bearings-only tracking filters: Monte Carlo campaigns and checks.
#[derive(Debug, Parser)]
#[command(name = "vbtrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write CSV files.
    Run(RunArgs),
    /// Run the reference checks and print a table.
    Oracle,
    /// Print the resolved configuration, defaults included.
    ShowConfig {
        /// Preset name (scenario1, scenario2, 1, 2) or path to a TOML file.
        #[arg(long, default_value = "scenario1")]
        scenario: String,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Preset names or TOML paths; comma separated or repeated.
    #[arg(long, value_delimiter = ',', default_value = "scenario1,scenario2")]
    scenario: Vec<String>,
    /// 1 (static noise) or 2 (range-dependent noise).
    #[arg(long, value_delimiter = ',')]
    case: Vec<String>,
    /// ekf, ckf, ukf, ghf.
    #[arg(long, value_delimiter = ',')]
    filter: Vec<String>,
    /// nonadaptive, vb, vb-tuned, mapmle.
    #[arg(long, value_delimiter = ',')]
    mode: Vec<String>,
    /// Runs per cell (track loss).
    #[arg(long)]
    runs: Option<usize>,
    /// Leading runs that also feed RMSE, bias and ANEES.
    #[arg(long)]
    metric_runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $VBTRACK_OUT, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write runs.csv with one row per run.
    #[arg(long)]
    per_run: bool,
    /// Write trace.csv with the per-step records of this run index.
    #[arg(long)]
    trace: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: RunArgs) -> Result<()> {
    let configs = args.scenario.iter().map(|s| Config::resolve(s)).collect::<Result<Vec<_>>>()?;
    let mut matrix = RunMatrix::from_configs(configs)?;
    if !args.case.is_empty() {
        matrix.cases = args.case.iter().map(|c| parse_case(c)).collect::<Result<_>>()?;
    }
    if !args.filter.is_empty() {
        matrix.filters = args.filter.iter().map(|f| Ok(f.parse()?)).collect::<Result<_>>()?;
    }
    if !args.mode.is_empty() {
        matrix.modes = args.mode.iter().map(|m| Ok(m.parse()?)).collect::<Result<_>>()?;
    }
    if let Some(r) = args.runs {
        matrix.runs = r;
    }
    if let Some(r) = args.metric_runs {
        matrix.metric_runs = r;
    }
    if let Some(s) = args.seed {
        matrix.base_seed = s;
    }
    matrix.trace_run = args.trace;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| vbtrack::Error::Config(e.to_string()))?;
    }
    let dir = output::output_dir(args.out.as_deref());
    let result = run_campaign(&matrix)?;
    output::write_all(&dir, &result, args.per_run)?;
    let bound = matrix.track_loss_bound;
    for cell in &result.cells {
        for v in &cell.variants {
            log::info!(
                "{} case {} {} {}: track loss {:.2}%",
                cell.scenario,
                vbtrack::config::case_number(cell.case),
                v.filter,
                v.mode,
                v.ensemble.track_loss_pct(bound)
            );
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Oracle => {
            let results = oracles::run_all();
            print!("{}", oracles::format_table(&results));
            if results.iter().all(|r| r.pass) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
        Command::ShowConfig { scenario } => Config::resolve(&scenario).and_then(|c| c.to_toml()).map(|t| print!("{t}")),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
