use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ecpic::runner::{sweep_dt, write_sweep_csv};
use ecpic::{load_config, run, RunConfig, SchemeKind};

#[derive(Parser)]
#[command(
    name = "ecpic",
    version,
    about = "Energy-conserving 2D2V particle-in-cell simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics.csv.
    Run(RunArgs),
    /// Rerun at several time steps with the end time held fixed.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated time steps, e.g. `0.2,0.1,0.05`.
    #[arg(long, value_delimiter = ',', required = true)]
    dt: Vec<f64>,
}

fn prepare(common: &Common) -> Result<RunConfig> {
    let mut config = load_config(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.scenario.seed = seed;
    }
    if let Some(scheme) = common.scheme {
        config.scheme = scheme;
    }
    if let Some(dir) = &common.output {
        config.output_dir = Some(dir.clone());
    }
    if let Some(threads) = common.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
        config.workers = threads;
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut config = prepare(&args.common)?;
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(steps) = args.steps {
        config.n_steps = steps;
    }
    config.validate()?;
    if config.output_dir.is_none() {
        config.output_dir = Some(PathBuf::from("."));
    }
    let summary = run(&config)?;
    let dir = config.output_dir.as_deref().unwrap_or_else(|| ".".as_ref());
    println!(
        "{} {:?}: {} steps, max delta {:.3e}, total fallbacks {}, wall time {:.2?}",
        config.scheme,
        config.scenario.kind,
        config.n_steps,
        summary.max_delta,
        summary.total_fallbacks,
        summary.wall_time
    );
    println!("wrote {}", dir.join("diagnostics.csv").display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let config = prepare(&args.common)?;
    config.validate()?;
    let rows = sweep_dt(&config, &args.dt)?;
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("sweep_{}.csv", config.scheme));
    write_sweep_csv(&path, &rows)?;
    for r in &rows {
        println!(
            "dt {:<8} max delta {:.3e}  max |gamma-1| {:.3e}  fallbacks {}",
            r.dt, r.max_delta, r.max_gamma_dev, r.total_fallbacks
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
