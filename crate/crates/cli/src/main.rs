use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tacgrasp_cli::{commands, CliError, RunConfig, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "tacgrasp", version, about = "Simulated tactile grasping: datasets, training and experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for simulation, splits and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Data root (defaults to $TACGRASP_DATA).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Validate the config and print the plan without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Args)]
struct DataArgs {
    /// Object count, list, `desk` or `all`.
    #[arg(long)]
    objects: Option<String>,
    /// Grasps per object.
    #[arg(long)]
    grasps: Option<usize>,
    /// `classification` or `success`.
    #[arg(long)]
    task: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate grasps and write a dataset.
    Simulate(DataArgs),
    /// Train a network on a dataset.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Continue from the checkpoint's saved training state.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a trained network on its validation grasps.
    Eval(DataArgs),
    /// Retrain on every sensor subset and score the vote ensemble.
    Sensitivity,
    /// Score the success network over a torque sweep.
    TorqueSweep,
    /// Summarise the latest reports and draw plots.
    Report,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in &cli.global.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.global.out {
        cfg.data = o.clone();
    }
    let data = match &cli.command {
        Command::Simulate(d) | Command::Eval(d) | Command::Train { data: d, .. } => Some(d),
        _ => None,
    };
    if let Some(d) = data {
        if let Some(o) = &d.objects {
            cfg.set("objects", o)?;
        }
        if let Some(g) = d.grasps {
            cfg.grasps = g;
        }
        if let Some(t) = &d.task {
            cfg.set("task", t)?;
        }
    }
    if let Command::Train { resume: true, .. } = cli.command {
        cfg.resume = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli)?;
    if let Some(j) = cli.global.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    }
    let dry = cli.global.dry_run;
    match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, dry),
        Command::Train { .. } => commands::train(&cfg, dry),
        Command::Eval(_) => commands::eval(&cfg, dry),
        Command::Sensitivity => commands::sensitivity(&cfg, dry),
        Command::TorqueSweep => commands::torque_sweep(&cfg, dry),
        Command::Report => commands::report(&cfg, dry),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
