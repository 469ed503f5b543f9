use std::path::PathBuf;
use std::process::ExitCode;

use chainlab::experiment::{cmd_analyze, cmd_report, cmd_run, cmd_simulate, ExperimentConfig, ExperimentError, Overrides};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chainlab", version, about = "Run and analyze iterated text-transformation chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 = one per core.
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Endpoint id to use for every LLM kernel.
    #[arg(long)]
    endpoint: Option<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            parallelism: self.parallelism,
            master_seed: self.master_seed,
            endpoint: self.endpoint.clone(),
        }
    }

    fn config(&self) -> Result<&PathBuf, ExperimentError> {
        self.config.as_ref().ok_or_else(|| ExperimentError::Config {
            path: "<cli>".into(),
            message: "--config is required".into(),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured batch of chains.
    Run(Common),
    /// Compare decoding configurations on one kernel.
    Simulate(Common),
    /// Compute drift, recurrence and length/diversity tables.
    Analyze {
        /// Trajectory files or run directories. Defaults to the config's output directory.
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Summarize an analysis (or run) directory as Markdown.
    Report {
        /// Analysis or run directory. Defaults to the config's output directory.
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn config_out(common: &Common) -> Result<PathBuf, ExperimentError> {
    let cfg = ExperimentConfig::load(common.config()?)?;
    cfg.out.ok_or_else(|| ExperimentError::Config {
        path: common.config().map(|p| p.display().to_string()).unwrap_or_default(),
        message: "no `out` directory to read from".into(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => c.config().and_then(|p| cmd_run(p, &c.overrides())).map(|o| {
            let failed = o.batch.failures.len();
            println!("{} chains ({failed} failed) -> {}", o.batch.chains.len(), o.out.display());
        }),
        Command::Simulate(c) => c.config().and_then(|p| cmd_simulate(p, &c.overrides())).map(|o| {
            for r in &o.results {
                println!(
                    "{:<32} tau {:>7.3} ± {:<7.3} U {:>7.3} ± {:<7.3}",
                    r.condition.label,
                    r.summary.tau.mean,
                    r.summary.tau.std,
                    r.summary.distinct_count.mean,
                    r.summary.distinct_count.std
                );
            }
            println!("-> {}", o.out.display());
        }),
        Command::Analyze { inputs, common } => (|| {
            let inputs = if inputs.is_empty() { vec![config_out(common)?] } else { inputs.clone() };
            let out = match &common.out {
                Some(o) => o.clone(),
                None if inputs[0].is_dir() => inputs[0].join("analysis"),
                None => inputs[0].with_file_name("analysis"),
            };
            let res = cmd_analyze(&inputs, &out, common.parallelism.unwrap_or(0))?;
            for e in &res.errors {
                eprintln!("skipped {}: {}", e.path, e.message);
            }
            println!("{} chains -> {}", res.chains, res.out.display());
            Ok(())
        })(),
        Command::Report { dir, common } => (|| {
            let dir = match dir {
                Some(d) => d.clone(),
                None => config_out(common)?,
            };
            print!("{}", cmd_report(&dir, common.out.as_deref())?);
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
