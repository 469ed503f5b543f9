//! End to end: write a config, run it, analyze the trajectories and
//! render the Markdown report.
//!
//! ```bash
//! cargo run --example pipeline
//! ```

use std::fs;

use chainlab::experiment::{cmd_analyze, cmd_report, cmd_run, verify_inventory, Overrides};

const CONFIG: &str = r#"
schema_version = 1
out = "run"
horizon = 25
master_seed = 7
dataset = "synthetic"

[corpus]
source = "kernel_states"
chains = 30

[kernel]
kind = "random_finite"
states = 30
seed = 11

[decoding]
mode = "sampling"
temperature = 0.7
top_p = 0.9
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("experiment.toml");
    fs::write(&config, CONFIG)?;

    let run = cmd_run(&config, &Overrides::default())?;
    println!("run: {} chains -> {}", run.batch.chains.len(), run.out.display());
    println!("changed files: {:?}", verify_inventory(&run.out, &run.manifest.files));

    let analysis = cmd_analyze(std::slice::from_ref(&run.out), &run.out.join("analysis"), 0)?;
    println!("analyzed {} chains, {} input errors\n", analysis.chains, analysis.errors.len());

    print!("{}", cmd_report(&run.out.join("analysis"), None)?);
    Ok(())
}
