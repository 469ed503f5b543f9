//! Greedy rephrasing trajectories that fall into 2-cycles, replayed with
//! scripted kernels, and the recurrence statistics they produce.
//!
//! ```bash
//! cargo run --example greedy_cycles
//! ```

use chainlab::kernels::{DecodingConfig, ScriptFallback, ScriptedKernel};
use chainlab::runner::{chain_rng, recurrence_stats, run_chain, ChainSetup};
use chainlab::textunit::Sentence;

fn show(name: &str, kernel: &ScriptedKernel, seed: &str) -> Result<(), Box<dyn std::error::Error>> {
    let setup = ChainSetup::new(6, DecodingConfig::greedy());
    let traj = run_chain(kernel, &Sentence::new(seed)?, &setup, &mut chain_rng(0, 0))?;
    println!("{name}");
    for (t, s) in traj.states().enumerate() {
        println!("  {t}  {}", s.raw());
    }
    let r = recurrence_stats(&traj)?;
    println!(
        "  tau = {}  U = {}  cycle length = {:?}  repeats s^({:?})\n",
        r.tau, r.distinct_count, r.cycle_length, r.partner
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let qwen = ScriptedKernel::from_strs(
        &[
            ("We begin with a prologue.", "We start with a prologue."),
            ("We start with a prologue.", "We begin with a prologue."),
        ],
        ScriptFallback::Error,
    )?;
    let llama = ScriptedKernel::from_strs(
        &[
            ("We begin with a prologue.", "The story commences with a prologue."),
            ("The story commences with a prologue.", "The narrative begins with a prologue."),
            ("The narrative begins with a prologue.", "The story commences with a prologue."),
        ],
        ScriptFallback::Error,
    )?;
    show("Qwen2.5-7B (scripted)", &qwen, "We begin with a prologue.")?;
    show("Llama-3.1-8B (scripted)", &llama, "We begin with a prologue.")?;
    Ok(())
}
