//! Alternating two rephrasing prompts. The router replays a different
//! scripted model behavior for each prompt, so the chain over sentences
//! is no longer time-homogeneous.
//!
//! ```bash
//! cargo run --example prompt_schedule
//! ```

use std::sync::Arc;

use chainlab::kernels::{DecodingConfig, Kernel, PromptRouted, PromptSchedule, PromptTemplate, ScheduledKernel, ScriptFallback, ScriptedKernel};
use chainlab::runner::{chain_rng, recurrence_stats, run_chain, ChainSetup};
use chainlab::textunit::Sentence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p1 = PromptTemplate::builtin("rephrase_p1")?;
    let p2 = PromptTemplate::builtin("rephrase_p2")?;
    let under_p1 = ScriptedKernel::from_strs(
        &[("The river was calm.", "The river lay still."), ("The water was quiet.", "The river lay still.")],
        ScriptFallback::Identity,
    )?;
    let under_p2 = ScriptedKernel::from_strs(&[("The river lay still.", "The water was quiet.")], ScriptFallback::Identity)?;
    let routed: Arc<dyn Kernel> = Arc::new(PromptRouted::new(vec![
        (p1.id().to_string(), Arc::new(under_p1) as Arc<dyn Kernel>),
        (p2.id().to_string(), Arc::new(under_p2)),
    ])?);

    for (name, schedule) in [
        ("fixed p1", PromptSchedule::fixed(p1.clone())),
        ("alternating", PromptSchedule::alternate(vec![p1.clone(), p2.clone()])?),
    ] {
        let kernel = ScheduledKernel::new(schedule, routed.clone());
        let traj = run_chain(
            &kernel,
            &Sentence::new("The river was calm.")?,
            &ChainSetup::new(6, DecodingConfig::greedy()),
            &mut chain_rng(0, 0),
        )?;
        println!("{name} (homogeneous: {})", kernel.is_deterministic(&DecodingConfig::greedy()));
        for (t, s) in traj.states().enumerate() {
            println!("  {t}  {s}");
        }
        let r = recurrence_stats(&traj)?;
        println!("  tau = {}  U = {}  cycle = {:?}\n", r.tau, r.distinct_count, r.cycle_length);
    }
    Ok(())
}
