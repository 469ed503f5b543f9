//! Paragraph chains: the state is a whole paragraph and diversity is
//! counted in sentences, normalized by the seed's sentence count.
//!
//! ```bash
//! cargo run --example paragraph_mode
//! ```

use chainlab::kernels::{DecodingConfig, ScriptedKernel};
use chainlab::metrics::normalized_diversity_ratio;
use chainlab::runner::{chain_rng, run_chain, ChainSetup};
use chainlab::textunit::{Paragraph, Sentence};

fn ratio(name: &str, kernel: &ScriptedKernel, seed: &Sentence) -> Result<(), Box<dyn std::error::Error>> {
    let traj = run_chain(kernel, seed, &ChainSetup::new(8, DecodingConfig::greedy()), &mut chain_rng(0, 0))?;
    let states: Vec<Sentence> = traj.states().cloned().collect();
    println!("{name:<12} diversity ratio = {:.3}", normalized_diversity_ratio(&states)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = "The fox ran. It was fast. Nobody saw it.";
    let b = "A fox sprinted. It moved quickly. No one noticed.";
    let seed = Paragraph::parse(a, "doc-1")?.to_state();
    println!("seed: {} sentences", Paragraph::parse(a, "doc-1")?.sentences().len());

    ratio("identity", &ScriptedKernel::identity(), &seed)?;
    ratio("alternating", &ScriptedKernel::cycle(&[a, b])?, &seed)?;
    Ok(())
}
