//! Round-trip translation as a composition of two finite kernels.
//!
//! The English-to-French and French-to-English kernels are
//! rectangular logit tables; their composition is an English-to-English
//! chain whose matrix is the product of the two decoded matrices.
//!
//! ```bash
//! cargo run --example round_trip
//! ```

use std::sync::Arc;

use chainlab::kernels::{compose_round_trip, DecodingConfig, FiniteKernel, Kernel, Language, StepContext};
use chainlab::markov::{compose_matrices, recurrent_classes, stationary};
use chainlab::textunit::Sentence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sentences(v: &[&str]) -> Vec<Sentence> {
    v.iter().map(|s| Sentence::new(*s).unwrap()).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let en = sentences(&["We begin with a prologue.", "We start with a prologue.", "The story opens with a prologue."]);
    let fr = sentences(&["Nous commençons par un prologue.", "L'histoire s'ouvre sur un prologue."]);
    let to_fr = FiniteKernel::rectangular(en.clone(), fr.clone(), vec![vec![2.0, 0.0], vec![1.5, 0.0], vec![0.0, 2.0]])?
        .with_languages(Language::en(), Language::new("fr"));
    let to_en = FiniteKernel::rectangular(fr, en.clone(), vec![vec![1.0, 1.2, -1.0], vec![-0.5, 0.0, 1.0]])?
        .with_languages(Language::new("fr"), Language::en());

    let cfg = DecodingConfig::sampling(1.0, 1.0);
    let p = compose_matrices(&to_fr.transition_matrix(&cfg)?, &to_en.transition_matrix(&cfg)?)?;
    println!("Round-trip matrix (EN -> FR -> EN):\n{}", p.to_csv());

    let pi = stationary(&p, 1e-12, 10_000)?;
    println!("stationary: {:?}", pi.weights());
    let blocks = recurrent_classes(&p, 0.0);
    println!("recurrent classes: {:?}\n", blocks.class_labels());

    let rt = compose_round_trip(Arc::new(to_fr), Arc::new(to_en))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = en[0].clone();
    for t in 1..=6 {
        let step = rt.step(&s, &mut StepContext::new(&cfg, &mut rng).at(t))?;
        println!(
            "{t}: {:<36} via {:<40} p = {:.3}",
            step.output.raw(),
            step.intermediate.as_ref().map_or("", |i| i.raw()),
            step.step_probability.unwrap_or(f64::NAN)
        );
        s = step.output;
    }
    Ok(())
}
