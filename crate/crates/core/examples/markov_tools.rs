//! Finite-chain analysis: stationary distributions, recurrent classes,
//! entropy, KL contraction and the mixture bound.
//!
//! ```bash
//! cargo run --example markov_tools
//! ```

use chainlab::markov::{
    entropy, evolve, kl_divergence, mixture_entropy_bounds, random_stochastic, recurrent_classes, residual, sinkhorn,
    stationary, Distribution, TransitionMatrix, NATS_TO_BITS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two absorbing paraphrase loops fed by a transient seed.
    let p = TransitionMatrix::new(
        labels(&["seed", "begin", "start", "story", "narrative"]),
        vec![
            vec![0.0, 0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.2, 0.8],
            vec![0.0, 0.0, 0.0, 0.6, 0.4],
        ],
    )?;
    let blocks = recurrent_classes(&p, 0.0);
    println!("recurrent: {:?}  transient: {:?}", blocks.class_labels(), blocks.transient_labels());
    println!("block form:");
    for row in blocks.permuted(&p) {
        println!("  {row:?}");
    }

    let x0 = Distribution::point_mass(p.labels().to_vec(), 0);
    for n in [0, 1, 2, 5, 20] {
        let xn = evolve(&x0, &p, n)?;
        println!("H(x P^{n:<2}) = {:.4} bits", entropy(&xn) * NATS_TO_BITS);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = random_stochastic(6, &mut rng);
    let pi = stationary(&q, 1e-12, 100_000)?;
    println!("\nrandom 6-state chain: stationary residual {:.2e}", residual(&pi, &q));
    let mut x = Distribution::point_mass(q.labels().to_vec(), 0);
    for n in 0..6 {
        println!("  KL(x P^{n} || pi) = {:.6}", kl_divergence(&x, &pi)?);
        x = x.apply(&q)?;
    }

    let ds = sinkhorn(q.rows(), 1e-12, 10_000)?;
    let u = Distribution::from_weights(vec![0.7, 0.1, 0.1, 0.05, 0.03, 0.02])?;
    println!(
        "\ndoubly stochastic step: H(x) = {:.4}, H(xP) = {:.4}",
        entropy(&u),
        entropy(&u.apply(&ds)?)
    );
    let b = mixture_entropy_bounds(&u, &q, 0.3)?;
    println!(
        "mixture y = 0.3 x + 0.7 xP: {:.4} <= H(y) = {:.4} <= {:.4}",
        b.lower, b.mixture_entropy, b.upper
    );
    Ok(())
}
