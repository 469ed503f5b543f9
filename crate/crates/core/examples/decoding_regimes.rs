//! Greedy against sampling on a synthetic 200-state kernel, plus a
//! temperature sweep. Every condition reuses the master seed.
//!
//! ```bash
//! cargo run --release --example decoding_regimes
//! ```

use chainlab::experiment::{simulate_conditions, Condition};
use chainlab::kernels::{DecodingConfig, FiniteKernel, RandomLogits};
use chainlab::runner::BatchConfig;
use chainlab::textunit::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kernel = FiniteKernel::random(RandomLogits::new(200, 42))?;
    let seeds: Vec<Seed> = (0..200)
        .map(|i| Seed {
            doc_id: format!("state-{i}"),
            state: kernel.sources()[i % kernel.len()].clone(),
        })
        .collect();
    let mut conditions = vec![
        Condition {
            label: "greedy".into(),
            decoding: DecodingConfig::greedy(),
            sweep: false,
        },
        Condition {
            label: "sampling t=0.7 p=0.9".into(),
            decoding: DecodingConfig::sampling(0.7, 0.9),
            sweep: false,
        },
    ];
    for t in [0.1, 0.5, 1.0, 2.0] {
        conditions.push(Condition {
            label: format!("sweep t={t}"),
            decoding: DecodingConfig::sampling(t, 1.0),
            sweep: true,
        });
    }
    let base = BatchConfig::new(50, DecodingConfig::greedy(), 42);
    for r in simulate_conditions(&kernel, &seeds, &base, &conditions)? {
        let s = &r.summary;
        println!(
            "{:<22} tau {:6.2} ± {:5.2}   U {:6.2} ± {:5.2}   fixed points {:4.2}",
            r.condition.label, s.tau.mean, s.tau.std, s.distinct_count.mean, s.distinct_count.std, s.fixed_points
        );
    }
    Ok(())
}
