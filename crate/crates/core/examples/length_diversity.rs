//! Pearson correlation between seed length and distinct outputs, computed
//! from per-chain rows and printed in the summary table layout.
//!
//! ```bash
//! cargo run --example length_diversity
//! ```

use std::path::Path;

use chainlab::stats::{length_diversity_table, linear_fit, write_text_table, LengthDiversityInput, PairedSample};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/length_diversity_booksum_llama.csv");
    let mut reader = csv::Reader::from_path(&path)?;
    let mut runs = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        runs.push(LengthDiversityInput {
            dataset: "booksum".into(),
            model_decoding: "Llama greedy".into(),
            run_id: rec[0].to_string(),
            seed_words: rec[1].parse()?,
            distinct_count: rec[2].parse()?,
        });
    }

    let rows = length_diversity_table(&runs);
    write_text_table(std::io::stdout(), &rows)?;

    let sample = PairedSample::new(
        runs.iter().map(|r| r.seed_words as f64).collect(),
        runs.iter().map(|r| r.distinct_count as f64).collect(),
    )?;
    let fit = linear_fit(&sample)?;
    println!(
        "\nn = {}  U ~ {:.4} + {:.4} * words  (R^2 = {:.4})",
        sample.len(),
        fit.intercept,
        fit.slope,
        fit.r_squared
    );
    Ok(())
}
