//! Surface-similarity metrics on a sentence pair and drift series along a
//! short trajectory.
//!
//! ```bash
//! cargo run --example drift_metrics
//! ```

use chainlab::metrics::{bleu, drift_series, meteor_alignment, meteor_lite, rouge1, tfidf_cosine, tokenize, DriftMode};
use chainlab::textunit::Sentence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Sentence::new("We start with a prologue.")?;
    let b = Sentence::new("We begin with a prologue.")?;
    let (ta, tb) = (tokenize(a.raw()), tokenize(b.raw()));
    let r = rouge1(&ta, &tb)?;
    let m = meteor_alignment(&ta, &tb)?;
    println!("candidate: {}\nreference: {}", a.raw(), b.raw());
    println!("  BLEU      {:.6}", bleu(&ta, &tb)?);
    println!("  ROUGE-1   P {:.3} R {:.3} F1 {:.3}", r.precision, r.recall, r.f1);
    println!("  METEOR    {:.6} ({} matches, {} chunks)", meteor_lite(&ta, &tb)?, m.pairs.len(), m.chunks);
    println!("  TF-IDF    {:.6}", tfidf_cosine(&a, &b, &[a.clone(), b.clone()])?);

    let states: Vec<Sentence> = [
        "We begin with a prologue.",
        "The narrative commences with a prologue.",
        "The story begins with a prologue that sets the scene.",
        "The narrative commences with a prologue that establishes the backdrop for the story.",
    ]
    .iter()
    .map(|s| Sentence::new(*s))
    .collect::<Result<_, _>>()?;
    println!("\n{:<10} {:>28} {:>28}", "metric", "stepwise", "cumulative");
    for series in drift_series(&states)? {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        println!(
            "{:<10} {:>28} {:>28}",
            series.metric.name(),
            fmt(series.values(DriftMode::Stepwise)),
            fmt(series.values(DriftMode::Cumulative))
        );
    }
    Ok(())
}
