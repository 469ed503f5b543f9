use std::collections::{HashMap, HashSet};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{tokenize, MetricError};
use crate::textunit::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NgramMode {
    /// n-grams of word tokens.
    #[default]
    Word,
    /// n-grams of characters of the space-joined token string.
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfIdfOptions {
    pub mode: NgramMode,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for TfIdfOptions {
    fn default() -> Self {
        Self {
            mode: NgramMode::Word,
            n_min: 2,
            n_max: 4,
        }
    }
}

impl TfIdfOptions {
    fn range(&self) -> RangeInclusive<usize> {
        self.n_min.max(1)..=self.n_max
    }

    fn features(&self, s: &Sentence) -> HashMap<String, f64> {
        let tokens = tokenize(s.raw());
        let mut tf = HashMap::new();
        match self.mode {
            NgramMode::Word => {
                for n in self.range() {
                    for g in tokens.tokens().windows(n) {
                        *tf.entry(g.join(" ")).or_insert(0.0) += 1.0;
                    }
                }
            }
            NgramMode::Char => {
                let chars: Vec<char> = tokens.tokens().join(" ").chars().collect();
                for n in self.range() {
                    for g in chars.windows(n) {
                        *tf.entry(g.iter().collect::<String>()).or_insert(0.0) += 1.0;
                    }
                }
            }
        }
        tf
    }
}

/// Cosine similarity of word 2-4-gram tf-idf vectors.
pub fn tfidf_cosine(a: &Sentence, b: &Sentence, background: &[Sentence]) -> Result<f64, MetricError> {
    tfidf_cosine_with(a, b, background, &TfIdfOptions::default())
}

/// tf is the raw count; `idf(g) = ln((1 + N) / (1 + df(g))) + 1` with
/// document frequencies taken over `background`. Returns 0 when either
/// vector is empty and exactly 1 when both have the same features.
pub fn tfidf_cosine_with(a: &Sentence, b: &Sentence, background: &[Sentence], opts: &TfIdfOptions) -> Result<f64, MetricError> {
    if background.is_empty() {
        return Err(MetricError::InvalidInput("tf-idf background is empty".into()));
    }
    if opts.n_min > opts.n_max {
        return Err(MetricError::InvalidInput("n-gram range is empty".into()));
    }
    let fa = opts.features(a);
    let fb = opts.features(b);
    if fa.is_empty() || fb.is_empty() {
        return Ok(0.0);
    }
    if fa == fb {
        return Ok(1.0);
    }
    let wanted: HashSet<&String> = fa.keys().chain(fb.keys()).collect();
    let mut df: HashMap<&String, f64> = HashMap::new();
    for doc in background {
        let f = opts.features(doc);
        for g in &wanted {
            if f.contains_key(*g) {
                *df.entry(*g).or_insert(0.0) += 1.0;
            }
        }
    }
    let n = background.len() as f64;
    let idf = |g: &String| ((1.0 + n) / (1.0 + df.get(g).copied().unwrap_or(0.0))).ln() + 1.0;
    let va: HashMap<&String, f64> = fa.iter().map(|(g, &c)| (g, c * idf(g))).collect();
    let vb: HashMap<&String, f64> = fb.iter().map(|(g, &c)| (g, c * idf(g))).collect();
    // Sum in key order so the result does not depend on hash iteration.
    let norm = |v: &HashMap<&String, f64>| {
        let mut keys: Vec<_> = v.keys().collect();
        keys.sort();
        keys.iter().map(|k| v[*k] * v[*k]).sum::<f64>().sqrt()
    };
    let mut shared: Vec<&&String> = va.keys().filter(|g| vb.contains_key(*g)).collect();
    shared.sort();
    let dot: f64 = shared.iter().map(|g| va[*g] * vb[*g]).sum();
    Ok((dot / (norm(&va) * norm(&vb))).clamp(0.0, 1.0))
}
