use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{bleu, meteor_lite, rouge1, tfidf_cosine, tokenize, MetricError};
use crate::textunit::{segment, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Bleu,
    Rouge1P,
    Rouge1R,
    Rouge1F1,
    Meteor,
    Tfidf,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Bleu,
        Metric::Rouge1P,
        Metric::Rouge1R,
        Metric::Rouge1F1,
        Metric::Meteor,
        Metric::Tfidf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Bleu => "bleu",
            Metric::Rouge1P => "rouge1_p",
            Metric::Rouge1R => "rouge1_r",
            Metric::Rouge1F1 => "rouge1_f1",
            Metric::Meteor => "meteor",
            Metric::Tfidf => "tfidf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMode {
    /// `s^(t)` against `s^(t-1)`.
    Stepwise,
    /// `s^(t)` against `s^(0)`.
    Cumulative,
}

impl DriftMode {
    pub fn name(self) -> &'static str {
        match self {
            DriftMode::Stepwise => "stepwise",
            DriftMode::Cumulative => "cumulative",
        }
    }
}

/// One metric along a trajectory; index `t - 1` holds the value at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub metric: Metric,
    pub stepwise: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl DriftSeries {
    pub fn values(&self, mode: DriftMode) -> &[f64] {
        match mode {
            DriftMode::Stepwise => &self.stepwise,
            DriftMode::Cumulative => &self.cumulative,
        }
    }
}

fn pair_scores(cand: &Sentence, reference: &Sentence, background: &[Sentence]) -> Result<[f64; 6], MetricError> {
    let (c, r) = (tokenize(cand.raw()), tokenize(reference.raw()));
    if c.is_empty() || r.is_empty() {
        // Nothing to tokenize (punctuation only): fall back to key equality.
        let v = if cand.key() == reference.key() { 1.0 } else { 0.0 };
        return Ok([v; 6]);
    }
    let rg = rouge1(&c, &r)?;
    Ok([
        bleu(&c, &r)?,
        rg.precision,
        rg.recall,
        rg.f1,
        meteor_lite(&c, &r)?,
        tfidf_cosine(cand, reference, background)?,
    ])
}

/// Stepwise and cumulative values of every [`Metric`] over
/// `states = s^(0), ..., s^(T)`. The tf-idf background is the trajectory
/// itself.
pub fn drift_series(states: &[Sentence]) -> Result<Vec<DriftSeries>, MetricError> {
    if states.len() < 2 {
        return Err(MetricError::InvalidInput("drift needs at least one step".into()));
    }
    let mut out: Vec<DriftSeries> = Metric::ALL
        .iter()
        .map(|&metric| DriftSeries {
            metric,
            stepwise: Vec::with_capacity(states.len() - 1),
            cumulative: Vec::with_capacity(states.len() - 1),
        })
        .collect();
    for t in 1..states.len() {
        let step = pair_scores(&states[t], &states[t - 1], states)?;
        let cum = pair_scores(&states[t], &states[0], states)?;
        for (k, series) in out.iter_mut().enumerate() {
            series.stepwise.push(step[k]);
            series.cumulative.push(cum[k]);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct DriftRow<'a> {
    run_id: &'a str,
    t: usize,
    metric: &'static str,
    mode: &'static str,
    value: f64,
}

/// Append `run_id, t, metric, mode, value` rows. The header is written on
/// the first row of a fresh writer.
pub fn write_drift_csv<W: Write>(w: &mut csv::Writer<W>, run_id: &str, series: &[DriftSeries]) -> csv::Result<()> {
    for s in series {
        for mode in [DriftMode::Stepwise, DriftMode::Cumulative] {
            for (i, &value) in s.values(mode).iter().enumerate() {
                w.serialize(DriftRow {
                    run_id,
                    t: i + 1,
                    metric: s.metric.name(),
                    mode: mode.name(),
                    value,
                })?;
            }
        }
    }
    Ok(())
}

/// Distinct sentences seen across a paragraph trajectory, divided by the
/// number of sentences in the seed paragraph.
pub fn normalized_diversity_ratio(paragraphs: &[Sentence]) -> Result<f64, MetricError> {
    let seed = paragraphs
        .first()
        .ok_or_else(|| MetricError::InvalidInput("empty trajectory".into()))?;
    let seed_sentences = segment(seed.raw()).len();
    if seed_sentences == 0 {
        return Err(MetricError::InvalidInput("seed paragraph has no sentences".into()));
    }
    let mut keys = HashSet::new();
    for p in paragraphs {
        for s in segment(p.raw()) {
            keys.insert(s.key().to_string());
        }
    }
    Ok(keys.len() as f64 / seed_sentences as f64)
}
