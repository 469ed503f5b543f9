use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{linear_fit, pearson_with_p, PairedSample, StatsError};
use crate::runner::{RecurrenceReport, Trajectory};

/// One chain reduced to what the length/diversity table needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthDiversityInput {
    pub dataset: String,
    pub model_decoding: String,
    pub run_id: String,
    /// Whitespace tokens of the canonical seed.
    pub seed_words: usize,
    pub distinct_count: usize,
}

impl LengthDiversityInput {
    pub fn from_run(
        dataset: impl Into<String>,
        model_decoding: impl Into<String>,
        trajectory: &Trajectory,
        report: &RecurrenceReport,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            model_decoding: model_decoding.into(),
            run_id: trajectory.run_id.clone(),
            seed_words: trajectory.seed.word_count(),
            distinct_count: report.distinct_count,
        }
    }
}

/// A row of the length/diversity table. Statistic fields are `None` when
/// the group could not be analyzed; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub dataset: String,
    pub model_decoding: String,
    pub n: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub r_squared: Option<f64>,
    pub slope: Option<f64>,
    pub error: Option<String>,
}

impl CorrelationRow {
    fn compute(dataset: &str, model_decoding: &str, runs: &[&LengthDiversityInput]) -> Self {
        let mut row = CorrelationRow {
            dataset: dataset.to_string(),
            model_decoding: model_decoding.to_string(),
            n: runs.len(),
            r: None,
            p: None,
            r_squared: None,
            slope: None,
            error: None,
        };
        let result = PairedSample::labeled(
            runs.iter().map(|r| r.seed_words as f64).collect(),
            runs.iter().map(|r| r.distinct_count as f64).collect(),
            runs.iter().map(|r| r.run_id.clone()).collect(),
        )
        .and_then(|s| Ok((pearson_with_p(&s)?, linear_fit(&s)?)));
        match result {
            Ok(((r, p), fit)) => {
                row.r = Some(r);
                row.p = Some(p);
                row.r_squared = Some(fit.r_squared);
                row.slope = Some(fit.slope);
            }
            Err(e) => {
                row.error = Some(match e {
                    StatsError::InsufficientData(_) => format!("insufficient: {e}"),
                    StatsError::Degenerate(_) => format!("degenerate: {e}"),
                    StatsError::Invalid(_) => format!("invalid: {e}"),
                })
            }
        }
        row
    }

    /// `dataset, model, r, p, R^2, slope` with three decimals and p in
    /// four-significant-figure scientific notation.
    pub fn display_fields(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        vec![
            self.dataset.clone(),
            self.model_decoding.clone(),
            f(self.r),
            self.p.map_or_else(|| "-".to_string(), format_p),
            f(self.r_squared),
            f(self.slope),
        ]
    }

    pub fn display_line(&self) -> String {
        self.display_fields().join(", ")
    }
}

/// Scientific notation with a four-digit mantissa and a signed two-digit
/// exponent, e.g. `3.611e-02`.
pub fn format_p(p: f64) -> String {
    if p == 0.0 {
        return "0.000e+00".to_string();
    }
    let s = format!("{p:.3e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Pearson r of seed length against distinct count, one row per
/// `(dataset, model_decoding)` group in sorted order. Groups that are too
/// small or have zero variance are kept as rows with `error` set.
pub fn length_diversity_table(runs: &[LengthDiversityInput]) -> Vec<CorrelationRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&LengthDiversityInput>> = BTreeMap::new();
    for r in runs {
        groups.entry((&r.dataset, &r.model_decoding)).or_default().push(r);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    groups
        .par_iter()
        .map(|((d, m), rs)| CorrelationRow::compute(d, m, rs))
        .collect()
}

pub fn write_length_diversity_csv<W: Write>(w: W, rows: &[CorrelationRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Space-aligned table in the column order of [`CorrelationRow::display_fields`],
/// with the error (if any) appended.
pub fn write_text_table<W: Write>(mut w: W, rows: &[CorrelationRow]) -> io::Result<()> {
    let header: Vec<String> = ["dataset", "model_decoding", "r", "p", "R2", "slope"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = rows.iter().map(CorrelationRow::display_fields).collect();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for fields in &body {
        for (w, f) in widths.iter_mut().zip(fields) {
            *w = (*w).max(f.chars().count());
        }
    }
    let line = |fields: &[String]| {
        fields
            .iter()
            .zip(&widths)
            .map(|(f, &w)| format!("{f:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(w, "{}", line(&header).trim_end())?;
    for (fields, row) in body.iter().zip(rows) {
        let mut l = line(fields);
        if let Some(e) = &row.error {
            l.push_str("  # ");
            l.push_str(e);
        }
        writeln!(w, "{}", l.trim_end())?;
    }
    Ok(())
}
