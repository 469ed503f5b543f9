//! Correlation of seed length with trajectory diversity: Pearson r with an
//! exact two-sided p-value, least-squares fit, and a grouped table.

mod table;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

pub use table::{
    format_p, length_diversity_table, write_length_diversity_csv, write_text_table,
    CorrelationRow, LengthDiversityInput,
};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least 3 paired values, got {0}")]
    InsufficientData(usize),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("invalid sample: {0}")]
    Invalid(String),
}

/// Paired observations, e.g. seed length against distinct count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Vec<String>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        let labels = (0..x.len()).map(|i| i.to_string()).collect();
        Self::labeled(x, y, labels)
    }

    pub fn labeled(x: Vec<f64>, y: Vec<f64>, labels: Vec<String>) -> Result<Self, StatsError> {
        if x.len() != y.len() || x.len() != labels.len() {
            return Err(StatsError::Invalid(format!("{} x, {} y, {} labels", x.len(), y.len(), labels.len())));
        }
        if x.len() < 3 {
            return Err(StatsError::InsufficientData(x.len()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::Invalid("non-finite value".into()));
        }
        Ok(Self { x, y, labels })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Centered sums `(Sxx, Syy, Sxy)` and the means.
    fn moments(&self) -> Result<Moments, StatsError> {
        let n = self.len() as f64;
        let mx = self.x.iter().sum::<f64>() / n;
        let my = self.y.iter().sum::<f64>() / n;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (a, b) in self.x.iter().zip(&self.y) {
            let (dx, dy) = (a - mx, b - my);
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        for (s, name) in [(sxx, "x"), (syy, "y")] {
            if s == 0.0 {
                return Err(StatsError::Degenerate(format!("{name} has zero variance")));
            }
        }
        Ok(Moments { mx, my, sxx, syy, sxy })
    }
}

struct Moments {
    mx: f64,
    my: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

/// Two-sided p-value of a sample correlation `r` over `n` pairs under the
/// null of no correlation: `P(|T| >= |t|)` for Student's t with `n - 2`
/// degrees of freedom, `t = r sqrt((n - 2) / (1 - r^2))`.
///
/// Evaluated as `I_x(df/2, 1/2)` with `x = df / (df + t^2)`, which avoids
/// the cancellation of `1 - cdf` for small p.
pub fn correlation_p_value(r: f64, n: usize) -> Result<f64, StatsError> {
    if n < 3 {
        return Err(StatsError::InsufficientData(n));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(StatsError::Invalid(format!("r = {r} outside [-1, 1]")));
    }
    let df = (n - 2) as f64;
    let r2 = r * r;
    if r2 >= 1.0 {
        return Ok(0.0);
    }
    // x = df / (df + t^2) simplifies to 1 - r^2.
    let x = 1.0 - r2;
    Ok(beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0))
}

/// Pearson correlation and its two-sided p-value.
pub fn pearson_with_p(sample: &PairedSample) -> Result<(f64, f64), StatsError> {
    let m = sample.moments()?;
    let r = (m.sxy / (m.sxx.sqrt() * m.syy.sqrt())).clamp(-1.0, 1.0);
    Ok((r, correlation_p_value(r, sample.len())?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(sample: &PairedSample) -> Result<LinearFit, StatsError> {
    let m = sample.moments()?;
    let slope = m.sxy / m.sxx;
    let intercept = m.my - slope * m.mx;
    let ss_res: f64 = sample
        .x
        .iter()
        .zip(&sample.y)
        .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
        .sum();
    let r_squared = (1.0 - ss_res / m.syy).clamp(0.0, 1.0);
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
