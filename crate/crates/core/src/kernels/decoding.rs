use serde::{Deserialize, Serialize};

use super::KernelError;

/// Slack used when comparing cumulative nucleus mass against `top_p`, so
/// that rounding in the softmax does not pull in an extra candidate.
pub const NUCLEUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodingMode {
    Greedy,
    Sampling,
}

fn default_temperature() -> f64 {
    0.7
}

fn default_top_p() -> f64 {
    0.9
}

/// Decoding configuration. In greedy mode `temperature` and `top_p` are
/// recorded but unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingConfig {
    pub mode: DecodingMode,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self::sampling(default_temperature(), default_top_p())
    }
}

impl DecodingConfig {
    pub fn greedy() -> Self {
        Self {
            mode: DecodingMode::Greedy,
            temperature: default_temperature(),
            top_p: default_top_p(),
            rng_seed: 0,
        }
    }

    pub fn sampling(temperature: f64, top_p: f64) -> Self {
        Self {
            mode: DecodingMode::Sampling,
            temperature,
            top_p,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    pub fn is_greedy(&self) -> bool {
        self.mode == DecodingMode::Greedy
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(KernelError::InvalidInput(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(KernelError::InvalidInput(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        Ok(())
    }

    /// Short label used in reports, e.g. `greedy` or `sampling(t=0.7,p=0.9)`.
    pub fn label(&self) -> String {
        match self.mode {
            DecodingMode::Greedy => "greedy".into(),
            DecodingMode::Sampling => format!("sampling(t={},p={})", self.temperature, self.top_p),
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Turn a row of state-level logits into next-state probabilities.
///
/// Sampling: temperature softmax followed by nucleus truncation (the
/// smallest probability-sorted prefix whose mass reaches `top_p`, ties in
/// lower index first), then renormalization. Greedy: a point mass on the
/// first maximal entry.
pub fn apply_decoding(logits: &[f64], config: &DecodingConfig) -> Result<Vec<f64>, KernelError> {
    if logits.is_empty() {
        return Err(KernelError::InvalidInput("logit row is empty".into()));
    }
    if let Some(bad) = logits.iter().find(|v| !v.is_finite()) {
        return Err(KernelError::InvalidInput(format!("non-finite logit {bad}")));
    }
    let m = logits.len();
    if config.is_greedy() {
        let mut out = vec![0.0; m];
        out[argmax(logits)] = 1.0;
        return Ok(out);
    }
    config.validate()?;

    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|z| ((z - max) / config.temperature).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);

    if config.top_p < 1.0 {
        let mut order: Vec<usize> = (0..m).collect();
        // sort_by is stable, so equal probabilities keep index order
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
        let mut cumulative = 0.0;
        let mut keep = m;
        for (rank, &i) in order.iter().enumerate() {
            cumulative += probs[i];
            if cumulative >= config.top_p - NUCLEUS_SLACK {
                keep = rank + 1;
                break;
            }
        }
        for &i in &order[keep..] {
            probs[i] = 0.0;
        }
    }
    let kept: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= kept);
    Ok(probs)
}

/// Draw an index from a probability vector using one uniform variate.
pub(crate) fn draw_index(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = i;
        if u < cumulative {
            return i;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sampling(t: f64, p: f64) -> DecodingConfig {
        DecodingConfig::sampling(t, p)
    }

    #[test]
    fn symmetric_logits_split_evenly() {
        let p = apply_decoding(&[0.0, 0.0], &sampling(0.7, 1.0)).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn softmax_of_ln2() {
        // exp(ln 2) / (exp(ln 2) + 1) = 2/3
        let p = apply_decoding(&[2f64.ln(), 0.0], &sampling(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn nucleus_keeps_smallest_prefix() {
        // logits chosen so the softmax is exactly [0.6, 0.3, 0.1]
        let logits = [0.6f64.ln(), 0.3f64.ln(), 0.1f64.ln()];
        let p = apply_decoding(&logits, &sampling(1.0, 0.8)).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn nucleus_ties_prefer_lower_index() {
        let p = apply_decoding(&[0.0, 0.0, 0.0, 0.0], &sampling(1.0, 0.5)).unwrap();
        assert_eq!(p, vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn greedy_is_argmax_lowest_index() {
        assert_eq!(apply_decoding(&[1.0, 0.5], &DecodingConfig::greedy()).unwrap(), vec![1.0, 0.0]);
        assert_eq!(apply_decoding(&[2.0, 2.0, 1.0], &DecodingConfig::greedy()).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(apply_decoding(&[f64::NAN, 0.0], &sampling(1.0, 1.0)).is_err());
        assert!(apply_decoding(&[f64::INFINITY], &DecodingConfig::greedy()).is_err());
        assert!(apply_decoding(&[], &DecodingConfig::greedy()).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(apply_decoding(&[0.0], &sampling(0.0, 0.9)).is_err());
        assert!(apply_decoding(&[0.0], &sampling(1.0, 1.5)).is_err());
        assert!(apply_decoding(&[0.0], &sampling(1.0, 0.0)).is_err());
    }

    #[test]
    fn config_toml_defaults() {
        let cfg: DecodingConfig = toml::from_str("mode = \"sampling\"").unwrap();
        assert_eq!(cfg, DecodingConfig::sampling(0.7, 0.9));
    }

    proptest! {
        #[test]
        fn output_is_probability_vector(
            row in prop::collection::vec(-30.0f64..30.0, 1..40),
            t in 0.05f64..5.0,
            p in 0.01f64..=1.0,
        ) {
            let probs = apply_decoding(&row, &sampling(t, p)).unwrap();
            prop_assert!(probs.iter().all(|&x| x >= 0.0));
            prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn argmax_mass_flattens_with_temperature(
            row in prop::collection::vec(-5.0f64..5.0, 2..20),
        ) {
            let best = argmax(&row);
            prop_assume!(row.iter().enumerate().all(|(i, &v)| i == best || v < row[best]));
            let grid = [0.1, 0.3, 0.7, 1.0, 1.5, 3.0, 10.0];
            let masses: Vec<f64> = grid
                .iter()
                .map(|&t| apply_decoding(&row, &sampling(t, 1.0)).unwrap()[best])
                .collect();
            for w in masses.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }
}
