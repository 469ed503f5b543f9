use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{RunnerError, Trajectory};

/// Minimum number of same-interval returns before a cycle is reported for
/// a stochastic kernel.
pub const MIN_STOCHASTIC_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    /// First `t >= 1` whose key already occurred; `horizon + 1` if none did.
    pub tau: usize,
    /// Distinct keys over `t = 0..=horizon`.
    pub distinct_count: usize,
    /// The earlier index matched at `tau`.
    pub partner: Option<usize>,
    pub cycle_length: Option<usize>,
    pub fixed_point: bool,
    pub horizon: usize,
}

impl RecurrenceReport {
    pub fn recurred(&self) -> bool {
        self.tau <= self.horizon
    }
}

/// Recurrence statistics of a completed trajectory.
pub fn recurrence_stats(traj: &Trajectory) -> Result<RecurrenceReport, RunnerError> {
    if let Some(e) = &traj.error {
        return Err(RunnerError::Incomplete {
            run_id: traj.run_id.clone(),
            steps: traj.steps.len(),
            error: e.clone(),
        });
    }
    let keys = traj.keys();
    Ok(recurrence_from_keys(&keys, traj.deterministic))
}

/// Core computation over the key sequence `s^(0) .. s^(T)`.
///
/// A cycle length is reported when the suffix from the first repeat to
/// the horizon is periodic with the interval of that repeat, and either
/// the kernel is deterministic or the interval recurs at least
/// [`MIN_STOCHASTIC_REPEATS`] times.
pub fn recurrence_from_keys<S: AsRef<str>>(keys: &[S], deterministic: bool) -> RecurrenceReport {
    assert!(!keys.is_empty(), "a trajectory contains its seed");
    let horizon = keys.len() - 1;
    let mut first_seen: HashMap<&str, usize> = HashMap::with_capacity(keys.len());
    let mut hit = None;
    for (t, k) in keys.iter().enumerate() {
        let k = k.as_ref();
        match first_seen.get(k) {
            Some(&j) if hit.is_none() => hit = Some((t, j)),
            Some(_) => {}
            None => {
                first_seen.insert(k, t);
            }
        }
    }
    let distinct_count = first_seen.len();
    let Some((tau, j)) = hit else {
        return RecurrenceReport {
            tau: horizon + 1,
            distinct_count,
            partner: None,
            cycle_length: None,
            fixed_point: false,
            horizon,
        };
    };

    let d = tau - j;
    let periodic = (tau..=horizon).all(|t| keys[t].as_ref() == keys[t - d].as_ref());
    let repeats = horizon + 1 - tau;
    let cycle_length = (periodic && (deterministic || repeats >= MIN_STOCHASTIC_REPEATS)).then_some(d);
    RecurrenceReport {
        tau,
        distinct_count,
        partner: Some(j),
        cycle_length,
        fixed_point: cycle_length == Some(1),
        horizon,
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

/// Aggregate over the complete chains of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSummary {
    pub chains: usize,
    pub tau: MeanStd,
    pub distinct_count: MeanStd,
    /// Fraction of chains that repeated within the horizon.
    pub recurred: f64,
    /// Fraction of chains with a reported cycle of length 1.
    pub fixed_points: f64,
    pub cycle_histogram: Vec<(usize, usize)>,
}

pub fn summarize<'a>(reports: impl IntoIterator<Item = &'a RecurrenceReport>) -> Option<RecurrenceSummary> {
    let reports: Vec<&RecurrenceReport> = reports.into_iter().collect();
    let n = reports.len();
    let tau = MeanStd::of(reports.iter().map(|r| r.tau as f64))?;
    let distinct_count = MeanStd::of(reports.iter().map(|r| r.distinct_count as f64))?;
    let mut hist = std::collections::BTreeMap::new();
    for c in reports.iter().filter_map(|r| r.cycle_length) {
        *hist.entry(c).or_insert(0) += 1;
    }
    Some(RecurrenceSummary {
        chains: n,
        tau,
        distinct_count,
        recurred: reports.iter().filter(|r| r.recurred()).count() as f64 / n as f64,
        fixed_points: reports.iter().filter(|r| r.fixed_point).count() as f64 / n as f64,
        cycle_histogram: hist.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Quadratic reference: first t with an equal earlier key.
    fn oracle_tau(keys: &[String]) -> usize {
        for t in 1..keys.len() {
            for j in 0..t {
                if keys[t] == keys[j] {
                    return t;
                }
            }
        }
        keys.len()
    }

    #[test]
    fn first_repeat_example() {
        let r = recurrence_from_keys(&["a", "b", "c", "b"], false);
        assert_eq!((r.tau, r.partner, r.distinct_count), (3, Some(1), 3));
        assert_eq!(r.cycle_length, None);
        assert_eq!(recurrence_from_keys(&["a", "b", "c", "b"], true).cycle_length, Some(2));
    }

    #[test]
    fn fixed_point() {
        let r = recurrence_from_keys(&["a"; 6], true);
        assert_eq!((r.tau, r.distinct_count, r.fixed_point), (1, 1, true));
        assert_eq!(r.cycle_length, Some(1));
    }

    #[test]
    fn no_repeat_uses_horizon_plus_one() {
        let keys: Vec<String> = (0..=50).map(|i| format!("s{i}")).collect();
        let r = recurrence_from_keys(&keys, true);
        assert_eq!((r.tau, r.distinct_count, r.partner), (51, 51, None));
        assert!(!r.recurred());
    }

    #[test]
    fn stochastic_cycles_need_repeats() {
        assert_eq!(recurrence_from_keys(&["a", "b", "a", "b"], false).cycle_length, None);
        assert_eq!(recurrence_from_keys(&["a", "b", "a", "b", "a"], false).cycle_length, Some(2));
        assert_eq!(recurrence_from_keys(&["a", "b", "a", "b", "c"], true).cycle_length, None);
    }

    #[test]
    fn summary_uses_sample_std() {
        let a = recurrence_from_keys(&["a", "a"], true);
        let b = recurrence_from_keys(&["a", "b", "c"], true);
        let s = summarize([&a, &b]).unwrap();
        assert_eq!(s.tau.mean, 2.0);
        // taus 1 and 3: sample variance ((1-2)^2 + (3-2)^2) / 1 = 2
        assert!((s.tau.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.recurred, 0.5);
        assert_eq!(s.cycle_histogram, vec![(1, 1)]);
    }

    proptest! {
        #[test]
        fn streaming_matches_quadratic(raw in prop::collection::vec(0u8..6, 1..60), det in any::<bool>()) {
            let keys: Vec<String> = raw.iter().map(|k| k.to_string()).collect();
            let r = recurrence_from_keys(&keys, det);
            prop_assert_eq!(r.tau, oracle_tau(&keys));
            // keys before tau are pairwise distinct
            let prefix: std::collections::HashSet<_> = keys[..r.tau.min(keys.len())].iter().collect();
            prop_assert_eq!(prefix.len(), r.tau.min(keys.len()));
            prop_assert!(r.distinct_count >= r.tau.min(keys.len()) && r.distinct_count <= keys.len());
            prop_assert_eq!(r.tau == r.horizon + 1, r.distinct_count == r.horizon + 1);
            if r.fixed_point {
                prop_assert_eq!(r.cycle_length, Some(1));
            }
            if let (Some(c), Some(_)) = (r.cycle_length, r.partner) {
                for t in r.tau..keys.len() {
                    prop_assert_eq!(&keys[t], &keys[t - c]);
                }
            }
        }
    }
}
