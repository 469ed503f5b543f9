use std::collections::HashMap;

use super::{MarkovError, TransitionMatrix};

/// Empirical kernel from observed transitions.
#[derive(Debug, Clone)]
pub struct EstimatedKernel {
    pub matrix: TransitionMatrix,
    /// Observations per source state.
    pub row_counts: Vec<u64>,
    /// Indices of rows with no observations; these are set to self-loops.
    pub unobserved: Vec<usize>,
}

/// Row-normalized transition counts over `labels`.
pub fn estimate_kernel<S: AsRef<str>>(samples: &[(S, S)], labels: &[String]) -> Result<EstimatedKernel, MarkovError> {
    let m = labels.len();
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let lookup = |s: &str| {
        index
            .get(s)
            .copied()
            .ok_or_else(|| MarkovError::Data(format!("label {s:?} is not in the state space")))
    };
    let mut counts = vec![vec![0u64; m]; m];
    for (a, b) in samples {
        let (i, j) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
        counts[i][j] += 1;
    }
    let row_counts: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let mut unobserved = Vec::new();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if row_counts[i] == 0 {
                unobserved.push(i);
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                e
            } else {
                r.iter().map(|&c| c as f64 / row_counts[i] as f64).collect()
            }
        })
        .collect();
    Ok(EstimatedKernel {
        matrix: TransitionMatrix::new(labels.to_vec(), rows)?,
        row_counts,
        unobserved,
    })
}
