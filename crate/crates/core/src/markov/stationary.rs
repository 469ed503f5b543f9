use std::collections::VecDeque;

use super::matrix::vec_mat;
use super::{Distribution, MarkovError, TransitionMatrix};

/// Longest cycle searched for when power iteration oscillates.
const MAX_PERIOD: usize = 256;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `max |pi P - pi|`.
pub fn residual(pi: &Distribution, p: &TransitionMatrix) -> f64 {
    max_diff(&vec_mat(pi.weights(), p), pi.weights())
}

/// Stationary distribution by power iteration from uniform.
///
/// When the iterates do not settle within `max_iters` (periodic chains),
/// the last full cycle of iterates is averaged instead. Either way the
/// result satisfies `max |pi P - pi| < 10 tol` or an error is returned.
pub fn stationary(p: &TransitionMatrix, tol: f64, max_iters: usize) -> Result<Distribution, MarkovError> {
    p.require_square()?;
    let m = p.n_rows();
    let window = MAX_PERIOD.min(m) + 1;
    let mut cur = vec![1.0 / m as f64; m];
    let mut history: VecDeque<Vec<f64>> = VecDeque::with_capacity(window);
    for _ in 0..max_iters {
        let next = vec_mat(&cur, p);
        let change = max_diff(&next, &cur);
        if history.len() == window {
            history.pop_front();
        }
        history.push_back(std::mem::replace(&mut cur, next));
        if change < tol {
            return finish(p, cur, tol, max_iters);
        }
    }

    // Cesaro fallback: find the shortest d with x_t close to x_{t-d} and
    // average the d iterates of that cycle.
    history.push_back(cur);
    let last = history.len() - 1;
    let period = (1..=last)
        .find(|&d| max_diff(&history[last], &history[last - d]) < tol)
        .unwrap_or(last);
    let mut avg = vec![0.0; m];
    for it in history.iter().skip(last + 1 - period) {
        for (a, v) in avg.iter_mut().zip(it) {
            *a += v / period as f64;
        }
    }
    finish(p, avg, tol, max_iters)
}

fn finish(p: &TransitionMatrix, mut w: Vec<f64>, tol: f64, iterations: usize) -> Result<Distribution, MarkovError> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    let pi = Distribution::new(p.labels().to_vec(), w)?;
    let r = residual(&pi, p);
    if r < 10.0 * tol {
        Ok(pi)
    } else {
        Err(MarkovError::NonConvergence { iterations, residual: r })
    }
}
