use rand::Rng;

use super::{Distribution, MarkovError, TransitionMatrix};

/// Multiply a quantity in nats by this to get bits.
pub const NATS_TO_BITS: f64 = std::f64::consts::LOG2_E;

/// Slack allowed when checking the mixture sandwich.
pub const BOUND_TOL: f64 = 1e-9;

fn entropy_of(w: &[f64]) -> f64 {
    w.iter().filter(|&&p| p > 0.0).fold(0.0, |h, &p| h - p * p.ln())
}

/// Shannon entropy in nats.
pub fn entropy(x: &Distribution) -> f64 {
    entropy_of(x.weights())
}

/// Binary entropy `h(b)` in nats, with `h(0) = h(1) = 0`.
pub fn binary_entropy(b: f64) -> f64 {
    entropy_of(&[b, 1.0 - b])
}

/// `D(X || Y)` in nats; infinite when `X` puts mass where `Y` has none.
pub fn kl_divergence(x: &Distribution, y: &Distribution) -> Result<f64, MarkovError> {
    if x.labels() != y.labels() {
        return Err(MarkovError::Dimension {
            left: format!("{} labels", x.len()),
            right: format!("{} labels", y.len()),
        });
    }
    let mut d = 0.0;
    for (&a, &b) in x.weights().iter().zip(y.weights()) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).ln();
        }
    }
    // Rounding can leave a tiny negative sum for X close to Y.
    Ok(d.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureBounds {
    pub lower: f64,
    pub mixture_entropy: f64,
    pub upper: f64,
}

/// Entropy of `Y = bX + (1-b)XP` together with its concavity lower bound
/// and the `h(b)` upper bound.
pub fn mixture_entropy_bounds(x: &Distribution, p: &TransitionMatrix, b: f64) -> Result<MixtureBounds, MarkovError> {
    if !(0.0..=1.0).contains(&b) {
        return Err(MarkovError::Invalid(format!("mixture weight {b} outside [0, 1]")));
    }
    p.require_square()?;
    let xp = x.apply(p)?;
    let y = x.mix(&xp, b)?;
    let lower = b * entropy(x) + (1.0 - b) * entropy(&xp);
    let upper = lower + binary_entropy(b);
    let hy = entropy(&y);
    if hy < lower - BOUND_TOL || hy > upper + BOUND_TOL {
        return Err(MarkovError::Invariant(format!(
            "mixture entropy {hy} outside [{lower}, {upper}] at b={b}"
        )));
    }
    Ok(MixtureBounds {
        lower,
        mixture_entropy: hy,
        upper,
    })
}

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_stochastic<R: Rng + ?Sized>(m: usize, rng: &mut R) -> TransitionMatrix {
    let rows = (0..m).map(|_| random_simplex(m, rng)).collect();
    TransitionMatrix::from_rows(rows).expect("normalized rows are stochastic")
}

/// Random point of the open simplex.
pub fn random_simplex<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
    normalize(&mut w);
    w
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
}

/// Sinkhorn balancing of a positive matrix into a doubly stochastic one.
/// The returned rows sum to one exactly (up to rounding); columns to
/// within `tol`.
pub fn sinkhorn(mut rows: Vec<Vec<f64>>, tol: f64, max_iters: usize) -> Result<TransitionMatrix, MarkovError> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m || r.iter().any(|&v| !(v > 0.0 && v.is_finite()))) {
        return Err(MarkovError::Invalid("sinkhorn needs a square strictly positive matrix".into()));
    }
    let mut worst = f64::INFINITY;
    for _ in 0..max_iters {
        for j in 0..m {
            let s: f64 = rows.iter().map(|r| r[j]).sum();
            rows.iter_mut().for_each(|r| r[j] /= s);
        }
        rows.iter_mut().for_each(|r| normalize(r));
        worst = (0..m)
            .map(|j| (rows.iter().map(|r| r[j]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if worst < tol {
            return TransitionMatrix::from_rows(rows);
        }
    }
    Err(MarkovError::NonConvergence {
        iterations: max_iters,
        residual: worst,
    })
}
