use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MarkovError;

/// Row sums and distribution totals must be within this of one.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Labeled row-stochastic matrix. Rows index the source state space and
/// columns the target space; within-language kernels are square with the
/// same labels on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    col_labels: Option<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

impl Serialize for TransitionMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixWire {
            labels: self.row_labels.clone(),
            col_labels: (!self.is_square_labeled()).then(|| self.col_labels.clone()),
            rows: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = MatrixWire::deserialize(d)?;
        let cols = w.col_labels.unwrap_or_else(|| w.labels.clone());
        Self::rectangular(w.labels, cols, w.rows).map_err(serde::de::Error::custom)
    }
}

impl TransitionMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        Self::rectangular(labels.clone(), labels, rows)
    }

    pub fn rectangular(row_labels: Vec<String>, col_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(MarkovError::Invalid("matrix needs at least one state".into()));
        }
        if rows.len() != row_labels.len() {
            return Err(MarkovError::Invalid(format!(
                "{} rows for {} labels",
                rows.len(),
                row_labels.len()
            )));
        }
        let mut data = Vec::with_capacity(row_labels.len() * col_labels.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != col_labels.len() {
                return Err(MarkovError::Invalid(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    col_labels.len()
                )));
            }
            if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                return Err(MarkovError::NotStochastic {
                    row: i,
                    detail: "entries must be finite and non-negative".into(),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MarkovError::NotStochastic {
                    row: i,
                    detail: format!("row sums to {sum}"),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            row_labels,
            col_labels,
            data,
        })
    }

    /// Unlabeled convenience constructor; states are named `0..m`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(labels, rows)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let m = labels.len();
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + i] = 1.0;
        }
        Self {
            col_labels: labels.clone(),
            row_labels: labels,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn is_square_labeled(&self) -> bool {
        self.row_labels == self.col_labels
    }

    pub fn labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }

    pub(crate) fn require_square(&self) -> Result<(), MarkovError> {
        if self.is_square_labeled() {
            Ok(())
        } else {
            Err(MarkovError::Dimension {
                left: format!("rows {:?}", abbreviate(&self.row_labels)),
                right: format!("columns {:?}", abbreviate(&self.col_labels)),
            })
        }
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        if self.n_rows() != self.n_cols() {
            return false;
        }
        (0..self.n_cols()).all(|j| ((0..self.n_rows()).map(|i| self.get(i, j)).sum::<f64>() - 1.0).abs() <= tol)
    }

    /// Write as CSV with a header row of column labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("from");
        for c in &self.col_labels {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (i, r) in self.row_labels.iter().enumerate() {
            out.push_str(&csv_field(r));
            for v in self.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn abbreviate(labels: &[String]) -> Vec<&str> {
    labels.iter().take(4).map(String::as_str).collect()
}

/// Probability distribution over labeled states, as a row vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self, MarkovError> {
        if labels.len() != weights.len() || labels.is_empty() {
            return Err(MarkovError::Invalid(format!(
                "{} weights for {} labels",
                weights.len(),
                labels.len()
            )));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(MarkovError::Invalid("weights must be finite and non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(MarkovError::Invalid(format!("weights sum to {sum}")));
        }
        Ok(Self { labels, weights })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self, MarkovError> {
        Self::new((0..weights.len()).map(|i| i.to_string()).collect(), weights)
    }

    pub fn uniform(labels: Vec<String>) -> Self {
        let m = labels.len() as f64;
        let weights = vec![1.0 / m; labels.len()];
        Self { labels, weights }
    }

    pub fn point_mass(labels: Vec<String>, at: usize) -> Self {
        let mut weights = vec![0.0; labels.len()];
        weights[at] = 1.0;
        Self { labels, weights }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// One step: the row vector `X P`.
    pub fn apply(&self, p: &TransitionMatrix) -> Result<Distribution, MarkovError> {
        if self.labels != p.row_labels {
            return Err(MarkovError::Dimension {
                left: format!("distribution over {:?}", abbreviate(&self.labels)),
                right: format!("matrix rows {:?}", abbreviate(&p.row_labels)),
            });
        }
        Ok(Distribution {
            labels: p.col_labels.clone(),
            weights: vec_mat(&self.weights, p),
        })
    }

    /// Convex combination `b X + (1 - b) Y` over the same labels.
    pub fn mix(&self, other: &Distribution, b: f64) -> Result<Distribution, MarkovError> {
        if self.labels != other.labels {
            return Err(MarkovError::Dimension {
                left: format!("{:?}", abbreviate(&self.labels)),
                right: format!("{:?}", abbreviate(&other.labels)),
            });
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(x, y)| b * x + (1.0 - b) * y)
            .collect();
        Ok(Distribution {
            labels: self.labels.clone(),
            weights,
        })
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn vec_mat(x: &[f64], p: &TransitionMatrix) -> Vec<f64> {
    let n = p.n_cols();
    let mut out = vec![0.0; n];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (o, &pij) in out.iter_mut().zip(p.row(i)) {
            *o += xi * pij;
        }
    }
    out
}

/// Product `P_ab P_ba` of two kernels sharing the middle state space.
pub fn compose_matrices(p_ab: &TransitionMatrix, p_ba: &TransitionMatrix) -> Result<TransitionMatrix, MarkovError> {
    if p_ab.col_labels != p_ba.row_labels {
        return Err(MarkovError::Dimension {
            left: format!("first matrix columns {:?}", abbreviate(&p_ab.col_labels)),
            right: format!("second matrix rows {:?}", abbreviate(&p_ba.row_labels)),
        });
    }
    let m = p_ab.n_rows();
    let n = p_ba.n_cols();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        data.extend(vec_mat(p_ab.row(i), p_ba));
    }
    Ok(TransitionMatrix {
        row_labels: p_ab.row_labels.clone(),
        col_labels: p_ba.col_labels.clone(),
        data,
    })
}

/// `X P^n` by repeated vector-matrix products.
pub fn evolve(x: &Distribution, p: &TransitionMatrix, n: usize) -> Result<Distribution, MarkovError> {
    p.require_square()?;
    let mut cur = x.clone();
    if n > 0 {
        cur = cur.apply(p)?;
        for _ in 1..n {
            cur.weights = vec_mat(&cur.weights, p);
        }
    }
    Ok(cur)
}
