use std::collections::BTreeSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::TransitionMatrix;

/// Canonical block form of a chain: closed communicating classes first,
/// transient states last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDecomposition {
    /// State indices of each recurrent class, ascending within a class.
    pub recurrent_classes: Vec<Vec<usize>>,
    pub transient_states: Vec<usize>,
    /// `permutation[k]` is the original index placed at position `k`.
    pub permutation: Vec<usize>,
    pub labels: Vec<String>,
}

impl BlockDecomposition {
    pub fn class_labels(&self) -> Vec<Vec<&str>> {
        self.recurrent_classes
            .iter()
            .map(|c| c.iter().map(|&i| self.labels[i].as_str()).collect())
            .collect()
    }

    pub fn transient_labels(&self) -> Vec<&str> {
        self.transient_states.iter().map(|&i| self.labels[i].as_str()).collect()
    }

    pub fn is_recurrent(&self, i: usize) -> bool {
        self.recurrent_classes.iter().any(|c| c.contains(&i))
    }

    /// `P` reordered by the permutation.
    pub fn permuted(&self, p: &TransitionMatrix) -> Vec<Vec<f64>> {
        self.permutation
            .iter()
            .map(|&i| self.permutation.iter().map(|&j| p.get(i, j)).collect())
            .collect()
    }

    /// Sub-matrix of `P` restricted to recurrent class `k`.
    pub fn class_block(&self, p: &TransitionMatrix, k: usize) -> Vec<Vec<f64>> {
        sub_block(p, &self.recurrent_classes[k], &self.recurrent_classes[k])
    }

    /// Transient-to-transient block.
    pub fn transient_block(&self, p: &TransitionMatrix) -> Vec<Vec<f64>> {
        sub_block(p, &self.transient_states, &self.transient_states)
    }

    /// Transient-to-class block for class `k`.
    pub fn exit_block(&self, p: &TransitionMatrix, k: usize) -> Vec<Vec<f64>> {
        sub_block(p, &self.transient_states, &self.recurrent_classes[k])
    }
}

fn sub_block(p: &TransitionMatrix, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| cols.iter().map(|&j| p.get(i, j)).collect()).collect()
}

/// Closed classes of the graph with an edge wherever `P[i][j] > edge_threshold`.
///
/// Panics if `p` is not square.
pub fn recurrent_classes(p: &TransitionMatrix, edge_threshold: f64) -> BlockDecomposition {
    assert_eq!(p.n_rows(), p.n_cols(), "block decomposition needs a square matrix");
    let m = p.n_rows();
    let mut g = DiGraph::<(), ()>::with_capacity(m, 0);
    let nodes: Vec<_> = (0..m).map(|_| g.add_node(())).collect();
    for i in 0..m {
        for (j, &v) in p.row(i).iter().enumerate() {
            if v > edge_threshold {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp_of = vec![0usize; m];
    for (c, members) in sccs.iter().enumerate() {
        for n in members {
            comp_of[n.index()] = c;
        }
    }

    let mut recurrent = Vec::new();
    let mut transient = BTreeSet::new();
    for (c, members) in sccs.iter().enumerate() {
        let mut idx: Vec<usize> = members.iter().map(|n| n.index()).collect();
        idx.sort_unstable();
        let closed = idx
            .iter()
            .all(|&i| g.neighbors(nodes[i]).all(|n| comp_of[n.index()] == c));
        if closed {
            recurrent.push(idx);
        } else {
            transient.extend(idx);
        }
    }
    recurrent.sort_by_key(|c| c[0]);
    let transient_states: Vec<usize> = transient.into_iter().collect();
    let permutation = recurrent.iter().flatten().chain(&transient_states).copied().collect();
    BlockDecomposition {
        recurrent_classes: recurrent,
        transient_states,
        permutation,
        labels: p.labels().to_vec(),
    }
}
