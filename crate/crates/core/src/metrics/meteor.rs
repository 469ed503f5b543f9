use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use super::{MetricError, TokenizedSentence};

/// Search nodes explored when minimizing chunks before settling for the
/// best alignment found so far.
const SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeteorAlignment {
    /// `(candidate index, reference index)` in candidate order.
    pub pairs: Vec<(usize, usize)>,
    pub exact_matches: usize,
    pub chunks: usize,
    /// False if the search budget ran out before optimality was proven.
    pub optimal: bool,
}

/// METEOR without synonym matching.
///
/// Candidate and reference unigrams are aligned by exact match, then
/// stems of the leftovers are matched. Among alignments with the most
/// matches (exact matches first) the one with the fewest chunks is used.
pub fn meteor_lite(candidate: &TokenizedSentence, reference: &TokenizedSentence) -> Result<f64, MetricError> {
    let a = meteor_alignment(candidate, reference)?;
    Ok(score(&a, candidate.len(), reference.len(), MeteorParams::default()))
}

pub(crate) fn score(a: &MeteorAlignment, cand_len: usize, ref_len: usize, p: MeteorParams) -> f64 {
    let m = a.pairs.len();
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / cand_len as f64;
    let recall = m as f64 / ref_len as f64;
    let fmean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
    let penalty = p.gamma * (a.chunks as f64 / m as f64).powf(p.beta);
    fmean * (1.0 - penalty)
}

struct Search<'a> {
    cand_word: Vec<usize>,
    cand_class: Vec<usize>,
    ref_word: &'a [usize],
    ref_class: &'a [usize],
    exact_target: Vec<usize>,
    class_target: Vec<usize>,
    /// Candidate tokens of each word / class at positions >= i.
    word_left: Vec<Vec<usize>>,
    class_left: Vec<Vec<usize>>,
    exact_done: Vec<usize>,
    class_done: Vec<usize>,
    ref_word_free: Vec<usize>,
    used: Vec<bool>,
    current: Vec<(usize, usize)>,
    best: Option<(usize, Vec<(usize, usize)>)>,
    nodes: usize,
}

impl Search<'_> {
    fn feasible(&self, i: usize) -> bool {
        let wl = &self.word_left[i];
        let cl = &self.class_left[i];
        self.exact_target
            .iter()
            .enumerate()
            .all(|(w, &t)| self.exact_done[w] + wl[w] >= t && self.ref_word_free[w] + self.exact_done[w] >= t)
            && self
                .class_target
                .iter()
                .enumerate()
                .all(|(k, &t)| self.class_done[k] + cl[k] >= t)
    }

    fn chunks_of(pairs: &[(usize, usize)]) -> usize {
        let mut chunks = 0;
        let mut prev: Option<(usize, usize)> = None;
        for &(c, r) in pairs {
            if !matches!(prev, Some((pc, pr)) if pc + 1 == c && pr + 1 == r) {
                chunks += 1;
            }
            prev = Some((c, r));
        }
        chunks
    }

    fn dfs(&mut self, i: usize, chunks: usize) {
        self.nodes += 1;
        if let Some((b, _)) = &self.best {
            if chunks >= *b || self.nodes > SEARCH_BUDGET {
                return;
            }
        }
        if i == self.cand_word.len() {
            let done = self.exact_done == self.exact_target && self.class_done == self.class_target;
            if done {
                self.best = Some((chunks, self.current.clone()));
            }
            return;
        }
        let (w, k) = (self.cand_word[i], self.cand_class[i]);
        let prev = self.current.last().copied();
        let extends = |r: usize| matches!(prev, Some((pc, pr)) if pc + 1 == i && pr + 1 == r);

        // Try the reference slot that continues the current chunk first,
        // then the rest in order.
        let mut options: Vec<usize> = (0..self.ref_word.len())
            .filter(|&r| !self.used[r] && self.ref_class[r] == k)
            .filter(|&r| {
                let exact = self.ref_word[r] == w;
                if exact {
                    self.exact_done[w] < self.exact_target[w]
                } else {
                    self.class_done[k] < self.class_target[k]
                }
            })
            .collect();
        options.sort_by_key(|&r| !extends(r));

        for r in options {
            let exact = self.ref_word[r] == w;
            let rw = self.ref_word[r];
            self.used[r] = true;
            self.ref_word_free[rw] -= 1;
            self.class_done[k] += 1;
            if exact {
                self.exact_done[w] += 1;
            }
            self.current.push((i, r));
            if self.feasible(i + 1) {
                self.dfs(i + 1, chunks + usize::from(!extends(r)));
            }
            self.current.pop();
            if exact {
                self.exact_done[w] -= 1;
            }
            self.class_done[k] -= 1;
            self.ref_word_free[rw] += 1;
            self.used[r] = false;
        }
        if self.feasible(i + 1) {
            self.dfs(i + 1, chunks);
        }
    }
}

/// The alignment [`meteor_lite`] scores.
pub fn meteor_alignment(candidate: &TokenizedSentence, reference: &TokenizedSentence) -> Result<MeteorAlignment, MetricError> {
    candidate.require_nonempty("candidate")?;
    reference.require_nonempty("reference")?;
    let stemmer = Stemmer::create(Algorithm::English);
    let (ct, rt) = (candidate.tokens(), reference.tokens());
    let mut words: HashMap<String, usize> = HashMap::new();
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut class_of_word: Vec<usize> = Vec::new();
    let mut ids = |tokens: &[String]| -> Vec<usize> {
        tokens
            .iter()
            .map(|t| {
                if let Some(&w) = words.get(t.as_str()) {
                    return w;
                }
                let next_class = classes.len();
                let class = *classes.entry(stemmer.stem(t).into_owned()).or_insert(next_class);
                class_of_word.push(class);
                words.insert(t.clone(), words.len());
                words.len() - 1
            })
            .collect()
    };
    let cand_word = ids(ct);
    let ref_word = ids(rt);
    let n_words = class_of_word.len();
    let n_classes = class_of_word.iter().max().map_or(0, |m| m + 1);
    let cand_class: Vec<usize> = cand_word.iter().map(|&w| class_of_word[w]).collect();
    let ref_class: Vec<usize> = ref_word.iter().map(|&w| class_of_word[w]).collect();

    let tally = |ids: &[usize], n: usize| {
        let mut v = vec![0usize; n];
        ids.iter().for_each(|&i| v[i] += 1);
        v
    };
    let (cw, rw) = (tally(&cand_word, n_words), tally(&ref_word, n_words));
    let (cc, rc) = (tally(&cand_class, n_classes), tally(&ref_class, n_classes));
    let exact_target: Vec<usize> = cw.iter().zip(&rw).map(|(a, b)| *a.min(b)).collect();
    let class_target: Vec<usize> = cc.iter().zip(&rc).map(|(a, b)| *a.min(b)).collect();

    let n = cand_word.len();
    let mut word_left = vec![vec![0usize; n_words]; n + 1];
    let mut class_left = vec![vec![0usize; n_classes]; n + 1];
    for i in (0..n).rev() {
        word_left[i] = word_left[i + 1].clone();
        word_left[i][cand_word[i]] += 1;
        class_left[i] = class_left[i + 1].clone();
        class_left[i][cand_class[i]] += 1;
    }

    let mut s = Search {
        cand_word,
        cand_class,
        ref_word: &ref_word,
        ref_class: &ref_class,
        exact_target,
        class_target,
        word_left,
        class_left,
        exact_done: vec![0; n_words],
        class_done: vec![0; n_classes],
        ref_word_free: rw,
        used: vec![false; ref_word.len()],
        current: Vec::new(),
        best: None,
        nodes: 0,
    };
    s.dfs(0, 0);
    let optimal = s.nodes <= SEARCH_BUDGET;
    let (chunks, pairs) = s.best.expect("a maximal alignment always exists");
    debug_assert_eq!(chunks, Search::chunks_of(&pairs));
    let exact_matches = pairs.iter().filter(|&&(c, r)| ct[c] == rt[r]).count();
    Ok(MeteorAlignment {
        pairs,
        exact_matches,
        chunks,
        optimal,
    })
}
