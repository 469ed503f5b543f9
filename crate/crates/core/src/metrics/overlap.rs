use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ngrams, MetricError, TokenizedSentence};

fn counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for g in ngrams(tokens, n) {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

/// Matches of candidate n-grams, each clipped by its reference count.
fn clipped_matches(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let c = counts(cand, n);
    let r = counts(reference, n);
    let matched = c.iter().map(|(g, &k)| k.min(*r.get(g).unwrap_or(&0))).sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Sentence BLEU with up to 4-grams.
pub fn bleu(candidate: &TokenizedSentence, reference: &TokenizedSentence) -> Result<f64, MetricError> {
    bleu_with(candidate, reference, 4)
}

/// Sentence BLEU: geometric mean of clipped n-gram precisions for
/// `n = 1..=max_n` times the brevity penalty. Precisions for `n >= 2` are
/// add-one smoothed, `(matches + 1) / (total + 1)`; the unigram precision
/// is not, so a pair with no shared word scores 0.
pub fn bleu_with(candidate: &TokenizedSentence, reference: &TokenizedSentence, max_n: usize) -> Result<f64, MetricError> {
    candidate.require_nonempty("candidate")?;
    reference.require_nonempty("reference")?;
    if max_n == 0 {
        return Err(MetricError::InvalidInput("max_n must be at least 1".into()));
    }
    let (c, r) = (candidate.tokens(), reference.tokens());
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (m, total) = clipped_matches(c, r, n);
        let p = if n == 1 {
            m as f64 / total as f64
        } else {
            (m as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return Ok(0.0);
        }
        log_sum += p.ln();
    }
    let bp = if c.len() < r.len() {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    } else {
        1.0
    };
    Ok(bp * (log_sum / max_n as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rouge1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Unigram overlap, clipped by reference multiplicity.
pub fn rouge1(candidate: &TokenizedSentence, reference: &TokenizedSentence) -> Result<Rouge1, MetricError> {
    candidate.require_nonempty("candidate")?;
    reference.require_nonempty("reference")?;
    let (m, _) = clipped_matches(candidate.tokens(), reference.tokens(), 1);
    let precision = m as f64 / candidate.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Rouge1 { precision, recall, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn bleu_identity() {
        let t = tokenize("one two three four five six seven eight nine ten");
        assert_eq!(bleu(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn bleu_begin_start() {
        // 1-grams: we, with, a, prologue match          -> 4/5
        // 2-grams: "with a", "a prologue" match of 4     -> (2+1)/(4+1)
        // 3-grams: "with a prologue" of 3                -> (1+1)/(3+1)
        // 4-grams: none of 2                             -> (0+1)/(2+1)
        // equal lengths, BP = 1
        let got = bleu(&tokenize("We start with a prologue."), &tokenize("We begin with a prologue.")).unwrap();
        let want = (0.8f64 * 0.6 * 0.5 * (1.0 / 3.0)).powf(0.25);
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.531_829_589_7, epsilon = 1e-9);
    }

    #[test]
    fn bleu_disjoint_is_zero() {
        assert_eq!(bleu(&tokenize("alpha beta gamma"), &tokenize("delta epsilon zeta")).unwrap(), 0.0);
    }

    #[test]
    fn bleu_brevity_and_permutation() {
        // cand "a prologue" vs ref "we begin with a prologue":
        // p1 = 2/2, p2 = (1+1)/(1+1), p3 = (0+1)/(0+1), p4 = 1; BP = exp(1 - 5/2)
        let got = bleu(&tokenize("a prologue"), &tokenize("we begin with a prologue")).unwrap();
        assert_abs_diff_eq!(got, (-1.5f64).exp(), epsilon = 1e-12);
        // Reversing the candidate keeps p1 but loses every higher-order match.
        let r = tokenize("we begin with a prologue");
        let reversed = tokenize("prologue a with begin we");
        assert!(bleu(&reversed, &r).unwrap() < bleu(&r, &r).unwrap());
        assert!(bleu(&tokenize(""), &r).is_err());
    }

    #[test]
    fn rouge_examples() {
        let r = rouge1(&tokenize("the cat"), &tokenize("the cat sat")).unwrap();
        assert_eq!(r.precision, 1.0);
        assert_abs_diff_eq!(r.recall, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.f1, 0.8, epsilon = 1e-15);
        let d = rouge1(&tokenize("x y"), &tokenize("z")).unwrap();
        assert_eq!((d.precision, d.recall, d.f1), (0.0, 0.0, 0.0));
        let t = tokenize("same words here");
        assert_eq!(rouge1(&t, &t).unwrap(), Rouge1 { precision: 1.0, recall: 1.0, f1: 1.0 });
        // clipping: "the the the" vs "the cat" matches once
        assert_abs_diff_eq!(rouge1(&tokenize("the the the"), &tokenize("the cat")).unwrap().precision, 1.0 / 3.0, epsilon = 1e-15);
    }

    fn words() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "the", "of"]), 1..15).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn ranges_and_f1(a in words(), b in words()) {
            let (ta, tb) = (tokenize(&a), tokenize(&b));
            let s = bleu(&ta, &tb).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            let r = rouge1(&ta, &tb).unwrap();
            for v in [r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let hm = if r.precision + r.recall == 0.0 { 0.0 } else { 2.0 * r.precision * r.recall / (r.precision + r.recall) };
            prop_assert_eq!(r.f1, hm);
        }
    }
}
