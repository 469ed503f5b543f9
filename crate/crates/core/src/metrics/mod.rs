//! Sentence-pair similarity metrics and the drift series built from them.
//!
//! Every metric shares one tokenizer ([`tokenize`]): split on Unicode
//! whitespace, trim non-alphanumeric characters from both ends of each
//! token, lowercase, drop empties. Its behaviour is pinned by
//! [`TOKENIZER_VERSION`]; any change to it must bump the version.

mod drift;
mod meteor;
mod overlap;
mod tfidf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use drift::{drift_series, normalized_diversity_ratio, write_drift_csv, DriftMode, DriftSeries, Metric};
pub use meteor::{meteor_alignment, meteor_lite, MeteorAlignment, MeteorParams};
pub use overlap::{bleu, bleu_with, rouge1, Rouge1};
pub use tfidf::{tfidf_cosine, tfidf_cosine_with, NgramMode, TfIdfOptions};

pub const TOKENIZER_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Lowercased word tokens of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedSentence {
    tokens: Vec<String>,
}

impl TokenizedSentence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<(), MetricError> {
        if self.is_empty() {
            Err(MetricError::InvalidInput(format!("{what} has no tokens")))
        } else {
            Ok(())
        }
    }
}

pub fn tokenize(text: &str) -> TokenizedSentence {
    let tokens = text
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    TokenizedSentence { tokens }
}

/// Contiguous `n`-grams of `tokens`.
pub(crate) fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    tokens.windows(n.max(1)).filter(move |_| n >= 1)
}
