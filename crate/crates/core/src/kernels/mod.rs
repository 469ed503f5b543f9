//! Stochastic transformation operators: one call maps the current sentence
//! to a draw of the next one.
//!
//! Four families implement [`Kernel`]:
//!
//! * [`FiniteKernel`] - a synthetic kernel over a fixed list of states, given
//!   by state-level logits so the same object runs under greedy and
//!   sampling decoding.
//! * [`ScriptedKernel`] - a deterministic lookup table, used to replay
//!   observed trajectories and as an identity.
//! * [`LlmKernel`] - a prompted chat-completion model.
//! * [`RoundTripKernel`] - `backward(forward(s))`, keeping the intermediate
//!   string.
//!
//! [`ScheduledKernel`] and [`PromptRouted`] add time-inhomogeneous prompt
//! schedules on top of any of them.

mod compose;
mod decoding;
mod finite;
mod llm;
mod prompt;
mod schedule;
mod scripted;
pub mod spec;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm_client::{CallRecord, LlmError};
use crate::textunit::{Sentence, TextError};

pub use compose::{compose_round_trip, RoundTripKernel};
pub use decoding::{apply_decoding, DecodingConfig, DecodingMode, NUCLEUS_SLACK};
pub use finite::{FiniteKernel, RandomLogits};
pub use llm::{LlmKernel, SentencePolicy};
pub use prompt::{render_prompt, PromptSchedule, PromptTemplate, SchedulePolicy, TemplateError};
pub use schedule::{scheduled_step, PromptRouted, ScheduledKernel};
pub use scripted::{ScriptFallback, ScriptedKernel};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("state `{0}` is not in the kernel's state space")]
    UnknownState(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("cannot compose: forward kernel maps into `{forward_codomain}` but backward kernel reads `{backward_domain}`")]
    Composition {
        forward_codomain: Language,
        backward_domain: Language,
    },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("model output rejected: {0}")]
    Output(String),
    #[error("kernel spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Text(#[from] TextError),
}

/// Language tag of a kernel's input or output side, e.g. `en` or `fr`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Language(pub String);

impl Language {
    pub fn new(tag: impl Into<String>) -> Self {
        Self(tag.into())
    }

    pub fn en() -> Self {
        Self::new("en")
    }
}

impl Default for Language {
    fn default() -> Self {
        Self::en()
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Everything a kernel may condition on besides the current state.
pub struct StepContext<'a> {
    /// Index of the iteration being computed (0 produces s^(1)).
    pub t: usize,
    pub decoding: &'a DecodingConfig,
    pub rng: &'a mut dyn RngCore,
    /// Per-chain seed forwarded to providers that accept one.
    pub chain_seed: u64,
    pub prompt: Option<&'a PromptTemplate>,
    pub prompt_index: usize,
}

impl<'a> StepContext<'a> {
    pub fn new(decoding: &'a DecodingConfig, rng: &'a mut dyn RngCore) -> Self {
        Self {
            t: 0,
            decoding,
            rng,
            chain_seed: decoding.rng_seed,
            prompt: None,
            prompt_index: 0,
        }
    }

    pub fn at(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_chain_seed(mut self, seed: u64) -> Self {
        self.chain_seed = seed;
        self
    }

    /// A child context for a delegated call, sharing the rng.
    pub fn reborrow<'b>(&'b mut self, prompt: Option<&'b PromptTemplate>, prompt_index: usize) -> StepContext<'b> {
        StepContext {
            t: self.t,
            decoding: self.decoding,
            rng: &mut *self.rng,
            chain_seed: self.chain_seed,
            prompt,
            prompt_index,
        }
    }
}

/// One draw from a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelStep {
    pub output: Sentence,
    pub chosen_index: Option<usize>,
    /// Probability of the realized draw; only finite kernels report it.
    pub step_probability: Option<f64>,
    pub prompt_index: usize,
    /// Bridge-language string for round-trip kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<Sentence>,
    /// Set when a multi-sentence model reply was cut to its first sentence.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<CallRecord>,
}

impl KernelStep {
    pub fn plain(output: Sentence, prompt_index: usize) -> Self {
        Self {
            output,
            chosen_index: None,
            step_probability: None,
            prompt_index,
            intermediate: None,
            truncated: false,
            calls: Vec::new(),
        }
    }
}

pub trait Kernel: Send + Sync + fmt::Debug {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError>;

    fn domain(&self) -> &Language;

    fn codomain(&self) -> &Language;

    /// Whether the next state is a function of the current one under this
    /// decoding configuration.
    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool;

    /// JSON description embedded in trajectory config snapshots.
    fn describe(&self) -> serde_json::Value;
}
