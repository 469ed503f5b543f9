use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DecodingConfig, Kernel, KernelError, KernelStep, Language, StepContext};
use crate::textunit::Sentence;

/// What a scripted kernel does with a state that has no entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScriptFallback {
    #[default]
    Identity,
    Error,
}

/// Deterministic kernel given by a lookup table on canonical keys.
#[derive(Debug, Clone)]
pub struct ScriptedKernel {
    script: HashMap<String, Sentence>,
    fallback: ScriptFallback,
    domain: Language,
    codomain: Language,
}

impl ScriptedKernel {
    pub fn new(pairs: impl IntoIterator<Item = (Sentence, Sentence)>, fallback: ScriptFallback) -> Self {
        Self {
            script: pairs.into_iter().map(|(from, to)| (from.key().to_string(), to)).collect(),
            fallback,
            domain: Language::en(),
            codomain: Language::en(),
        }
    }

    pub fn from_strs(pairs: &[(&str, &str)], fallback: ScriptFallback) -> Result<Self, KernelError> {
        let pairs = pairs
            .iter()
            .map(|(a, b)| Ok((Sentence::new(*a)?, Sentence::new(*b)?)))
            .collect::<Result<Vec<_>, KernelError>>()?;
        Ok(Self::new(pairs, fallback))
    }

    /// Maps every state to itself.
    pub fn identity() -> Self {
        Self::new(std::iter::empty(), ScriptFallback::Identity)
    }

    /// A cycle `states[0] -> states[1] -> ... -> states[0]`.
    pub fn cycle(states: &[&str]) -> Result<Self, KernelError> {
        let pairs: Vec<(&str, &str)> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, states[(i + 1) % states.len()]))
            .collect();
        Self::from_strs(&pairs, ScriptFallback::Error)
    }

    pub fn with_languages(mut self, domain: Language, codomain: Language) -> Self {
        self.domain = domain;
        self.codomain = codomain;
        self
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }
}

impl Kernel for ScriptedKernel {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let output = match (self.script.get(state.key()), self.fallback) {
            (Some(next), _) => next.clone(),
            (None, ScriptFallback::Identity) => state.clone(),
            (None, ScriptFallback::Error) => return Err(KernelError::UnknownState(state.key().to_string())),
        };
        Ok(KernelStep::plain(output, ctx.prompt_index))
    }

    fn domain(&self) -> &Language {
        &self.domain
    }

    fn codomain(&self) -> &Language {
        &self.codomain
    }

    fn is_deterministic(&self, _decoding: &DecodingConfig) -> bool {
        true
    }

    fn describe(&self) -> serde_json::Value {
        let mut entries: Vec<(&String, &str)> = self.script.iter().map(|(k, v)| (k, v.key())).collect();
        entries.sort();
        json!({
            "kind": "scripted",
            "entries": entries,
            "fallback": self.fallback,
            "domain": self.domain,
            "codomain": self.codomain,
        })
    }
}
