use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DecodingConfig, Kernel, KernelError, KernelStep, Language, PromptTemplate, StepContext};
use crate::llm_client::{CallRecord, CompletionRequest, EndpointConfig, LlmClient};
use crate::textunit::{segment, Sentence};

/// How a reply with more than one sentence becomes the next state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "policy", content = "attempts")]
pub enum SentencePolicy {
    /// Keep the first sentence and mark the step truncated.
    #[default]
    TakeFirst,
    /// Ask again up to n times, then fall back to `TakeFirst`.
    Retry(u32),
    /// Use the whole reply (paragraph mode).
    AcceptWhole,
}

/// A prompted chat model as a transformation operator.
#[derive(Debug, Clone)]
pub struct LlmKernel {
    client: Arc<LlmClient>,
    endpoint: EndpointConfig,
    template: PromptTemplate,
    target_lang: Option<String>,
    policy: SentencePolicy,
    max_output_tokens: u32,
    domain: Language,
    codomain: Language,
}

impl LlmKernel {
    pub fn new(client: Arc<LlmClient>, endpoint: EndpointConfig, template: PromptTemplate) -> Self {
        Self {
            client,
            endpoint,
            template,
            target_lang: None,
            policy: SentencePolicy::default(),
            max_output_tokens: 256,
            domain: Language::en(),
            codomain: Language::en(),
        }
    }

    pub fn with_target_lang(mut self, lang: impl Into<String>) -> Self {
        self.target_lang = Some(lang.into());
        self
    }

    pub fn with_policy(mut self, policy: SentencePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_max_output_tokens(mut self, n: u32) -> Self {
        self.max_output_tokens = n;
        self
    }

    pub fn with_languages(mut self, domain: Language, codomain: Language) -> Self {
        self.domain = domain;
        self.codomain = codomain;
        self
    }

    fn call(&self, prompt: &str, ctx: &StepContext<'_>) -> Result<(String, CallRecord), KernelError> {
        let seed = (!ctx.decoding.is_greedy()).then_some(ctx.chain_seed);
        let req = CompletionRequest::from_decoding(prompt, ctx.decoding, seed, self.max_output_tokens);
        let c = self.client.complete(&self.endpoint, &req)?;
        let record = CallRecord {
            model: self.endpoint.model_name.clone(),
            latency_ms: c.latency.as_millis() as u64,
            attempts: c.attempts,
            seed_sent: seed,
            usage: c.usage,
            system_fingerprint: c.system_fingerprint,
        };
        Ok((c.text, record))
    }
}

fn reduce(text: &str, policy: SentencePolicy) -> Result<(Sentence, bool), KernelError> {
    if policy == SentencePolicy::AcceptWhole {
        return Ok((Sentence::new(text).map_err(|_| KernelError::Output("model returned empty text".into()))?, false));
    }
    let mut parts = segment(text).into_iter();
    let first = parts
        .next()
        .ok_or_else(|| KernelError::Output("model returned empty text".into()))?;
    Ok((first, parts.next().is_some()))
}

impl Kernel for LlmKernel {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let template = ctx.prompt.unwrap_or(&self.template);
        let prompt = template.render(state.raw(), self.target_lang.as_deref())?;
        let retries = match self.policy {
            SentencePolicy::Retry(n) => n,
            _ => 0,
        };
        let mut calls = Vec::new();
        let mut result = None;
        for _ in 0..=retries {
            let (text, record) = self.call(&prompt, ctx)?;
            calls.push(record);
            let (sentence, truncated) = reduce(&text, self.policy)?;
            let done = !truncated;
            result = Some((sentence, truncated));
            if done {
                break;
            }
        }
        let (output, truncated) = result.expect("at least one call is made");
        Ok(KernelStep {
            output,
            chosen_index: None,
            step_probability: None,
            prompt_index: ctx.prompt_index,
            intermediate: None,
            truncated,
            calls,
        })
    }

    fn domain(&self) -> &Language {
        &self.domain
    }

    fn codomain(&self) -> &Language {
        &self.codomain
    }

    /// Greedy model calls are treated as a deterministic map.
    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool {
        decoding.is_greedy()
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "kind": "llm",
            "endpoint": self.endpoint.id,
            "model": self.endpoint.model_name,
            "template": self.template.id(),
            "target_lang": self.target_lang,
            "sentence_policy": self.policy,
            "max_output_tokens": self.max_output_tokens,
            "domain": self.domain,
            "codomain": self.codomain,
        })
    }
}
