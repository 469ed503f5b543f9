//! Kernel spec files.
//!
//! A kernel is described by a TOML table whose `kind` field selects the
//! family:
//!
//! ```toml
//! kind = "finite"            # states + logits (optional distinct `targets`)
//! kind = "random_finite"     # states = m, seed, popularity_scale, noise_scale
//! kind = "scripted"          # [script] "from" = "to", fallback = identity|error
//! kind = "identity"
//! kind = "llm"               # endpoint id, template id, target_lang, sentence_policy
//! kind = "roundtrip"         # [forward] and [backward] sub-tables
//! kind = "scheduled"         # templates = [...], policy = fixed|alternate, [base]
//! kind = "routed"            # [routes.<template id>] sub-tables
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    compose_round_trip, FiniteKernel, Kernel, KernelError, Language, LlmKernel, PromptRouted, PromptSchedule, PromptTemplate,
    RandomLogits, ScheduledKernel, SchedulePolicy, ScriptFallback, ScriptedKernel, SentencePolicy,
};
use crate::llm_client::{EndpointConfig, LlmClient};
use crate::textunit::Sentence;

fn default_max_tokens() -> u32 {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Finite {
        states: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        targets: Option<Vec<String>>,
        logits: Vec<Vec<f64>>,
        #[serde(default)]
        domain: Language,
        #[serde(default)]
        codomain: Language,
    },
    RandomFinite {
        states: usize,
        seed: u64,
        #[serde(default = "default_popularity")]
        popularity_scale: f64,
        #[serde(default = "default_noise")]
        noise_scale: f64,
    },
    Scripted {
        script: BTreeMap<String, String>,
        #[serde(default)]
        fallback: ScriptFallback,
        #[serde(default)]
        domain: Language,
        #[serde(default)]
        codomain: Language,
    },
    Identity {},
    Llm {
        endpoint: String,
        template: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_lang: Option<String>,
        #[serde(default)]
        sentence_policy: SentencePolicy,
        #[serde(default = "default_max_tokens")]
        max_output_tokens: u32,
        #[serde(default)]
        domain: Language,
        #[serde(default)]
        codomain: Language,
    },
    Roundtrip {
        forward: Box<KernelSpec>,
        backward: Box<KernelSpec>,
    },
    Scheduled {
        templates: Vec<String>,
        #[serde(default)]
        policy: SchedulePolicy,
        base: Box<KernelSpec>,
    },
    Routed {
        routes: BTreeMap<String, KernelSpec>,
    },
}

fn default_popularity() -> f64 {
    RandomLogits::new(1, 0).popularity_scale
}

fn default_noise() -> f64 {
    RandomLogits::new(1, 0).noise_scale
}

impl KernelSpec {
    pub fn from_toml(text: &str) -> Result<Self, KernelError> {
        toml::from_str(text).map_err(|e| KernelError::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path).map_err(|e| KernelError::Spec(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| KernelError::Spec(format!("{}: {e}", path.display())))
    }

    /// Short label for grouping results, e.g. `finite` or `llm:gpt-4o-mini`.
    pub fn label(&self, endpoints: &[EndpointConfig]) -> String {
        match self {
            Self::Finite { .. } => "finite".into(),
            Self::RandomFinite { states, seed, .. } => format!("random_finite(m={states},seed={seed})"),
            Self::Scripted { .. } => "scripted".into(),
            Self::Identity {} => "identity".into(),
            Self::Llm { endpoint, .. } => endpoints
                .iter()
                .find(|e| &e.id == endpoint)
                .map_or_else(|| format!("llm:{endpoint}"), |e| e.model_name.clone()),
            Self::Roundtrip { forward, .. } => format!("roundtrip:{}", forward.label(endpoints)),
            Self::Scheduled { base, .. } => format!("scheduled:{}", base.label(endpoints)),
            Self::Routed { .. } => "routed".into(),
        }
    }

    pub fn uses_llm(&self) -> bool {
        match self {
            Self::Llm { .. } => true,
            Self::Roundtrip { forward, backward } => forward.uses_llm() || backward.uses_llm(),
            Self::Scheduled { base, .. } => base.uses_llm(),
            Self::Routed { routes } => routes.values().any(Self::uses_llm),
            _ => false,
        }
    }
}

/// Resolves specs into kernels. Holds what LLM kernels need: endpoint
/// configs, extra templates and a shared client.
#[derive(Debug, Default, Clone)]
pub struct KernelBuilder {
    endpoints: Vec<EndpointConfig>,
    templates: Vec<PromptTemplate>,
    client: Option<Arc<LlmClient>>,
    endpoint_override: Option<String>,
}

impl KernelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn endpoints(mut self, endpoints: Vec<EndpointConfig>) -> Self {
        self.endpoints = endpoints;
        self
    }

    pub fn templates(mut self, templates: Vec<PromptTemplate>) -> Self {
        self.templates = templates;
        self
    }

    pub fn client(mut self, client: Arc<LlmClient>) -> Self {
        self.client = Some(client);
        self
    }

    /// Use this endpoint id for every LLM kernel regardless of its spec.
    pub fn endpoint_override(mut self, id: Option<String>) -> Self {
        self.endpoint_override = id;
        self
    }

    pub fn template(&self, id: &str) -> Result<PromptTemplate, KernelError> {
        if let Some(t) = self.templates.iter().find(|t| t.id() == id) {
            return Ok(t.clone());
        }
        Ok(PromptTemplate::builtin(id)?)
    }

    fn endpoint(&self, id: &str) -> Result<EndpointConfig, KernelError> {
        let id = self.endpoint_override.as_deref().unwrap_or(id);
        self.endpoints
            .iter()
            .find(|e| e.id == id)
            .cloned()
            .ok_or_else(|| KernelError::Spec(format!("unknown endpoint `{id}`")))
    }

    pub fn build(&self, spec: &KernelSpec) -> Result<Arc<dyn Kernel>, KernelError> {
        let sentences =
            |v: &[String]| v.iter().map(|s| Sentence::new(s.as_str())).collect::<Result<Vec<_>, _>>();
        let kernel: Arc<dyn Kernel> = match spec {
            KernelSpec::Finite {
                states,
                targets,
                logits,
                domain,
                codomain,
            } => {
                let sources = sentences(states)?;
                let targets = match targets {
                    Some(t) => sentences(t)?,
                    None => sources.clone(),
                };
                Arc::new(
                    FiniteKernel::rectangular(sources, targets, logits.clone())?
                        .with_languages(domain.clone(), codomain.clone()),
                )
            }
            KernelSpec::RandomFinite {
                states,
                seed,
                popularity_scale,
                noise_scale,
            } => Arc::new(FiniteKernel::random(RandomLogits {
                states: *states,
                seed: *seed,
                popularity_scale: *popularity_scale,
                noise_scale: *noise_scale,
            })?),
            KernelSpec::Scripted {
                script,
                fallback,
                domain,
                codomain,
            } => {
                let pairs = script
                    .iter()
                    .map(|(a, b)| Ok((Sentence::new(a.as_str())?, Sentence::new(b.as_str())?)))
                    .collect::<Result<Vec<_>, KernelError>>()?;
                Arc::new(ScriptedKernel::new(pairs, *fallback).with_languages(domain.clone(), codomain.clone()))
            }
            KernelSpec::Identity {} => Arc::new(ScriptedKernel::identity()),
            KernelSpec::Llm {
                endpoint,
                template,
                target_lang,
                sentence_policy,
                max_output_tokens,
                domain,
                codomain,
            } => {
                let client = self
                    .client
                    .clone()
                    .unwrap_or_else(|| Arc::new(LlmClient::http()));
                let mut k = LlmKernel::new(client, self.endpoint(endpoint)?, self.template(template)?)
                    .with_policy(*sentence_policy)
                    .with_max_output_tokens(*max_output_tokens)
                    .with_languages(domain.clone(), codomain.clone());
                if let Some(lang) = target_lang {
                    k = k.with_target_lang(lang.clone());
                }
                Arc::new(k)
            }
            KernelSpec::Roundtrip { forward, backward } => {
                Arc::new(compose_round_trip(self.build(forward)?, self.build(backward)?)?)
            }
            KernelSpec::Scheduled { templates, policy, base } => {
                let templates = templates.iter().map(|id| self.template(id)).collect::<Result<Vec<_>, _>>()?;
                Arc::new(ScheduledKernel::new(PromptSchedule::new(templates, *policy)?, self.build(base)?))
            }
            KernelSpec::Routed { routes } => {
                let routes = routes
                    .iter()
                    .map(|(id, spec)| Ok((id.clone(), self.build(spec)?)))
                    .collect::<Result<Vec<_>, KernelError>>()?;
                Arc::new(PromptRouted::new(routes)?)
            }
        };
        Ok(kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"
kind = "scripted"
fallback = "error"

[script]
"We begin with a prologue." = "We start with a prologue."
"We start with a prologue." = "We begin with a prologue."
"#;

    #[test]
    fn parses_scripted() {
        let spec = KernelSpec::from_toml(TABLE1).unwrap();
        let k = KernelBuilder::new().build(&spec).unwrap();
        assert_eq!(k.describe()["kind"], "scripted");
        assert_eq!(spec.label(&[]), "scripted");
    }

    #[test]
    fn parses_nested_roundtrip() {
        let text = r#"
kind = "roundtrip"
[forward]
kind = "scripted"
codomain = "fr"
script = { "We begin with a prologue." = "Nous commençons par un prologue." }
[backward]
kind = "scripted"
domain = "fr"
script = { "Nous commençons par un prologue." = "We begin with a prologue." }
"#;
        let spec = KernelSpec::from_toml(text).unwrap();
        let k = KernelBuilder::new().build(&spec).unwrap();
        assert_eq!(k.describe()["kind"], "roundtrip");
    }

    #[test]
    fn mismatched_roundtrip_fails_to_build() {
        let text = r#"
kind = "roundtrip"
forward = { kind = "identity" }
backward = { kind = "scripted", domain = "fr", script = {} }
"#;
        let spec = KernelSpec::from_toml(text).unwrap();
        assert!(matches!(KernelBuilder::new().build(&spec), Err(KernelError::Composition { .. })));
    }

    #[test]
    fn llm_spec_needs_known_endpoint() {
        let text = r#"
kind = "llm"
endpoint = "gateway"
template = "rephrase_p1"
sentence_policy = { policy = "retry", attempts = 2 }
"#;
        let spec = KernelSpec::from_toml(text).unwrap();
        assert!(spec.uses_llm());
        assert!(KernelBuilder::new().build(&spec).is_err());
        let ep = EndpointConfig::new("gateway", "http://localhost:9", "gpt-4o-mini");
        let b = KernelBuilder::new().endpoints(vec![ep]);
        let k = b.build(&spec).unwrap();
        assert_eq!(k.describe()["sentence_policy"]["attempts"], 2);
        assert_eq!(spec.label(&[EndpointConfig::new("gateway", "x", "gpt-4o-mini")]), "gpt-4o-mini");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(KernelSpec::from_toml("kind = \"identity\"\nbogus = 1").is_err());
        assert!(KernelSpec::from_toml("kind = \"nope\"").is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = KernelSpec::from_toml(TABLE1).unwrap();
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(KernelSpec::from_toml(&text).unwrap(), spec);
    }
}
