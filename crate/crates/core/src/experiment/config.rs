//! Experiment configuration files.
//!
//! ```toml
//! schema_version = 1
//! horizon = 50
//! master_seed = 7
//! parallelism = 4          # 0 = one worker per core
//! out = "runs/greedy"      # relative to this file; --out overrides
//! dataset = "booksum"      # optional grouping labels for the stats table
//! model_decoding = "Llama greedy"
//!
//! [corpus]
//! source = "file"          # or "inline" (sentences = [...]) or "kernel_states" (chains = N)
//! path = "data/booksum.jsonl"
//! n = 150
//! sample_seed = 0
//! unit = "sentence"
//!
//! [kernel]                 # inline kernel spec, or kernel_path = "k.toml"
//! kind = "random_finite"
//! states = 200
//! seed = 42
//!
//! [decoding]
//! mode = "sampling"
//! temperature = 0.7
//! top_p = 0.9
//!
//! [simulate]               # only read by `simulate`
//! decodings = [{ mode = "greedy" }, { mode = "sampling", temperature = 0.7, top_p = 0.9 }]
//! temperature_sweep = [0.1, 0.5, 1.0, 2.0]
//! sweep_top_p = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::kernels::spec::KernelSpec;
use crate::kernels::{DecodingConfig, FiniteKernel, PromptTemplate, RandomLogits};
use crate::llm_client::EndpointConfig;
use crate::textunit::{Sentence, Unit};

pub const SCHEMA_VERSION: u32 = 1;

fn default_horizon() -> usize {
    50
}

fn default_top_p() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSpec {
    /// Sample `n` documents from a `.txt` directory or JSONL file.
    File {
        path: PathBuf,
        n: usize,
        #[serde(default)]
        sample_seed: u64,
        #[serde(default)]
        unit: Unit,
    },
    /// Seeds written into the config, in order.
    Inline { sentences: Vec<String> },
    /// `chains` chains over a finite or scripted kernel; chain `i` starts
    /// from state `i mod m`.
    KernelStates { chains: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDef {
    pub id: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default)]
    pub decodings: Vec<DecodingConfig>,
    #[serde(default)]
    pub temperature_sweep: Vec<f64>,
    /// Nucleus threshold used for every point of the temperature sweep.
    #[serde(default = "default_top_p")]
    pub sweep_top_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_decoding: Option<String>,
    pub corpus: CorpusSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_path: Option<PathBuf>,
    #[serde(default)]
    pub decoding: DecodingConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub templates: Vec<TemplateDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
}

impl ExperimentConfig {
    /// Parse and validate. Relative paths are resolved against `base`, and
    /// a `kernel_path` is read and inlined, so the result is self-contained.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self, ExperimentError> {
        let err = |message: String| ExperimentError::Config {
            path: origin.to_string(),
            message,
        };
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| err(e.to_string().trim_end().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        match (cfg.kernel.is_some(), cfg.kernel_path.take()) {
            (true, Some(_)) => return Err(err("set either [kernel] or kernel_path, not both".into())),
            (false, None) => return Err(err("missing [kernel] or kernel_path".into())),
            (false, Some(p)) => {
                let p = base.join(p);
                cfg.kernel = Some(KernelSpec::load(&p).map_err(|e| err(e.to_string()))?);
            }
            (true, None) => {}
        }
        if let CorpusSpec::File { path, .. } = &mut cfg.corpus {
            *path = base.join(&*path);
        }
        if let Some(out) = &mut cfg.out {
            *out = base.join(&*out);
        }
        cfg.validate().map_err(err)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    fn validate(&self) -> Result<(), String> {
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        self.decoding.validate().map_err(|e| format!("decoding: {e}"))?;
        for e in &self.endpoints {
            e.validate().map_err(|e| e.to_string())?;
        }
        for t in &self.templates {
            PromptTemplate::new(&t.id, &t.body).map_err(|e| format!("template `{}`: {e}", t.id))?;
        }
        match &self.corpus {
            CorpusSpec::File { n: 0, .. } => return Err("corpus.n must be at least 1".into()),
            CorpusSpec::Inline { sentences } if sentences.is_empty() => {
                return Err("corpus.sentences is empty".into())
            }
            CorpusSpec::KernelStates { chains: 0 } => return Err("corpus.chains must be at least 1".into()),
            _ => {}
        }
        if let Some(sim) = &self.simulate {
            for (i, d) in sim.decodings.iter().enumerate() {
                d.validate().map_err(|e| format!("simulate.decodings[{i}]: {e}"))?;
            }
            for &t in &sim.temperature_sweep {
                DecodingConfig::sampling(t, sim.sweep_top_p)
                    .validate()
                    .map_err(|e| format!("simulate.temperature_sweep: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> &KernelSpec {
        self.kernel.as_ref().expect("kernel resolved at parse time")
    }

    pub fn templates(&self) -> Vec<PromptTemplate> {
        self.templates
            .iter()
            .map(|t| PromptTemplate::new(&t.id, &t.body).expect("validated at parse time"))
            .collect()
    }

    /// Normalized TOML: the parsed config with defaults filled in and the
    /// kernel inlined. Parsing this text yields the same config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// The state space a `kernel_states` corpus cycles through.
pub fn kernel_states(spec: &KernelSpec) -> Result<Vec<Sentence>, String> {
    match spec {
        KernelSpec::Finite { states, .. } => states
            .iter()
            .map(|s| Sentence::new(s.as_str()).map_err(|e| e.to_string()))
            .collect(),
        KernelSpec::RandomFinite {
            states,
            seed,
            popularity_scale,
            noise_scale,
        } => FiniteKernel::random(RandomLogits {
            states: *states,
            seed: *seed,
            popularity_scale: *popularity_scale,
            noise_scale: *noise_scale,
        })
        .map(|k| k.sources().to_vec())
        .map_err(|e| e.to_string()),
        KernelSpec::Scripted { script, .. } => script
            .keys()
            .map(|s| Sentence::new(s.as_str()).map_err(|e| e.to_string()))
            .collect(),
        other => Err(format!(
            "corpus source `kernel_states` needs a finite or scripted kernel, not `{}`",
            other.label(&[])
        )),
    }
}

/// Endpoint ids an LLM-backed spec will call.
pub fn referenced_endpoints(spec: &KernelSpec) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(spec: &KernelSpec, out: &mut Vec<String>) {
        match spec {
            KernelSpec::Llm { endpoint, .. } => out.push(endpoint.clone()),
            KernelSpec::Roundtrip { forward, backward } => {
                walk(forward, out);
                walk(backward, out);
            }
            KernelSpec::Scheduled { base, .. } => walk(base, out),
            KernelSpec::Routed { routes } => routes.values().for_each(|k| walk(k, out)),
            _ => {}
        }
    }
    walk(spec, &mut out);
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
schema_version = 1
master_seed = 3

[corpus]
source = "kernel_states"
chains = 4

[kernel]
kind = "random_finite"
states = 5
seed = 42

[decoding]
mode = "greedy"
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        ExperimentConfig::parse(text, Path::new("/base"), "test.toml")
    }

    #[test]
    fn defaults_and_round_trip() {
        let cfg = parse(BASIC).unwrap();
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.parallelism, 0);
        assert!(cfg.decoding.is_greedy());
        let again = parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), cfg.to_toml());
        assert_eq!(kernel_states(cfg.kernel_spec()).unwrap().len(), 5);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = BASIC.replace("master_seed = 3", "master_seed = \"three\"");
        let msg = parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("test.toml") && msg.contains("line 3") && msg.contains("master_seed"), "{msg}");

        let unknown = BASIC.replace("chains = 4", "chains = 4\nchain = 5");
        assert!(parse(&unknown).unwrap_err().to_string().contains("chain"));

        let zero = BASIC.replace("master_seed = 3", "horizon = 0");
        assert!(parse(&zero).unwrap_err().to_string().contains("horizon"));

        let version = BASIC.replace("schema_version = 1", "schema_version = 9");
        assert!(parse(&version).unwrap_err().to_string().contains("schema_version"));

        let hot = BASIC.replace("mode = \"greedy\"", "mode = \"sampling\"\ntemperature = -1.0");
        assert!(parse(&hot).unwrap_err().to_string().contains("temperature"));
    }

    #[test]
    fn paths_resolve_against_base() {
        let text = r#"
schema_version = 1
out = "runs/a"
kernel = { kind = "identity" }
[corpus]
source = "file"
path = "data/docs.jsonl"
n = 2
"#;
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.out.as_deref(), Some(Path::new("/base/runs/a")));
        match &cfg.corpus {
            CorpusSpec::File { path, .. } => assert_eq!(path, Path::new("/base/data/docs.jsonl")),
            _ => unreachable!(),
        }
        assert!(kernel_states(cfg.kernel_spec()).is_err());
    }

    #[test]
    fn endpoints_are_collected() {
        let spec = KernelSpec::from_toml(
            r#"
kind = "roundtrip"
[forward]
kind = "llm"
endpoint = "b"
template = "translate_to"
target_lang = "French"
[backward]
kind = "llm"
endpoint = "a"
template = "translate_to"
target_lang = "English"
"#,
        )
        .unwrap();
        assert_eq!(referenced_endpoints(&spec), vec!["a", "b"]);
    }
}
