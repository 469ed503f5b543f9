use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{kernel_states, referenced_endpoints, CorpusSpec, ExperimentConfig};
use super::manifest::{now_unix_ms, ChainStatus, OutDir, RunManifest};
use super::{ExperimentError, Overrides, TOOLKIT_VERSION};
use crate::kernels::spec::KernelBuilder;
use crate::kernels::Kernel;
use crate::runner::{run_batch, write_trajectories, BatchConfig, BatchOutput, RunnerError};
use crate::textunit::{load_corpus, Seed, Sentence, Unit};

/// A config with overrides applied, its kernel built and its seeds drawn.
pub(crate) struct Prepared {
    pub cfg: ExperimentConfig,
    pub kernel: Arc<dyn Kernel>,
    pub seeds: Vec<Seed>,
    pub dataset: String,
    pub unit: Unit,
    pub out: PathBuf,
}

impl Prepared {
    pub fn load(config_path: &Path, overrides: &Overrides) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::load(config_path)?;
        let origin = config_path.display().to_string();
        if let Some(p) = overrides.parallelism {
            cfg.parallelism = p;
        }
        if let Some(s) = overrides.master_seed {
            cfg.master_seed = s;
        }
        let config_err = |message: String| ExperimentError::Config {
            path: origin.clone(),
            message,
        };
        let out = overrides
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .ok_or_else(|| config_err("no output directory: set `out` or pass --out".into()))?;

        let spec = cfg.kernel_spec();
        if spec.uses_llm() {
            let ids = match &overrides.endpoint {
                Some(id) => vec![id.clone()],
                None => referenced_endpoints(spec),
            };
            for id in ids {
                let ep = cfg
                    .endpoints
                    .iter()
                    .find(|e| e.id == id)
                    .ok_or_else(|| config_err(format!("unknown endpoint `{id}`")))?;
                if std::env::var_os(&ep.auth_env_var).is_none() {
                    return Err(config_err(format!(
                        "endpoint `{id}` needs the environment variable `{}`",
                        ep.auth_env_var
                    )));
                }
            }
        }
        let kernel = KernelBuilder::new()
            .endpoints(cfg.endpoints.clone())
            .templates(cfg.templates())
            .endpoint_override(overrides.endpoint.clone())
            .build(spec)
            .map_err(|e| config_err(format!("kernel: {e}")))?;

        let (seeds, dataset, unit) = match &cfg.corpus {
            CorpusSpec::File {
                path,
                n,
                sample_seed,
                unit,
            } => {
                let corpus = load_corpus(path, *n, *sample_seed, *unit).map_err(|e| config_err(format!("corpus: {e}")))?;
                (corpus.seeds, corpus.dataset_name, *unit)
            }
            CorpusSpec::Inline { sentences } => {
                let seeds = sentences
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        Ok(Seed {
                            doc_id: format!("inline-{i}"),
                            state: Sentence::new(s.as_str())?,
                        })
                    })
                    .collect::<Result<Vec<_>, crate::textunit::TextError>>()
                    .map_err(|e| config_err(format!("corpus: {e}")))?;
                (seeds, "inline".to_string(), Unit::Sentence)
            }
            CorpusSpec::KernelStates { chains } => {
                let states = kernel_states(spec).map_err(config_err)?;
                let seeds = (0..*chains)
                    .map(|i| Seed {
                        doc_id: format!("state-{}", i % states.len()),
                        state: states[i % states.len()].clone(),
                    })
                    .collect();
                (seeds, "kernel_states".to_string(), Unit::Sentence)
            }
        };
        let dataset = cfg.dataset.clone().unwrap_or(dataset);
        Ok(Self {
            cfg,
            kernel,
            seeds,
            dataset,
            unit,
            out,
        })
    }

    pub fn kernel_label(&self) -> String {
        self.cfg.kernel_spec().label(&self.cfg.endpoints)
    }

    pub fn batch_config(&self, decoding: &crate::kernels::DecodingConfig) -> BatchConfig {
        BatchConfig {
            parallelism: self.cfg.parallelism,
            ..BatchConfig::new(self.cfg.horizon, decoding.clone(), self.cfg.master_seed)
        }
    }

    pub fn config_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.cfg).expect("config serializes")
    }
}

/// One line of `recurrence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub run_id: String,
    pub doc_id: String,
    pub dataset: String,
    pub model_decoding: String,
    pub seed_words: usize,
    pub tau: usize,
    pub distinct_count: usize,
    pub cycle_length: Option<usize>,
    pub fixed_point: bool,
    pub horizon: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub batch: BatchOutput,
    pub manifest: RunManifest,
}

pub(crate) fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub(crate) fn jsonl_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        out.extend(serde_json::to_vec(&r).expect("record serializes"));
        out.push(b'\n');
    }
    out
}

/// Run the configured batch and write `trajectories.jsonl` (complete
/// chains), `recurrence.csv`, `failures.jsonl`, the normalized
/// `config.toml` and `manifest.json`.
///
/// Partial failure is not an error; the failed chains are listed in
/// `failures.jsonl` and the manifest. If every chain fails the files are
/// still written and [`ExperimentError::Failed`] is returned.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, ExperimentError> {
    let started = now_unix_ms();
    let prep = Prepared::load(config_path, overrides)?;
    let cfg = &prep.cfg;
    let model_decoding = cfg
        .model_decoding
        .clone()
        .unwrap_or_else(|| format!("{} {}", prep.kernel_label(), cfg.decoding.label()));

    let batch = match run_batch(prep.kernel.as_ref(), &prep.seeds, &prep.batch_config(&cfg.decoding)) {
        Ok(b) => Ok(b),
        Err(RunnerError::AllFailed { chains, first }) => Err(format!("all {chains} chains failed; first error: {first}")),
        Err(e) => return Err(ExperimentError::Failed(e.to_string())),
    };

    let mut out = OutDir::create(&prep.out)?;
    out.write("config.toml", cfg.to_toml().as_bytes())?;
    let (chains, failures, statuses) = match &batch {
        Ok(b) => {
            let complete: Vec<_> = b.chains.iter().filter(|c| c.report.is_some()).collect();
            let mut jsonl = Vec::new();
            write_trajectories(&mut jsonl, complete.iter().map(|c| &c.trajectory))
                .map_err(|e| ExperimentError::io(&prep.out, e))?;
            out.write("trajectories.jsonl", &jsonl)?;
            let rows = complete.iter().map(|c| {
                let r = c.report.as_ref().expect("filtered");
                RecurrenceRow {
                    run_id: c.trajectory.run_id.clone(),
                    doc_id: c.trajectory.doc_id.clone().unwrap_or_default(),
                    dataset: prep.dataset.clone(),
                    model_decoding: model_decoding.clone(),
                    seed_words: c.trajectory.seed.word_count(),
                    tau: r.tau,
                    distinct_count: r.distinct_count,
                    cycle_length: r.cycle_length,
                    fixed_point: r.fixed_point,
                    horizon: r.horizon,
                }
            });
            out.write("recurrence.csv", &to_csv(rows))?;
            let statuses = b
                .chains
                .iter()
                .map(|c| ChainStatus {
                    run_id: c.trajectory.run_id.clone(),
                    doc_id: c.trajectory.doc_id.clone(),
                    ok: c.report.is_some(),
                    steps_completed: c.trajectory.steps.len(),
                    error: c.trajectory.error.clone(),
                })
                .collect();
            (b.chains.len(), b.failures.iter().map(|f| serde_json::to_value(f).expect("record serializes")).collect(), statuses)
        }
        Err(msg) => (prep.seeds.len(), vec![serde_json::json!({ "error": msg })], Vec::new()),
    };
    out.write("failures.jsonl", &jsonl_bytes(&failures))?;

    let mut manifest = RunManifest {
        command: "run".into(),
        toolkit_version: TOOLKIT_VERSION.into(),
        started_unix_ms: started,
        finished_unix_ms: now_unix_ms(),
        config: prep.config_json(),
        dataset: prep.dataset.clone(),
        model_decoding,
        deterministic: prep.kernel.is_deterministic(&cfg.decoding),
        unit: prep.unit,
        chains: statuses,
        files: out.files().to_vec(),
    };
    manifest.files = out.finish(&manifest)?;
    match batch {
        Ok(batch) => Ok(RunOutcome {
            out: prep.out,
            batch,
            manifest,
        }),
        Err(msg) => Err(ExperimentError::Failed(format!("{msg} ({chains} chains)"))),
    }
}
