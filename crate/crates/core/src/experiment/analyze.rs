use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::manifest::{read_manifest, sha256_hex, FileEntry, OutDir, MANIFEST_FILE};
use super::run::to_csv;
use super::{ExperimentError, TOOLKIT_VERSION};
use crate::metrics::{drift_series, normalized_diversity_ratio, write_drift_csv, DriftMode, DriftSeries, Metric};
use crate::runner::{read_trajectories, recurrence_from_keys, summarize, MeanStd, RecurrenceReport, StoredChain};
use crate::stats::{length_diversity_table, write_length_diversity_csv, write_text_table, LengthDiversityInput};
use crate::textunit::Unit;

pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisManifest {
    pub command: String,
    pub toolkit_version: String,
    pub inputs: Vec<FileEntry>,
    pub chains: usize,
    pub errors: Vec<InputError>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug)]
pub struct AnalysisOutcome {
    pub out: PathBuf,
    pub chains: usize,
    pub errors: Vec<InputError>,
    pub manifest: AnalysisManifest,
}

/// Labels attached to every chain of one input file.
#[derive(Debug, Clone)]
struct Source {
    name: String,
    dataset: String,
    model_decoding: String,
    deterministic: bool,
    unit: Unit,
}

struct Analyzed {
    source: usize,
    chain: StoredChain,
    report: RecurrenceReport,
    drift: Vec<DriftSeries>,
    ratio: Option<f64>,
}

fn resolve(input: &Path) -> (PathBuf, Option<PathBuf>) {
    if input.is_dir() {
        (input.join(TRAJECTORY_FILE), Some(input.to_path_buf()))
    } else {
        let dir = input.parent().filter(|d| d.join(MANIFEST_FILE).exists()).map(Path::to_path_buf);
        (input.to_path_buf(), dir)
    }
}

fn source_for(input: &Path, run_dir: Option<&Path>) -> Source {
    let name = input
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| input.display().to_string());
    match run_dir.and_then(|d| read_manifest(d).ok()) {
        Some(m) => Source {
            name,
            dataset: m.dataset,
            model_decoding: m.model_decoding,
            deterministic: m.deterministic,
            unit: m.unit,
        },
        None => Source {
            dataset: name.clone(),
            model_decoding: name.clone(),
            name,
            deterministic: false,
            unit: Unit::Sentence,
        },
    }
}

#[derive(Serialize)]
struct ChainRow<'a> {
    source: &'a str,
    run_id: &'a str,
    dataset: &'a str,
    model_decoding: &'a str,
    seed_words: usize,
    tau: usize,
    distinct_count: usize,
    cycle_length: Option<usize>,
    fixed_point: bool,
    horizon: usize,
    diversity_ratio: Option<f64>,
}

#[derive(Serialize)]
struct GroupRecurrence<'a> {
    dataset: &'a str,
    model_decoding: &'a str,
    chains: usize,
    tau_mean: f64,
    tau_std: f64,
    distinct_mean: f64,
    distinct_std: f64,
    recurred: f64,
    fixed_points: f64,
    diversity_ratio_mean: Option<f64>,
}

#[derive(Serialize)]
struct DriftAggregate<'a> {
    dataset: &'a str,
    model_decoding: &'a str,
    metric: &'static str,
    mode: &'static str,
    t: usize,
    n: usize,
    mean: f64,
    std: f64,
}

/// Analyze trajectory files (or run directories holding
/// `trajectories.jsonl`) into `out`:
///
/// * `drift.csv`, per chain; `drift_summary.csv`, mean and sample std per
///   group, metric, mode and step
/// * `recurrence.csv`, per chain; `recurrence_summary.csv`, per group
/// * `length_diversity.csv` and `length_diversity.txt`
/// * `plot.json`, `errors.json` and `manifest.json`
///
/// Chains are grouped by the dataset and model/decoding labels of the run
/// manifest next to each file, or by file name when there is none. An
/// unreadable input is recorded in `errors.json`; the call fails only when
/// nothing could be analyzed. Outputs depend only on the inputs.
pub fn cmd_analyze(inputs: &[PathBuf], out: &Path, parallelism: usize) -> Result<AnalysisOutcome, ExperimentError> {
    if inputs.is_empty() {
        return Err(ExperimentError::Data("no inputs to analyze".into()));
    }
    let mut errors = Vec::new();
    let mut sources = Vec::new();
    let mut input_entries = Vec::new();
    let mut chains: Vec<(usize, StoredChain)> = Vec::new();
    for input in inputs {
        let (file, run_dir) = resolve(input);
        let shown = file.display().to_string();
        let bytes = match std::fs::read(&file) {
            Ok(b) => b,
            Err(e) => {
                errors.push(InputError {
                    path: shown,
                    message: e.to_string(),
                });
                continue;
            }
        };
        input_entries.push(FileEntry {
            path: shown.clone(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        match read_trajectories(&file) {
            Ok(read) if read.is_empty() => errors.push(InputError {
                path: shown,
                message: "no trajectories".into(),
            }),
            Ok(read) => {
                sources.push(source_for(input, run_dir.as_deref()));
                chains.extend(read.into_iter().map(|c| (sources.len() - 1, c)));
            }
            Err(e) => errors.push(InputError {
                path: shown,
                message: e.to_string(),
            }),
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| ExperimentError::Failed(e.to_string()))?;
    let results: Vec<Result<Analyzed, InputError>> = pool.install(|| {
        chains
            .into_par_iter()
            .map(|(source, chain)| {
                let src = &sources[source];
                let fail = |e: crate::metrics::MetricError| InputError {
                    path: format!("{}:{}", src.name, chain.run_id),
                    message: e.to_string(),
                };
                let drift = drift_series(&chain.states).map_err(fail)?;
                let ratio = match src.unit {
                    Unit::Paragraph => Some(normalized_diversity_ratio(&chain.states).map_err(fail)?),
                    Unit::Sentence => None,
                };
                let report = recurrence_from_keys(&chain.keys(), src.deterministic);
                Ok(Analyzed {
                    source,
                    chain,
                    report,
                    drift,
                    ratio,
                })
            })
            .collect()
    });
    let mut analyzed = Vec::new();
    for r in results {
        match r {
            Ok(a) => analyzed.push(a),
            Err(e) => errors.push(e),
        }
    }
    if analyzed.is_empty() {
        let detail = errors.first().map_or_else(String::new, |e| format!("; first: {}: {}", e.path, e.message));
        return Err(ExperimentError::Data(format!("nothing analyzable{detail}")));
    }

    let mut groups: BTreeMap<(&str, &str), Vec<&Analyzed>> = BTreeMap::new();
    for a in &analyzed {
        let s = &sources[a.source];
        groups.entry((&s.dataset, &s.model_decoding)).or_default().push(a);
    }

    let mut dir = OutDir::create(out)?;

    let mut drift = csv::Writer::from_writer(Vec::new());
    for a in &analyzed {
        let id = format!("{}/{}", sources[a.source].name, a.chain.run_id);
        write_drift_csv(&mut drift, &id, &a.drift).map_err(|e| ExperimentError::io(out, e))?;
    }
    dir.write("drift.csv", &drift.into_inner().map_err(|e| ExperimentError::io(out, e))?)?;

    let mut drift_rows = Vec::new();
    let mut drift_plot = serde_json::Map::new();
    for ((dataset, model_decoding), members) in &groups {
        let mut per_metric = serde_json::Map::new();
        for (k, metric) in Metric::ALL.iter().enumerate() {
            let mut per_mode = serde_json::Map::new();
            for mode in [DriftMode::Stepwise, DriftMode::Cumulative] {
                let horizon = members.iter().map(|a| a.drift[k].values(mode).len()).max().unwrap_or(0);
                let (mut means, mut stds) = (Vec::new(), Vec::new());
                for t in 0..horizon {
                    let vals: Vec<f64> = members.iter().filter_map(|a| a.drift[k].values(mode).get(t).copied()).collect();
                    let ms = MeanStd::of(vals.iter().copied()).expect("some chain reaches t");
                    drift_rows.push(DriftAggregate {
                        dataset,
                        model_decoding,
                        metric: metric.name(),
                        mode: mode.name(),
                        t: t + 1,
                        n: vals.len(),
                        mean: ms.mean,
                        std: ms.std,
                    });
                    means.push(ms.mean);
                    stds.push(ms.std);
                }
                per_mode.insert(mode.name().into(), json!({ "mean": means, "std": stds }));
            }
            per_metric.insert(metric.name().into(), per_mode.into());
        }
        drift_plot.insert(format!("{dataset} | {model_decoding}"), per_metric.into());
    }
    dir.write("drift_summary.csv", &to_csv(&drift_rows))?;

    let chain_rows = analyzed.iter().map(|a| {
        let s = &sources[a.source];
        ChainRow {
            source: &s.name,
            run_id: &a.chain.run_id,
            dataset: &s.dataset,
            model_decoding: &s.model_decoding,
            seed_words: a.chain.states[0].word_count(),
            tau: a.report.tau,
            distinct_count: a.report.distinct_count,
            cycle_length: a.report.cycle_length,
            fixed_point: a.report.fixed_point,
            horizon: a.report.horizon,
            diversity_ratio: a.ratio,
        }
    });
    dir.write("recurrence.csv", &to_csv(chain_rows))?;

    let mut rec_rows = Vec::new();
    let mut rec_plot = serde_json::Map::new();
    for ((dataset, model_decoding), members) in &groups {
        let summary = summarize(members.iter().map(|a| &a.report)).expect("group is non-empty");
        let ratios: Vec<f64> = members.iter().filter_map(|a| a.ratio).collect();
        rec_rows.push(GroupRecurrence {
            dataset,
            model_decoding,
            chains: summary.chains,
            tau_mean: summary.tau.mean,
            tau_std: summary.tau.std,
            distinct_mean: summary.distinct_count.mean,
            distinct_std: summary.distinct_count.std,
            recurred: summary.recurred,
            fixed_points: summary.fixed_points,
            diversity_ratio_mean: MeanStd::of(ratios).map(|m| m.mean),
        });
        rec_plot.insert(
            format!("{dataset} | {model_decoding}"),
            json!({
                "tau": members.iter().map(|a| a.report.tau).collect::<Vec<_>>(),
                "distinct_count": members.iter().map(|a| a.report.distinct_count).collect::<Vec<_>>(),
                "tau_mean": summary.tau.mean,
                "tau_std": summary.tau.std,
                "distinct_mean": summary.distinct_count.mean,
                "distinct_std": summary.distinct_count.std,
            }),
        );
    }
    dir.write("recurrence_summary.csv", &to_csv(&rec_rows))?;

    let ld_inputs: Vec<LengthDiversityInput> = analyzed
        .iter()
        .map(|a| LengthDiversityInput {
            dataset: sources[a.source].dataset.clone(),
            model_decoding: sources[a.source].model_decoding.clone(),
            run_id: a.chain.run_id.clone(),
            seed_words: a.chain.states[0].word_count(),
            distinct_count: a.report.distinct_count,
        })
        .collect();
    let table = length_diversity_table(&ld_inputs);
    let mut buf = Vec::new();
    write_length_diversity_csv(&mut buf, &table).map_err(|e| ExperimentError::io(out, e))?;
    dir.write("length_diversity.csv", &buf)?;
    let mut buf = Vec::new();
    write_text_table(&mut buf, &table).map_err(|e| ExperimentError::io(out, e))?;
    dir.write("length_diversity.txt", &buf)?;

    let plot = json!({ "drift": drift_plot, "recurrence": rec_plot, "length_diversity": table });
    dir.write("plot.json", (serde_json::to_string_pretty(&plot).expect("plot serializes") + "\n").as_bytes())?;
    dir.write(
        "errors.json",
        (serde_json::to_string_pretty(&errors).expect("errors serialize") + "\n").as_bytes(),
    )?;

    let mut manifest = AnalysisManifest {
        command: "analyze".into(),
        toolkit_version: TOOLKIT_VERSION.into(),
        inputs: input_entries,
        chains: analyzed.len(),
        errors: errors.clone(),
        files: dir.files().to_vec(),
    };
    manifest.files = dir.finish(&manifest)?;
    Ok(AnalysisOutcome {
        out: out.to_path_buf(),
        chains: analyzed.len(),
        errors,
        manifest,
    })
}
