use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::manifest::{now_unix_ms, OutDir, RunManifest};
use super::run::{to_csv, Prepared};
use super::{ExperimentError, Overrides, TOOLKIT_VERSION};
use crate::kernels::{DecodingConfig, Kernel};
use crate::runner::{run_batch, summarize, BatchConfig, RecurrenceReport, RecurrenceSummary};
use crate::textunit::Seed;

/// A decoding configuration under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub label: String,
    pub decoding: DecodingConfig,
    /// Part of the temperature sweep rather than the named comparisons.
    pub sweep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub reports: Vec<RecurrenceReport>,
    pub summary: RecurrenceSummary,
    pub failures: usize,
}

/// Run the same kernel and seeds under each condition. Every condition
/// reuses the master seed, so chain `i` draws from the same random stream
/// in all of them.
pub fn simulate_conditions(
    kernel: &dyn Kernel,
    seeds: &[Seed],
    base: &BatchConfig,
    conditions: &[Condition],
) -> Result<Vec<ConditionResult>, ExperimentError> {
    conditions
        .iter()
        .map(|c| {
            let cfg = BatchConfig {
                decoding: c.decoding.clone(),
                ..base.clone()
            };
            let out = run_batch(kernel, seeds, &cfg).map_err(|e| ExperimentError::Failed(format!("{}: {e}", c.label)))?;
            let reports: Vec<RecurrenceReport> = out.reports().cloned().collect();
            let summary = summarize(&reports).expect("at least one chain completed");
            Ok(ConditionResult {
                condition: c.clone(),
                reports,
                summary,
                failures: out.failures.len(),
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct SimulationOutcome {
    pub out: PathBuf,
    pub results: Vec<ConditionResult>,
    pub manifest: RunManifest,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    condition: &'a str,
    mode: &'a str,
    temperature: f64,
    top_p: f64,
    chains: usize,
    failures: usize,
    tau_mean: f64,
    tau_std: f64,
    distinct_mean: f64,
    distinct_std: f64,
    recurred: f64,
    fixed_points: f64,
}

#[derive(Serialize)]
struct ChainRow<'a> {
    condition: &'a str,
    chain: usize,
    tau: usize,
    distinct_count: usize,
    cycle_length: Option<usize>,
}

fn conditions(prep: &Prepared) -> Vec<Condition> {
    let spec = prep.cfg.simulate.clone().unwrap_or(super::SimulateSpec {
        decodings: Vec::new(),
        temperature_sweep: Vec::new(),
        sweep_top_p: 1.0,
    });
    let mut out: Vec<Condition> = spec
        .decodings
        .iter()
        .map(|d| Condition {
            label: d.label(),
            decoding: d.clone(),
            sweep: false,
        })
        .collect();
    for &t in &spec.temperature_sweep {
        let d = DecodingConfig::sampling(t, spec.sweep_top_p);
        out.push(Condition {
            label: format!("sweep {}", d.label()),
            decoding: d,
            sweep: true,
        });
    }
    if out.is_empty() {
        out.push(Condition {
            label: prep.cfg.decoding.label(),
            decoding: prep.cfg.decoding.clone(),
            sweep: false,
        });
    }
    out
}

/// Run every `[simulate]` condition and write `simulate_summary.csv`
/// (mean and sample std of tau and U per condition), `simulate_chains.csv`
/// (the per-chain distributions), `simulate_sweep.csv` and
/// `plot_simulate.json`.
pub fn cmd_simulate(config_path: &Path, overrides: &Overrides) -> Result<SimulationOutcome, ExperimentError> {
    let started = now_unix_ms();
    let prep = Prepared::load(config_path, overrides)?;
    let conds = conditions(&prep);
    let results = simulate_conditions(
        prep.kernel.as_ref(),
        &prep.seeds,
        &prep.batch_config(&prep.cfg.decoding),
        &conds,
    )?;

    let mut out = OutDir::create(&prep.out)?;
    out.write("config.toml", prep.cfg.to_toml().as_bytes())?;
    let summary_rows = results.iter().map(|r| SummaryRow {
        condition: &r.condition.label,
        mode: if r.condition.decoding.is_greedy() { "greedy" } else { "sampling" },
        temperature: r.condition.decoding.temperature,
        top_p: r.condition.decoding.top_p,
        chains: r.summary.chains,
        failures: r.failures,
        tau_mean: r.summary.tau.mean,
        tau_std: r.summary.tau.std,
        distinct_mean: r.summary.distinct_count.mean,
        distinct_std: r.summary.distinct_count.std,
        recurred: r.summary.recurred,
        fixed_points: r.summary.fixed_points,
    });
    out.write("simulate_summary.csv", &to_csv(summary_rows))?;
    let chain_rows = results.iter().flat_map(|r| {
        r.reports.iter().enumerate().map(|(i, rep)| ChainRow {
            condition: &r.condition.label,
            chain: i,
            tau: rep.tau,
            distinct_count: rep.distinct_count,
            cycle_length: rep.cycle_length,
        })
    });
    out.write("simulate_chains.csv", &to_csv(chain_rows))?;

    let sweep: Vec<&ConditionResult> = results.iter().filter(|r| r.condition.sweep).collect();
    let sweep_rows = sweep.iter().map(|r| SummaryRow {
        condition: &r.condition.label,
        mode: "sampling",
        temperature: r.condition.decoding.temperature,
        top_p: r.condition.decoding.top_p,
        chains: r.summary.chains,
        failures: r.failures,
        tau_mean: r.summary.tau.mean,
        tau_std: r.summary.tau.std,
        distinct_mean: r.summary.distinct_count.mean,
        distinct_std: r.summary.distinct_count.std,
        recurred: r.summary.recurred,
        fixed_points: r.summary.fixed_points,
    });
    out.write("simulate_sweep.csv", &to_csv(sweep_rows))?;

    let plot = json!({
        "conditions": results.iter().map(|r| json!({
            "label": r.condition.label,
            "tau": r.reports.iter().map(|x| x.tau).collect::<Vec<_>>(),
            "distinct_count": r.reports.iter().map(|x| x.distinct_count).collect::<Vec<_>>(),
            "tau_mean": r.summary.tau.mean,
            "tau_std": r.summary.tau.std,
            "distinct_mean": r.summary.distinct_count.mean,
            "distinct_std": r.summary.distinct_count.std,
        })).collect::<Vec<_>>(),
        "sweep": {
            "temperature": sweep.iter().map(|r| r.condition.decoding.temperature).collect::<Vec<_>>(),
            "tau_mean": sweep.iter().map(|r| r.summary.tau.mean).collect::<Vec<_>>(),
            "tau_std": sweep.iter().map(|r| r.summary.tau.std).collect::<Vec<_>>(),
            "distinct_mean": sweep.iter().map(|r| r.summary.distinct_count.mean).collect::<Vec<_>>(),
            "distinct_std": sweep.iter().map(|r| r.summary.distinct_count.std).collect::<Vec<_>>(),
        },
    });
    out.write(
        "plot_simulate.json",
        (serde_json::to_string_pretty(&plot).expect("plot serializes") + "\n").as_bytes(),
    )?;

    let mut manifest = RunManifest {
        command: "simulate".into(),
        toolkit_version: TOOLKIT_VERSION.into(),
        started_unix_ms: started,
        finished_unix_ms: now_unix_ms(),
        config: prep.config_json(),
        dataset: prep.dataset.clone(),
        model_decoding: prep.kernel_label(),
        deterministic: prep.kernel.is_deterministic(&DecodingConfig::greedy()),
        unit: prep.unit,
        chains: Vec::new(),
        files: out.files().to_vec(),
    };
    manifest.files = out.finish(&manifest)?;
    Ok(SimulationOutcome {
        out: prep.out,
        results,
        manifest,
    })
}
