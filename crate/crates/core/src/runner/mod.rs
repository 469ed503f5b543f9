//! Iterating kernels into trajectories, one chain per seed, and measuring
//! when each chain first revisits a state.

mod jsonl;
mod recurrence;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::kernels::{DecodingConfig, Kernel, KernelStep, StepContext};
use crate::textunit::{Seed, Sentence};

pub use jsonl::{read_trajectories, write_trajectories, StepRecord, StoredChain};
pub use recurrence::{
    recurrence_from_keys, recurrence_stats, summarize, MeanStd, RecurrenceReport, RecurrenceSummary,
    MIN_STOCHASTIC_REPEATS,
};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("chain {run_id} stopped after {steps} steps: {error}")]
    Incomplete { run_id: String, steps: usize, error: String },
    #[error("all {chains} chains failed; first error: {first}")]
    AllFailed { chains: usize, first: String },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A realized chain `s^(0), ..., s^(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub run_id: String,
    pub doc_id: Option<String>,
    pub seed: Sentence,
    /// `steps[t]` produced `s^(t+1)` from `s^(t)`.
    pub steps: Vec<KernelStep>,
    pub horizon: usize,
    pub deterministic: bool,
    pub config: serde_json::Value,
    /// Set when a kernel step failed; `steps` then holds fewer than
    /// `horizon` entries.
    pub error: Option<String>,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = &Sentence> {
        std::iter::once(&self.seed).chain(self.steps.iter().map(|s| &s.output))
    }

    pub fn keys(&self) -> Vec<&str> {
        self.states().map(Sentence::key).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none() && self.steps.len() == self.horizon
    }
}

/// Per-chain parameters for [`run_chain`].
#[derive(Debug, Clone)]
pub struct ChainSetup {
    pub horizon: usize,
    pub decoding: DecodingConfig,
    pub run_id: String,
    pub doc_id: Option<String>,
    /// Seed forwarded to model providers under sampling.
    pub chain_seed: u64,
}

impl ChainSetup {
    pub fn new(horizon: usize, decoding: DecodingConfig) -> Self {
        Self {
            horizon,
            chain_seed: decoding.rng_seed,
            decoding,
            run_id: "chain-0000".into(),
            doc_id: None,
        }
    }
}

/// Apply `kernel` `horizon` times starting from `seed`. Each step sees only
/// the previous state and the iteration index.
///
/// A failing step ends the chain early; the partial trajectory is
/// returned with its error recorded.
pub fn run_chain(
    kernel: &dyn Kernel,
    seed: &Sentence,
    setup: &ChainSetup,
    rng: &mut dyn RngCore,
) -> Result<Trajectory, RunnerError> {
    if setup.horizon == 0 {
        return Err(RunnerError::InvalidInput("horizon must be at least 1".into()));
    }
    setup
        .decoding
        .validate()
        .map_err(|e| RunnerError::InvalidInput(e.to_string()))?;
    let mut steps = Vec::with_capacity(setup.horizon);
    let mut error = None;
    let mut state = seed.clone();
    for t in 0..setup.horizon {
        let mut ctx = StepContext::new(&setup.decoding, rng)
            .at(t)
            .with_chain_seed(setup.chain_seed);
        match kernel.step(&state, &mut ctx) {
            Ok(step) => {
                state = step.output.clone();
                steps.push(step);
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    Ok(Trajectory {
        run_id: setup.run_id.clone(),
        doc_id: setup.doc_id.clone(),
        seed: seed.clone(),
        steps,
        horizon: setup.horizon,
        deterministic: kernel.is_deterministic(&setup.decoding),
        config: json!({
            "kernel": kernel.describe(),
            "decoding": setup.decoding,
            "horizon": setup.horizon,
            "chain_seed": setup.chain_seed,
        }),
        error,
    })
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub horizon: usize,
    pub decoding: DecodingConfig,
    /// Worker threads; 0 uses one per core.
    pub parallelism: usize,
    pub master_seed: u64,
    pub run_prefix: String,
}

impl BatchConfig {
    pub fn new(horizon: usize, decoding: DecodingConfig, master_seed: u64) -> Self {
        Self {
            horizon,
            decoding,
            parallelism: 0,
            master_seed,
            run_prefix: "chain".into(),
        }
    }
}

/// The sampling stream of chain `i`: the master seed selects the key and
/// the chain index the stream, so chains never share random numbers and
/// chain `i` sees the same numbers under every decoding configuration.
pub fn chain_rng(master_seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(i as u64);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainOutcome {
    pub trajectory: Trajectory,
    /// Absent for chains that stopped early.
    pub report: Option<RecurrenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub chain: usize,
    pub run_id: String,
    pub doc_id: Option<String>,
    pub steps_completed: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchOutput {
    pub chains: Vec<ChainOutcome>,
    pub failures: Vec<FailureRecord>,
}

impl BatchOutput {
    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.chains.iter().map(|c| &c.trajectory)
    }

    pub fn reports(&self) -> impl Iterator<Item = &RecurrenceReport> {
        self.chains.iter().filter_map(|c| c.report.as_ref())
    }

    pub fn summary(&self) -> Option<RecurrenceSummary> {
        summarize(self.reports())
    }
}

/// One chain per seed on a bounded worker pool. Results keep the order of
/// `seeds` regardless of scheduling.
pub fn run_batch(kernel: &dyn Kernel, seeds: &[Seed], cfg: &BatchConfig) -> Result<BatchOutput, RunnerError> {
    if seeds.is_empty() {
        return Err(RunnerError::InvalidInput("no seeds to run".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| RunnerError::InvalidInput(e.to_string()))?;
    let results: Vec<Result<Trajectory, RunnerError>> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, seed)| {
                let setup = ChainSetup {
                    horizon: cfg.horizon,
                    decoding: cfg.decoding.clone(),
                    run_id: format!("{}-{i:04}", cfg.run_prefix),
                    doc_id: Some(seed.doc_id.clone()),
                    chain_seed: cfg.decoding.rng_seed.wrapping_add(i as u64),
                };
                run_chain(kernel, &seed.state, &setup, &mut chain_rng(cfg.master_seed, i))
            })
            .collect()
    });

    let mut chains = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let trajectory = r?;
        if let Some(e) = &trajectory.error {
            failures.push(FailureRecord {
                chain: i,
                run_id: trajectory.run_id.clone(),
                doc_id: trajectory.doc_id.clone(),
                steps_completed: trajectory.steps.len(),
                error: e.clone(),
            });
        }
        let report = recurrence_stats(&trajectory).ok();
        chains.push(ChainOutcome { trajectory, report });
    }
    if failures.len() == chains.len() {
        return Err(RunnerError::AllFailed {
            chains: chains.len(),
            first: failures[0].error.clone(),
        });
    }
    Ok(BatchOutput { chains, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{FiniteKernel, RandomLogits, ScriptFallback, ScriptedKernel};

    fn s(x: &str) -> Sentence {
        Sentence::new(x).unwrap()
    }

    fn seeds(states: &[Sentence]) -> Vec<Seed> {
        states
            .iter()
            .enumerate()
            .map(|(i, st)| Seed {
                doc_id: format!("d{i}"),
                state: st.clone(),
            })
            .collect()
    }

    fn two_cycle() -> ScriptedKernel {
        ScriptedKernel::from_strs(
            &[
                ("We begin with a prologue.", "We start with a prologue."),
                ("We start with a prologue.", "We begin with a prologue."),
            ],
            ScriptFallback::Error,
        )
        .unwrap()
    }

    #[test]
    fn two_cycle_alternates() {
        let setup = ChainSetup::new(6, DecodingConfig::greedy());
        let mut rng = chain_rng(0, 0);
        let traj = run_chain(&two_cycle(), &s("We begin with a prologue."), &setup, &mut rng).unwrap();
        let keys = traj.keys();
        assert_eq!(keys.len(), 7);
        for (t, k) in keys.iter().enumerate() {
            let want = if t % 2 == 0 { "begin" } else { "start" };
            assert!(k.contains(want), "t={t}: {k}");
        }
        let r = recurrence_stats(&traj).unwrap();
        assert_eq!((r.tau, r.cycle_length, r.distinct_count), (2, Some(2), 2));
    }

    #[test]
    fn identity_copies_seed() {
        let setup = ChainSetup::new(5, DecodingConfig::greedy());
        let traj = run_chain(&ScriptedKernel::identity(), &s("Same."), &setup, &mut chain_rng(0, 0)).unwrap();
        assert_eq!(traj.steps.len(), 5);
        assert!(traj.states().all(|st| st.key() == "Same."));
        assert!(run_chain(&ScriptedKernel::identity(), &s("x"), &ChainSetup::new(0, DecodingConfig::greedy()), &mut chain_rng(0, 0)).is_err());
    }

    #[test]
    fn failure_truncates_honestly() {
        let k = ScriptedKernel::from_strs(&[("a", "b")], ScriptFallback::Error).unwrap();
        let traj = run_chain(&k, &s("a"), &ChainSetup::new(4, DecodingConfig::greedy()), &mut chain_rng(0, 0)).unwrap();
        assert_eq!(traj.steps.len(), 1);
        assert!(traj.error.is_some());
        assert!(matches!(recurrence_stats(&traj), Err(RunnerError::Incomplete { .. })));
    }

    #[test]
    fn sampling_is_reproducible() {
        let k = FiniteKernel::random(RandomLogits::new(30, 5)).unwrap();
        let cfg = DecodingConfig::default();
        let setup = ChainSetup::new(20, cfg);
        let a = run_chain(&k, &k.sources()[3], &setup, &mut chain_rng(9, 2)).unwrap();
        let b = run_chain(&k, &k.sources()[3], &setup, &mut chain_rng(9, 2)).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&k, &k.sources()[3], &setup, &mut chain_rng(9, 3)).unwrap();
        assert_ne!(a.keys(), c.keys());
    }

    #[test]
    fn batch_order_and_isolation() {
        let k = ScriptedKernel::from_strs(&[("a", "b"), ("b", "a")], ScriptFallback::Error).unwrap();
        let states = [s("a"), s("zz"), s("b")];
        let mut cfg = BatchConfig::new(4, DecodingConfig::greedy(), 1);
        cfg.parallelism = 3;
        let out = run_batch(&k, &seeds(&states), &cfg).unwrap();
        assert_eq!(out.chains.len(), 3);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].chain, 1);
        assert_eq!(out.chains[2].trajectory.run_id, "chain-0002");
        assert_eq!(out.reports().count(), 2);
        assert!(matches!(
            run_batch(&k, &seeds(&[s("zz")]), &cfg),
            Err(RunnerError::AllFailed { .. })
        ));
    }

    #[test]
    fn batch_independent_of_thread_count() {
        let k = FiniteKernel::random(RandomLogits::new(50, 1)).unwrap();
        let st: Vec<Sentence> = k.sources()[..12].to_vec();
        let mut cfg = BatchConfig::new(15, DecodingConfig::default(), 77);
        cfg.parallelism = 1;
        let one = run_batch(&k, &seeds(&st), &cfg).unwrap();
        cfg.parallelism = 4;
        let four = run_batch(&k, &seeds(&st), &cfg).unwrap();
        let a: Vec<_> = one.trajectories().cloned().collect();
        let b: Vec<_> = four.trajectories().cloned().collect();
        assert_eq!(a, b);
    }
}
