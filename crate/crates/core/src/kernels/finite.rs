use std::collections::HashMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::decoding::draw_index;
use super::{apply_decoding, DecodingConfig, Kernel, KernelError, KernelStep, Language, StepContext};
use crate::markov::TransitionMatrix;
use crate::textunit::Sentence;

/// Synthetic kernel over a finite list of states. Entry `(i, j)` of the
/// logit matrix scores the transition from source `i` to target `j`;
/// decoding turns each row into next-state probabilities.
///
/// Sources and targets coincide for within-language kernels. Directional
/// translation kernels may use a different target list.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    sources: Vec<Sentence>,
    targets: Vec<Sentence>,
    logits: Vec<f64>,
    source_index: HashMap<String, usize>,
    domain: Language,
    codomain: Language,
}

/// Parameters of a seeded random logit matrix:
/// `z(i, j) = popularity_scale * a_j + noise_scale * e_ij` with `a` and `e`
/// standard normal. The popularity term gives some states a high score from
/// every source, the way a model keeps returning to preferred phrasings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomLogits {
    pub states: usize,
    pub seed: u64,
    #[serde(default = "default_popularity")]
    pub popularity_scale: f64,
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
}

fn default_popularity() -> f64 {
    2.0
}

fn default_noise() -> f64 {
    1.0
}

impl RandomLogits {
    pub fn new(states: usize, seed: u64) -> Self {
        Self {
            states,
            seed,
            popularity_scale: default_popularity(),
            noise_scale: default_noise(),
        }
    }
}

fn unique_index(states: &[Sentence]) -> Result<HashMap<String, usize>, KernelError> {
    let mut index = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        if index.insert(s.key().to_string(), i).is_some() {
            return Err(KernelError::InvalidInput(format!("duplicate state `{}`", s.key())));
        }
    }
    Ok(index)
}

impl FiniteKernel {
    /// Square kernel over one state list.
    pub fn new(states: Vec<Sentence>, logits: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        Self::rectangular(states.clone(), states, logits)
    }

    pub fn rectangular(
        sources: Vec<Sentence>,
        targets: Vec<Sentence>,
        logits: Vec<Vec<f64>>,
    ) -> Result<Self, KernelError> {
        if sources.is_empty() || targets.is_empty() {
            return Err(KernelError::InvalidInput("finite kernel needs at least one state".into()));
        }
        if logits.len() != sources.len() {
            return Err(KernelError::InvalidInput(format!(
                "{} logit rows for {} source states",
                logits.len(),
                sources.len()
            )));
        }
        let mut flat = Vec::with_capacity(sources.len() * targets.len());
        for (i, row) in logits.iter().enumerate() {
            if row.len() != targets.len() {
                return Err(KernelError::InvalidInput(format!(
                    "logit row {i} has {} entries, expected {}",
                    row.len(),
                    targets.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(KernelError::InvalidInput(format!("non-finite logit {v} in row {i}")));
            }
            flat.extend_from_slice(row);
        }
        unique_index(&targets)?;
        let source_index = unique_index(&sources)?;
        Ok(Self {
            sources,
            targets,
            logits: flat,
            source_index,
            domain: Language::en(),
            codomain: Language::en(),
        })
    }

    pub fn from_labels(labels: &[&str], logits: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        let states = labels.iter().map(|l| Sentence::new(*l)).collect::<Result<Vec<_>, _>>()?;
        Self::new(states, logits)
    }

    pub fn random(params: RandomLogits) -> Result<Self, KernelError> {
        let m = params.states;
        if m == 0 {
            return Err(KernelError::InvalidInput("random kernel needs at least one state".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let popularity: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let logits = (0..m)
            .map(|_| {
                popularity
                    .iter()
                    .map(|a| params.popularity_scale * a + params.noise_scale * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let width = (m - 1).to_string().len();
        let states = (0..m)
            .map(|i| Sentence::new(format!("s{i:0width$}")))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(states, logits)
    }

    pub fn with_languages(mut self, domain: Language, codomain: Language) -> Self {
        self.domain = domain;
        self.codomain = codomain;
        self
    }

    pub fn sources(&self) -> &[Sentence] {
        &self.sources
    }

    pub fn targets(&self) -> &[Sentence] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn logit_row(&self, i: usize) -> &[f64] {
        let n = self.targets.len();
        &self.logits[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, state: &Sentence) -> Option<usize> {
        self.source_index.get(state.key()).copied()
    }

    /// Next-state probabilities of source `i` under `config`.
    pub fn decoded_row(&self, i: usize, config: &DecodingConfig) -> Result<Vec<f64>, KernelError> {
        if i >= self.sources.len() {
            return Err(KernelError::InvalidInput(format!(
                "state index {i} out of range for {} states",
                self.sources.len()
            )));
        }
        apply_decoding(self.logit_row(i), config)
    }

    /// Draw the successor of source `state_index`.
    pub fn sample_step(
        &self,
        state_index: usize,
        config: &DecodingConfig,
        rng: &mut dyn RngCore,
    ) -> Result<KernelStep, KernelError> {
        let probs = self.decoded_row(state_index, config)?;
        let next = if config.is_greedy() {
            probs.iter().position(|&p| p == 1.0).unwrap_or(0)
        } else {
            draw_index(&probs, rng.gen::<f64>())
        };
        Ok(KernelStep {
            output: self.targets[next].clone(),
            chosen_index: Some(next),
            step_probability: Some(probs[next]),
            prompt_index: 0,
            intermediate: None,
            truncated: false,
            calls: Vec::new(),
        })
    }

    /// The row-stochastic matrix this kernel induces under `config`.
    pub fn transition_matrix(&self, config: &DecodingConfig) -> Result<TransitionMatrix, KernelError> {
        let rows = (0..self.sources.len())
            .map(|i| self.decoded_row(i, config))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = |v: &[Sentence]| v.iter().map(|s| s.key().to_string()).collect::<Vec<_>>();
        TransitionMatrix::rectangular(labels(&self.sources), labels(&self.targets), rows)
            .map_err(|e| KernelError::InvalidInput(e.to_string()))
    }
}

impl Kernel for FiniteKernel {
    fn step(&self, state: &Sentence, ctx: &mut StepContext<'_>) -> Result<KernelStep, KernelError> {
        let i = self
            .index_of(state)
            .ok_or_else(|| KernelError::UnknownState(state.key().to_string()))?;
        let mut step = self.sample_step(i, ctx.decoding, ctx.rng)?;
        step.prompt_index = ctx.prompt_index;
        Ok(step)
    }

    fn domain(&self) -> &Language {
        &self.domain
    }

    fn codomain(&self) -> &Language {
        &self.codomain
    }

    fn is_deterministic(&self, decoding: &DecodingConfig) -> bool {
        decoding.is_greedy()
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "kind": "finite",
            "sources": self.sources.len(),
            "targets": self.targets.len(),
            "domain": self.domain,
            "codomain": self.codomain,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn diag(m: usize, on: f64) -> Vec<Vec<f64>> {
        (0..m).map(|i| (0..m).map(|j| if i == j { on } else { 0.0 }).collect()).collect()
    }

    #[test]
    fn greedy_identity_favoring() {
        let k = FiniteKernel::from_labels(&["a", "b", "c"], diag(3, 10.0)).unwrap();
        for i in 0..3 {
            let step = k.sample_step(i, &DecodingConfig::greedy(), &mut rng(0)).unwrap();
            assert_eq!(step.chosen_index, Some(i));
            assert_eq!(step.step_probability, Some(1.0));
        }
    }

    #[test]
    fn greedy_permutation() {
        let k = FiniteKernel::from_labels(&["a", "b"], vec![vec![0.0, 10.0], vec![10.0, 0.0]]).unwrap();
        let step = k.sample_step(0, &DecodingConfig::greedy(), &mut rng(0)).unwrap();
        assert_eq!(step.chosen_index, Some(1));
        assert_eq!(step.output.key(), "b");
    }

    #[test]
    fn greedy_is_repeatable() {
        let k = FiniteKernel::random(RandomLogits::new(20, 3)).unwrap();
        let cfg = DecodingConfig::greedy();
        let first = k.sample_step(5, &cfg, &mut rng(1)).unwrap();
        for seed in 0..10 {
            assert_eq!(k.sample_step(5, &cfg, &mut rng(seed)).unwrap(), first);
        }
    }

    #[test]
    fn uniform_sampling_frequencies() {
        // Each of m=4 outcomes has p=1/4; binomial sd over 10,000 draws is
        // sqrt(10000 * 0.25 * 0.75) ~ 43.3, so 3 sd ~ 130.
        let m = 4;
        let k = FiniteKernel::from_labels(&["a", "b", "c", "d"], vec![vec![0.0; m]; m]).unwrap();
        let cfg = DecodingConfig::sampling(1.0, 1.0);
        let mut r = rng(99);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[k.sample_step(0, &cfg, &mut r).unwrap().chosen_index.unwrap()] += 1;
        }
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn out_of_range_and_unknown_state() {
        let k = FiniteKernel::from_labels(&["a"], vec![vec![0.0]]).unwrap();
        assert!(k.sample_step(1, &DecodingConfig::greedy(), &mut rng(0)).is_err());
        let cfg = DecodingConfig::greedy();
        let mut r = rng(0);
        let mut ctx = StepContext::new(&cfg, &mut r);
        let err = k.step(&Sentence::new("zzz").unwrap(), &mut ctx).unwrap_err();
        assert!(matches!(err, KernelError::UnknownState(_)));
    }

    #[test]
    fn construction_errors() {
        assert!(FiniteKernel::from_labels(&[], vec![]).is_err());
        assert!(FiniteKernel::from_labels(&["a", "b"], vec![vec![0.0, 0.0]]).is_err());
        assert!(FiniteKernel::from_labels(&["a"], vec![vec![f64::NAN]]).is_err());
        assert!(FiniteKernel::from_labels(&["a", "a"], vec![vec![0.0; 2]; 2]).is_err());
    }

    #[test]
    fn transition_matrix_is_stochastic() {
        let k = FiniteKernel::random(RandomLogits::new(30, 7)).unwrap();
        let p = k.transition_matrix(&DecodingConfig::default()).unwrap();
        for i in 0..30 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_kernel_is_seeded() {
        let a = FiniteKernel::random(RandomLogits::new(10, 42)).unwrap();
        let b = FiniteKernel::random(RandomLogits::new(10, 42)).unwrap();
        let c = FiniteKernel::random(RandomLogits::new(10, 43)).unwrap();
        assert_eq!(a.logits, b.logits);
        assert_ne!(a.logits, c.logits);
        assert_eq!(a.sources()[0].key(), "s0");
    }
}
