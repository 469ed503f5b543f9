use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RunnerError, Trajectory};
use crate::textunit::Sentence;

/// One line of a trajectory file. `t = 0` is the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub run_id: String,
    pub t: usize,
    pub raw: String,
    pub key: String,
    pub prompt_index: Option<usize>,
    pub step_probability: Option<f64>,
    pub intermediate: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl StepRecord {
    fn of(run_id: &str, t: usize, state: &Sentence) -> Self {
        Self {
            run_id: run_id.to_string(),
            t,
            raw: state.raw().to_string(),
            key: state.key().to_string(),
            prompt_index: None,
            step_probability: None,
            intermediate: None,
            truncated: false,
        }
    }
}

/// Write every state of every trajectory, seed first, one JSON object per
/// line.
pub fn write_trajectories<'a, W: Write>(
    mut w: W,
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
) -> std::io::Result<()> {
    for traj in trajectories {
        let mut line = serde_json::to_string(&StepRecord::of(&traj.run_id, 0, &traj.seed))?;
        writeln!(w, "{line}")?;
        for (i, step) in traj.steps.iter().enumerate() {
            let rec = StepRecord {
                prompt_index: Some(step.prompt_index),
                step_probability: step.step_probability,
                intermediate: step.intermediate.as_ref().map(|s| s.raw().to_string()),
                truncated: step.truncated,
                ..StepRecord::of(&traj.run_id, i + 1, &step.output)
            };
            line = serde_json::to_string(&rec)?;
            writeln!(w, "{line}")?;
        }
    }
    w.flush()
}

/// A trajectory read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredChain {
    pub run_id: String,
    pub states: Vec<Sentence>,
}

impl StoredChain {
    pub fn keys(&self) -> Vec<&str> {
        self.states.iter().map(Sentence::key).collect()
    }

    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

/// Parse a trajectory file. Records of one run must be contiguous and
/// numbered `0, 1, 2, ...`; stored keys must match the raw text.
pub fn read_trajectories(path: &Path) -> Result<Vec<StoredChain>, RunnerError> {
    let file = std::fs::File::open(path)?;
    let shown = path.display().to_string();
    let fail = |line: usize, message: String| RunnerError::Format {
        path: shown.clone(),
        line,
        message,
    };
    let mut chains: Vec<StoredChain> = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StepRecord = serde_json::from_str(&line).map_err(|e| fail(lineno, e.to_string()))?;
        let state = Sentence::new(rec.raw).map_err(|e| fail(lineno, e.to_string()))?;
        if state.key() != rec.key {
            return Err(fail(lineno, "stored key does not match canonical form of raw".into()));
        }
        if rec.t == 0 {
            if chains.iter().any(|c| c.run_id == rec.run_id) {
                return Err(fail(lineno, format!("run {} appears twice", rec.run_id)));
            }
            chains.push(StoredChain {
                run_id: rec.run_id,
                states: vec![state],
            });
            continue;
        }
        match chains.last_mut() {
            Some(c) if c.run_id == rec.run_id && c.states.len() == rec.t => c.states.push(state),
            _ => return Err(fail(lineno, format!("unexpected record t={} for run {}", rec.t, rec.run_id))),
        }
    }
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{DecodingConfig, FiniteKernel};
    use crate::runner::{chain_rng, run_chain, ChainSetup};

    fn sample_traj() -> Trajectory {
        let k = FiniteKernel::from_labels(&["A one.", "B two."], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut setup = ChainSetup::new(3, DecodingConfig::sampling(1.0, 1.0));
        setup.run_id = "r1".into();
        run_chain(&k, &k.sources()[0], &setup, &mut chain_rng(3, 0)).unwrap()
    }

    #[test]
    fn round_trip() {
        let traj = sample_traj();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write_trajectories(std::fs::File::create(&path).unwrap(), [&traj]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["t"], 0);
        assert!(first["prompt_index"].is_null());
        let back = read_trajectories(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].states, traj.states().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn rejects_gaps_and_bad_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let rec = |t: usize, raw: &str, key: &str| {
            format!(r#"{{"run_id":"x","t":{t},"raw":"{raw}","key":"{key}","prompt_index":null,"step_probability":null,"intermediate":null}}"#)
        };
        std::fs::write(&path, format!("{}\n{}\n", rec(0, "a", "a"), rec(2, "b", "b"))).unwrap();
        let err = read_trajectories(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        std::fs::write(&path, rec(0, "a  b", "a  b")).unwrap();
        assert!(read_trajectories(&path).is_err());
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(read_trajectories(&path), Err(RunnerError::Format { line: 1, .. })));
    }
}
