use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::analyze::{cmd_analyze, TRAJECTORY_FILE};
use super::manifest::OutDir;
use super::ExperimentError;

type Row = BTreeMap<String, String>;

fn read_rows(path: &Path) -> Result<Vec<Row>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExperimentError::io(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))
}

fn num(row: &Row, field: &str) -> String {
    match row.get(field).and_then(|v| v.parse::<f64>().ok()) {
        Some(v) => format!("{v:.3}"),
        None => "-".into(),
    }
}

/// Steps at which drift means are tabulated.
const DRIFT_STEPS: [usize; 5] = [1, 5, 10, 25, 50];

/// Render analysis outputs as Markdown. `dir` is either an analysis
/// directory or a run directory; for the latter the analysis is computed
/// first into `dir/analysis`. When `write_to` is given the text is also
/// saved there as `report.md`.
pub fn cmd_report(dir: &Path, write_to: Option<&Path>) -> Result<String, ExperimentError> {
    let analysis: PathBuf = if dir.join("recurrence_summary.csv").exists() {
        dir.to_path_buf()
    } else if dir.join(TRAJECTORY_FILE).exists() {
        let target = dir.join("analysis");
        cmd_analyze(&[dir.to_path_buf()], &target, 0)?;
        target
    } else {
        return Err(ExperimentError::Data(format!(
            "{}: neither analysis outputs nor {TRAJECTORY_FILE}",
            dir.display()
        )));
    };

    let mut md = String::new();
    let _ = writeln!(md, "# Report\n");
    let _ = writeln!(md, "## Recurrence\n");
    let _ = writeln!(
        md,
        "| dataset | model/decoding | chains | tau (mean ± sd) | U (mean ± sd) | recurred | fixed points |"
    );
    let _ = writeln!(md, "|---|---|---|---|---|---|---|");
    for r in read_rows(&analysis.join("recurrence_summary.csv"))? {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} ± {} | {} ± {} | {} | {} |",
            r["dataset"],
            r["model_decoding"],
            r["chains"],
            num(&r, "tau_mean"),
            num(&r, "tau_std"),
            num(&r, "distinct_mean"),
            num(&r, "distinct_std"),
            num(&r, "recurred"),
            num(&r, "fixed_points"),
        );
    }

    let table = std::fs::read_to_string(analysis.join("length_diversity.txt"))
        .map_err(|e| ExperimentError::io(&analysis.join("length_diversity.txt"), e))?;
    let _ = writeln!(md, "\n## Seed length vs distinct outputs\n\n```text\n{}```", table);

    let drift = read_rows(&analysis.join("drift_summary.csv"))?;
    let mut cells: BTreeMap<(String, String), BTreeMap<usize, String>> = BTreeMap::new();
    for r in drift.iter().filter(|r| r["mode"] == "stepwise") {
        let t: usize = r["t"].parse().unwrap_or(0);
        if DRIFT_STEPS.contains(&t) {
            let group = format!("{} / {}", r["dataset"], r["model_decoding"]);
            cells
                .entry((group, r["metric"].clone()))
                .or_default()
                .insert(t, format!("{} ± {}", num(r, "mean"), num(r, "std")));
        }
    }
    let steps: Vec<usize> = DRIFT_STEPS
        .iter()
        .copied()
        .filter(|t| cells.values().any(|c| c.contains_key(t)))
        .collect();
    let _ = writeln!(md, "\n## Stepwise drift\n");
    let _ = writeln!(
        md,
        "| group | metric |{}",
        steps.iter().map(|t| format!(" t={t} |")).collect::<String>()
    );
    let _ = writeln!(md, "|---|---|{}", "---|".repeat(steps.len()));
    for ((group, metric), by_t) in &cells {
        let _ = writeln!(
            md,
            "| {group} | {metric} |{}",
            steps
                .iter()
                .map(|t| format!(" {} |", by_t.get(t).map_or("-", String::as_str)))
                .collect::<String>()
        );
    }

    if let Some(target) = write_to {
        let mut out = OutDir::create(target)?;
        out.write("report.md", md.as_bytes())?;
    }
    Ok(md)
}
