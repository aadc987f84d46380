//! Result serialization: results JSON, rank CSV, and the report directory
//! (summary JSON, staleness histogram CSV, latency CSV).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::{aggregate, rank_table, BenchResults, Summary};

/// Write the full result set as schema-versioned JSON.
pub fn write_results_json(results: &BenchResults, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, serde_json::to_string_pretty(results)?)?;
    Ok(())
}

pub fn read_results_json(path: &Path) -> Result<BenchResults> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Rank CSV: `task_id,controller,tier,coverage,rank` over filtered tasks.
pub fn write_rank_csv(results: &BenchResults, path: &Path) -> Result<()> {
    let mut out = String::from("task_id,controller,tier,coverage,rank\n");
    for r in rank_table(results) {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            r.task_id, r.controller, r.tier, r.coverage, r.rank
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Infer the clock clip from recorded staleness samples; the histogram is
/// binned `[0, t_clip]` in unit bins.
fn infer_t_clip(results: &BenchResults) -> u32 {
    results
        .episodes
        .iter()
        .flat_map(|e| e.occupancy_staleness.iter().copied())
        .max()
        .unwrap_or(100)
        .max(100)
}

/// Write the report directory: `summary.json`, `staleness_histogram.csv`
/// (bin, one count column per controller) and `latency.csv`.
pub fn write_report(results: &BenchResults, dir: &Path) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    let t_clip = infer_t_clip(results);
    let summary = aggregate(results, t_clip)?;

    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    let controllers: Vec<&String> = summary.per_controller.keys().collect();
    let mut hist = fs::File::create(dir.join("staleness_histogram.csv"))?;
    write!(hist, "bin")?;
    for c in &controllers {
        write!(hist, ",{c}")?;
    }
    writeln!(hist)?;
    for bin in 0..=t_clip as usize {
        write!(hist, "{bin}")?;
        for c in &controllers {
            let count = summary.per_controller[*c].staleness_histogram[bin];
            write!(hist, ",{count}")?;
        }
        writeln!(hist)?;
    }

    let mut lat = fs::File::create(dir.join("latency.csv"))?;
    writeln!(lat, "controller,mean_ms,p99_ms")?;
    for (name, c) in &summary.per_controller {
        writeln!(lat, "{name},{:.4},{:.4}", c.mean_decision_latency_ms, c.p99_decision_latency_ms)?;
    }
    Ok(summary)
}

/// Results JSON with wall-clock latency fields masked, for byte-level
/// determinism comparison between runs.
pub fn masked_results_json(results: &BenchResults) -> Result<String> {
    let mut value = serde_json::to_value(results)?;
    if let Some(eps) = value.get_mut("episodes").and_then(|e| e.as_array_mut()) {
        for ep in eps {
            if let Some(obj) = ep.as_object_mut() {
                obj.insert("decision_latencies_ms".into(), serde_json::Value::Null);
            }
        }
    }
    Ok(serde_json::to_string_pretty(&value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{EpisodeResult, Termination};
    use crate::gaze::ControllerKind;

    fn tiny_results() -> BenchResults {
        BenchResults {
            schema_version: 1,
            suite_name: "t".into(),
            suite_seed: 0,
            config_digest: "d".into(),
            episodes: vec![EpisodeResult {
                task_id: "task_000".into(),
                controller: ControllerKind::Optimised,
                collision_free: true,
                reached_goal: true,
                coverage: 0.25,
                occupancy_staleness: vec![0, 2, 2, 5],
                steps_taken: 9,
                termination: Termination::ReachedGoal,
                decision_latencies_ms: vec![0.5, 0.7],
                seed: 3,
                config_digest: "d".into(),
            }],
        }
    }

    #[test]
    fn results_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.json");
        let results = tiny_results();
        write_results_json(&results, &path).unwrap();
        assert_eq!(read_results_json(&path).unwrap(), results);
    }

    #[test]
    fn rank_csv_has_expected_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rank.csv");
        write_rank_csv(&tiny_results(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "task_id,controller,tier,coverage,rank");
        assert_eq!(lines.next().unwrap(), "task_000,optimised,1,0.250000,1");
    }

    #[test]
    fn report_files_exist_and_histogram_conserves() {
        let dir = tempfile::tempdir().unwrap();
        let summary = write_report(&tiny_results(), dir.path()).unwrap();
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("staleness_histogram.csv").exists());
        assert!(dir.path().join("latency.csv").exists());
        let total: u64 = summary.per_controller["optimised"].staleness_histogram.iter().sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn masking_removes_latencies_only() {
        let a = masked_results_json(&tiny_results()).unwrap();
        let mut other = tiny_results();
        other.episodes[0].decision_latencies_ms = vec![9.9];
        let b = masked_results_json(&other).unwrap();
        assert_eq!(a, b);
        other.episodes[0].coverage = 0.5;
        let c = masked_results_json(&other).unwrap();
        assert_ne!(a, c);
    }
}
