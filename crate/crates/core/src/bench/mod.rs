//! Episode execution loop, metrics, task filtering, tiered ranking, and
//! aggregation.

pub mod report;
pub mod suite;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::gaze::{
    controller_step, slew_head, ControllerContext, ControllerKind, HeadCommand, Trajectory,
};
use crate::planner::{path_blocked_by, plan, replan_due};
use crate::sensing::{camera_pose, observe};
use crate::voxel::{CellState, ObservationTimeMap, ObservedMask, OccupancyGrid};
use crate::world::{check_collision, for_each_footprint_cell, wrap_to_pi, Environment, Pose, TaskSpec};

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedGoal,
    Collision,
    StepBudgetExceeded,
}

/// Everything recorded about one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task_id: String,
    pub controller: ControllerKind,
    pub collision_free: bool,
    pub reached_goal: bool,
    /// Fraction of the workspace ever observed, in [0, 1].
    pub coverage: f64,
    /// Time-last-observed sampled whenever the footprint newly covers a cell.
    pub occupancy_staleness: Vec<u32>,
    pub steps_taken: u32,
    pub termination: Termination,
    /// Wall-clock duration of each head decision, milliseconds. Excluded
    /// from determinism comparisons.
    pub decision_latencies_ms: Vec<f64>,
    pub seed: u64,
    pub config_digest: String,
}

impl EpisodeResult {
    /// Success means both collision-free and goal reached.
    pub fn success(&self) -> bool {
        self.collision_free && self.reached_goal
    }
}

/// Optional per-step frame dumping.
#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    /// Directory receiving one belief snapshot per step: PGM on 2D grids,
    /// the flat binary format otherwise.
    pub frames_dir: Option<std::path::PathBuf>,
}

fn reached_goal(pose: &Pose, goal: &Pose, cfg: &RunConfig) -> bool {
    pose.distance(goal) <= cfg.sim.goal_pos_tol_cells * cfg.grid.resolution
        && wrap_to_pi(pose.heading - goal.heading).abs() <= cfg.sim.goal_heading_tol
}

/// Run one episode of `task` under `controller`.
///
/// Per decision step: refresh truth, observe, advance the clock, replan if
/// due, pick and slew the head, move one step along the trajectory, check
/// collision, and record staleness of newly entered cells. Terminates on
/// goal, collision, or step budget. Fully deterministic for fixed inputs
/// apart from the recorded wall-clock latencies.
pub fn run_episode(
    env: &Environment,
    task: &TaskSpec,
    controller: ControllerKind,
    cfg: &RunConfig,
    task_id: &str,
) -> Result<EpisodeResult> {
    run_episode_opts(env, task, controller, cfg, task_id, &EpisodeOptions::default())
}

pub fn run_episode_opts(
    env: &Environment,
    task: &TaskSpec,
    controller: ControllerKind,
    cfg: &RunConfig,
    task_id: &str,
    opts: &EpisodeOptions,
) -> Result<EpisodeResult> {
    cfg.validate()?;
    let spec = env.spec;
    let robot = &cfg.robot;

    // Full-knowledge oracle fixes the step budget.
    let truth0 = env.truth_at(0);
    let oracle = plan(&truth0, &task.start, &task.goal, &cfg.plan, robot, 0)?;
    let budget = ((oracle.duration().max(1) as f64) * cfg.sim.step_budget_factor).ceil() as u32;

    let static_truth = env.static_truth();
    let mut truth = static_truth.clone();
    let mut belief = OccupancyGrid::filled(spec, CellState::Unknown);
    let mut times = ObservationTimeMap::new(spec, cfg.gaze.t_clip);
    let mut observed = ObservedMask::new(spec);
    let mut covered = vec![false; spec.cell_count()];

    let mut pose = task.start;
    let mut head = (0.0f64, initial_tilt(cfg));
    let mut trajectory: Option<Trajectory> = None;
    let mut cursor = 0usize;
    let mut last_plan_step = 0u32;

    let mut staleness = Vec::new();
    let mut latencies = Vec::new();
    let mut termination = Termination::StepBudgetExceeded;
    let mut steps_taken = 0;

    // The start footprint counts as covered without a staleness sample:
    // those cells were never entered during execution.
    for_each_footprint_cell(&spec, &pose, robot, |v| {
        covered[spec.flat(v)] = true;
    });

    for step in 0..=budget {
        if reached_goal(&pose, &task.goal, cfg) {
            termination = Termination::ReachedGoal;
            break;
        }
        if step == budget {
            termination = Termination::StepBudgetExceeded;
            break;
        }

        env.truth_at_into(&static_truth, step, &mut truth);

        let cam = camera_pose(&pose, head.0, head.1, robot, &spec);
        let outcome = observe(&truth, &mut belief, &mut times, &mut observed, &cam, &cfg.fov)?;
        times.advance();

        let blocked = trajectory
            .as_ref()
            .map(|t| path_blocked_by(t, cursor, &outcome.newly_occupied, &spec, robot))
            .unwrap_or(false);
        if trajectory.is_none() || replan_due(step, last_plan_step, &cfg.plan, blocked) {
            match plan(&belief, &pose, &task.goal, &cfg.plan, robot, step) {
                Ok(t) => {
                    trajectory = Some(t);
                    cursor = 0;
                    last_plan_step = step;
                }
                Err(Error::NoPath) => {
                    // Hold position and keep observing; later replans may
                    // succeed once the blockage clears or is re-observed.
                    trajectory = None;
                    last_plan_step = step;
                }
                Err(e) => return Err(e),
            }
        }

        let ctx = ControllerContext {
            step,
            base: pose,
            head,
            trajectory: trajectory.as_ref(),
            cursor,
            times: &times,
            robot,
            fov: &cfg.fov,
            gaze: &cfg.gaze,
            params: &cfg.controllers,
        };
        let t0 = Instant::now();
        let cmd = match controller_step(controller, &ctx) {
            Ok(cmd) => cmd,
            Err(Error::NoTrajectory) => HeadCommand { pan: head.0, tilt: head.1 },
            Err(e) => return Err(e),
        };
        latencies.push(t0.elapsed().as_secs_f64() * 1e3);
        head = slew_head(head, &cmd, robot);

        if let Some(t) = &trajectory {
            cursor = (cursor + 1).min(t.states.len() - 1);
            pose = t.states[cursor];
        }
        steps_taken = step + 1;

        if let Some(dir) = &opts.frames_dir {
            dump_frame(dir, task_id, controller, step, &belief)?;
        }

        if check_collision(&truth, &pose, robot) {
            termination = Termination::Collision;
            break;
        }

        for_each_footprint_cell(&spec, &pose, robot, |v| {
            let flat = spec.flat(v);
            if !covered[flat] {
                covered[flat] = true;
                staleness.push(times.t_at(flat));
            }
        });
    }

    Ok(EpisodeResult {
        task_id: task_id.to_string(),
        controller,
        collision_free: termination != Termination::Collision,
        reached_goal: termination == Termination::ReachedGoal,
        coverage: observed.coverage(),
        occupancy_staleness: staleness,
        steps_taken,
        termination,
        decision_latencies_ms: latencies,
        seed: task.task_seed,
        config_digest: cfg.digest(),
    })
}

fn initial_tilt(cfg: &RunConfig) -> f64 {
    if cfg.grid.is_2d() {
        0.0
    } else {
        let (lo, hi) = cfg.robot.tilt_limits;
        (-cfg.controllers.ground_intersect_deg.to_radians()).clamp(lo, hi)
    }
}

fn dump_frame(
    dir: &std::path::Path,
    task_id: &str,
    controller: ControllerKind,
    step: u32,
    belief: &OccupancyGrid,
) -> Result<()> {
    let sub = dir.join(format!("{task_id}_{controller}"));
    std::fs::create_dir_all(&sub)?;
    if belief.spec.is_2d() {
        let mut f = std::fs::File::create(sub.join(format!("step_{step:05}.pgm")))?;
        belief.write_pgm(&mut f)?;
    } else {
        let mut f = std::fs::File::create(sub.join(format!("step_{step:05}.bin")))?;
        belief.write_binary(&mut f)?;
    }
    Ok(())
}

/// A full benchmark result set: one record per (task, controller) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub schema_version: u32,
    pub suite_name: String,
    pub suite_seed: u64,
    pub config_digest: String,
    pub episodes: Vec<EpisodeResult>,
}

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

impl BenchResults {
    /// Episodes grouped per task in first-seen order.
    pub fn by_task(&self) -> Vec<(String, Vec<&EpisodeResult>)> {
        let mut order: Vec<String> = Vec::new();
        let mut map: BTreeMap<String, Vec<&EpisodeResult>> = BTreeMap::new();
        for ep in &self.episodes {
            if !map.contains_key(&ep.task_id) {
                order.push(ep.task_id.clone());
            }
            map.entry(ep.task_id.clone()).or_default().push(ep);
        }
        order
            .into_iter()
            .map(|id| {
                let eps = map.remove(&id).unwrap_or_default();
                (id, eps)
            })
            .collect()
    }
}

/// Retain exactly the tasks where at least one controller succeeded:
/// collision-free and goal reached.
pub fn filter_tasks(results: &BenchResults) -> Vec<String> {
    results
        .by_task()
        .into_iter()
        .filter(|(_, eps)| eps.iter().any(|e| e.success()))
        .map(|(id, _)| id)
        .collect()
}

/// One controller's position in a task ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub task_id: String,
    pub controller: ControllerKind,
    /// 1 for the success tier, 0 for the failure tier.
    pub tier: u8,
    pub coverage: f64,
    /// Competition ranking: ties share a rank; the next rank skips.
    pub rank: u32,
}

/// Rank one task's episodes: success strictly above failure, then higher
/// coverage first; exact coverage ties share a rank in stable
/// controller-name order.
pub fn rank_methods(task_id: &str, episodes: &[&EpisodeResult]) -> Vec<RankEntry> {
    let mut eps: Vec<&EpisodeResult> = episodes.to_vec();
    eps.sort_by(|a, b| {
        b.success()
            .cmp(&a.success())
            .then(b.coverage.partial_cmp(&a.coverage).expect("coverage is finite"))
            .then(a.controller.name().cmp(b.controller.name()))
    });
    let mut out = Vec::with_capacity(eps.len());
    let mut rank = 0u32;
    for (i, e) in eps.iter().enumerate() {
        let tied_with_prev = i > 0
            && eps[i - 1].success() == e.success()
            && eps[i - 1].coverage == e.coverage;
        if !tied_with_prev {
            rank = i as u32 + 1;
        }
        out.push(RankEntry {
            task_id: task_id.to_string(),
            controller: e.controller,
            tier: e.success() as u8,
            coverage: e.coverage,
            rank,
        });
    }
    out
}

/// Full rank table over the filtered tasks.
pub fn rank_table(results: &BenchResults) -> Vec<RankEntry> {
    let keep: std::collections::BTreeSet<String> = filter_tasks(results).into_iter().collect();
    let mut out = Vec::new();
    for (task_id, eps) in results.by_task() {
        if keep.contains(&task_id) {
            out.extend(rank_methods(&task_id, &eps));
        }
    }
    out
}

/// Aggregated per-controller metrics over the filtered tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub episodes: u32,
    pub success_rate: f64,
    pub mean_coverage: f64,
    pub first_place_fraction: f64,
    pub staleness_median: f64,
    /// Histogram over [0, t_clip] in unit bins.
    pub staleness_histogram: Vec<u64>,
    pub mean_decision_latency_ms: f64,
    pub p99_decision_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tasks_total: u32,
    pub tasks_filtered: u32,
    pub per_controller: BTreeMap<String, ControllerSummary>,
}

fn median_u32(sorted: &[u32]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    }
}

/// Means over filtered tasks, first-place fractions from the rank table,
/// and per-controller staleness histograms.
pub fn aggregate(results: &BenchResults, t_clip: u32) -> Result<Summary> {
    if results.episodes.is_empty() {
        return Err(Error::EmptyInput("no episodes to aggregate".into()));
    }
    let tasks_total = results.by_task().len() as u32;
    let keep: std::collections::BTreeSet<String> = filter_tasks(results).into_iter().collect();
    if keep.is_empty() {
        return Err(Error::EmptyInput("no task had a successful controller".into()));
    }
    let table = rank_table(results);

    let mut per: BTreeMap<String, Vec<&EpisodeResult>> = BTreeMap::new();
    for ep in &results.episodes {
        if keep.contains(&ep.task_id) {
            per.entry(ep.controller.name().to_string()).or_default().push(ep);
        }
    }

    let mut out = BTreeMap::new();
    for (name, eps) in per {
        let n = eps.len() as f64;
        let successes = eps.iter().filter(|e| e.success()).count() as f64;
        let mean_cov = eps.iter().map(|e| e.coverage).sum::<f64>() / n;
        let firsts = table
            .iter()
            .filter(|r| r.controller.name() == name && r.rank == 1)
            .count() as f64;
        let mut samples: Vec<u32> = eps
            .iter()
            .flat_map(|e| e.occupancy_staleness.iter().copied())
            .collect();
        samples.sort_unstable();
        let mut hist = vec![0u64; t_clip as usize + 1];
        for &s in &samples {
            hist[(s.min(t_clip)) as usize] += 1;
        }
        let lats: Vec<f64> = eps
            .iter()
            .flat_map(|e| e.decision_latencies_ms.iter().copied())
            .collect();
        let mean_lat = if lats.is_empty() { 0.0 } else { lats.iter().sum::<f64>() / lats.len() as f64 };
        let p99 = if lats.is_empty() {
            0.0
        } else {
            let mut sorted = lats.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("latencies are finite"));
            sorted[((sorted.len() - 1) as f64 * 0.99).floor() as usize]
        };
        out.insert(
            name,
            ControllerSummary {
                episodes: eps.len() as u32,
                success_rate: successes / n,
                mean_coverage: mean_cov,
                first_place_fraction: firsts / keep.len() as f64,
                staleness_median: median_u32(&samples),
                staleness_histogram: hist,
                mean_decision_latency_ms: mean_lat,
                p99_decision_latency_ms: p99,
            },
        );
    }
    Ok(Summary { tasks_total, tasks_filtered: keep.len() as u32, per_controller: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(task: &str, ctrl: ControllerKind, success: bool, coverage: f64) -> EpisodeResult {
        EpisodeResult {
            task_id: task.into(),
            controller: ctrl,
            collision_free: success,
            reached_goal: success,
            coverage,
            occupancy_staleness: vec![3, 5, 7],
            steps_taken: 10,
            termination: if success { Termination::ReachedGoal } else { Termination::Collision },
            decision_latencies_ms: vec![0.1, 0.2],
            seed: 1,
            config_digest: "d".into(),
        }
    }

    #[test]
    fn filter_keeps_tasks_with_any_success() {
        let results = BenchResults {
            schema_version: 1,
            suite_name: "t".into(),
            suite_seed: 0,
            config_digest: "d".into(),
            episodes: vec![
                ep("a", ControllerKind::Fixed, false, 0.1),
                ep("a", ControllerKind::Optimised, true, 0.3),
                ep("b", ControllerKind::Fixed, false, 0.2),
                ep("b", ControllerKind::Optimised, false, 0.2),
                ep("c", ControllerKind::Fixed, true, 0.2),
                ep("c", ControllerKind::Optimised, true, 0.4),
            ],
        };
        assert_eq!(filter_tasks(&results), vec!["a".to_string(), "c".to_string()]);
    }

    #[test]
    fn ranking_success_dominates_coverage() {
        let a = ep("t", ControllerKind::Optimised, true, 0.2);
        let b = ep("t", ControllerKind::Fixed, false, 0.9);
        let ranking = rank_methods("t", &[&b, &a]);
        assert_eq!(ranking[0].controller, ControllerKind::Optimised);
        assert_eq!(ranking[0].rank, 1);
        assert_eq!(ranking[1].controller, ControllerKind::Fixed);
        assert_eq!(ranking[1].rank, 2);
    }

    #[test]
    fn ranking_by_coverage_within_tier() {
        let a = ep("t", ControllerKind::Panning, true, 0.4);
        let b = ep("t", ControllerKind::Fixed, true, 0.3);
        let ranking = rank_methods("t", &[&b, &a]);
        assert_eq!(ranking[0].controller, ControllerKind::Panning);
        assert_eq!(ranking[1].controller, ControllerKind::Fixed);
    }

    #[test]
    fn identical_outcomes_share_rank_in_name_order() {
        let a = ep("t", ControllerKind::Panning, true, 0.4);
        let b = ep("t", ControllerKind::Fixed, true, 0.4);
        let c = ep("t", ControllerKind::LookAhead, true, 0.1);
        let ranking = rank_methods("t", &[&a, &b, &c]);
        assert_eq!(ranking[0].controller, ControllerKind::Fixed);
        assert_eq!(ranking[0].rank, 1);
        assert_eq!(ranking[1].controller, ControllerKind::Panning);
        assert_eq!(ranking[1].rank, 1);
        assert_eq!(ranking[2].controller, ControllerKind::LookAhead);
        assert_eq!(ranking[2].rank, 3);
    }

    #[test]
    fn aggregate_means_and_histogram_conservation() {
        let results = BenchResults {
            schema_version: 1,
            suite_name: "t".into(),
            suite_seed: 0,
            config_digest: "d".into(),
            episodes: vec![
                ep("a", ControllerKind::Optimised, true, 0.2),
                ep("b", ControllerKind::Optimised, true, 0.4),
            ],
        };
        let s = aggregate(&results, 100).unwrap();
        let c = &s.per_controller["optimised"];
        assert_eq!(c.success_rate, 1.0);
        assert!((c.mean_coverage - 0.3).abs() < 1e-12);
        assert_eq!(c.first_place_fraction, 1.0);
        // Histogram sums to the number of staleness samples.
        let total: u64 = c.staleness_histogram.iter().sum();
        assert_eq!(total, 6);

        let single = BenchResults {
            episodes: vec![ep("a", ControllerKind::Fixed, true, 0.5)],
            ..results
        };
        let s = aggregate(&single, 100).unwrap();
        let c = &s.per_controller["fixed"];
        assert_eq!(c.success_rate, 1.0);
        assert_eq!(c.mean_coverage, 0.5);
    }

    #[test]
    fn aggregate_empty_is_error() {
        let results = BenchResults {
            schema_version: 1,
            suite_name: "t".into(),
            suite_seed: 0,
            config_digest: "d".into(),
            episodes: vec![],
        };
        assert!(matches!(aggregate(&results, 100), Err(Error::EmptyInput(_))));
    }
}
