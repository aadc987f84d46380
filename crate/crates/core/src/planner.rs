//! Receding-horizon replanning on the belief map: 8-connected A* over the
//! inflated ground projection, densified to a uniformly time-stamped
//! trajectory.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::Trajectory;
use crate::voxel::{CellState, GridSpec, OccupancyGrid, Voxel};
use crate::world::{wrap_to_pi, Pose, RobotModel};

/// How Unknown belief cells are treated during planning.
///
/// Treat-as-free is the default: the robot plans through unobserved space
/// and relies on gaze plus replanning for safety.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownPolicy {
    TreatAsFree,
    TreatAsOccupied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Fixed replanning interval in decision steps.
    pub replan_interval: u32,
    pub unknown_policy: UnknownPolicy,
    /// Obstacle inflation radius in cells; should be >= the footprint
    /// radius in cells.
    pub inflation_radius_cells: u32,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            replan_interval: 5,
            unknown_policy: UnknownPolicy::TreatAsFree,
            inflation_radius_cells: 2,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replan_interval == 0 {
            return Err(Error::InvalidConfig("replan interval must be >= 1".into()));
        }
        Ok(())
    }
}

// Integer edge weights approximating the 8-connected metric:
// 99/70 = 1.4143 vs sqrt(2) = 1.4142.
const COST_STRAIGHT: u64 = 70;
const COST_DIAGONAL: u64 = 99;

#[inline]
fn octile(dx: u64, dy: u64) -> u64 {
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    COST_STRAIGHT * hi + (COST_DIAGONAL - COST_STRAIGHT) * lo
}

/// Blocked mask over the ground plane: a column is blocked when any cell
/// within the robot's height matches the occupancy policy, then the mask
/// is inflated by a Euclidean disc of `inflation_radius_cells`.
fn blocked_mask(belief: &OccupancyGrid, cfg: &PlanConfig, robot: &RobotModel) -> Vec<bool> {
    let spec = belief.spec;
    let nx = spec.nx as usize;
    let ny = spec.ny as usize;
    let z_top = if spec.is_2d() {
        1
    } else {
        (((robot.height - spec.origin[2]) / spec.resolution - 0.5).ceil() as i64)
            .clamp(1, spec.nz as i64) as u32
    };
    let occupied = |state: CellState| match state {
        CellState::Occupied => true,
        CellState::Unknown => cfg.unknown_policy == UnknownPolicy::TreatAsOccupied,
        CellState::Free => false,
    };
    let mut raw = vec![false; nx * ny];
    for z in 0..z_top {
        for y in 0..spec.ny {
            for x in 0..spec.nx {
                if occupied(belief.state(Voxel::new(x, y, z))) {
                    raw[y as usize * nx + x as usize] = true;
                }
            }
        }
    }
    let r = cfg.inflation_radius_cells as i64;
    if r == 0 {
        return raw;
    }
    let mut disc = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                disc.push((dx, dy));
            }
        }
    }
    let mut inflated = vec![false; nx * ny];
    for y in 0..ny as i64 {
        for x in 0..nx as i64 {
            if raw[y as usize * nx + x as usize] {
                for &(dx, dy) in &disc {
                    let (qx, qy) = (x + dx, y + dy);
                    if qx >= 0 && qy >= 0 && qx < nx as i64 && qy < ny as i64 {
                        inflated[qy as usize * nx + qx as usize] = true;
                    }
                }
            }
        }
    }
    inflated
}

/// Plan a trajectory from `start` to `goal` on the belief map.
///
/// The path is the shortest 8-connected route over the inflated ground
/// projection (deterministic tie-breaking), densified to uniform per-step
/// displacements of at most the base speed, time-stamped from
/// `start_step`, with headings interpolated toward the goal heading.
/// Diagonal moves never cut corners past a blocked cell. The start cell is
/// always treated as traversable so the robot can move off a cell that an
/// obstacle has been inflated onto.
pub fn plan(
    belief: &OccupancyGrid,
    start: &Pose,
    goal: &Pose,
    cfg: &PlanConfig,
    robot: &RobotModel,
    start_step: u32,
) -> Result<Trajectory> {
    cfg.validate()?;
    let spec = belief.spec;
    let nx = spec.nx as usize;
    let start_cell = ground_cell(&spec, start)?;
    let goal_cell = ground_cell(&spec, goal)?;

    if start_cell == goal_cell {
        return Ok(densify(&spec, &[[start.x, start.y], [goal.x, goal.y]], start, goal, robot, start_step));
    }

    let blocked = blocked_mask(belief, cfg, robot);
    let goal_flat = goal_cell.1 * nx + goal_cell.0;
    if blocked[goal_flat] {
        return Err(Error::NoPath);
    }

    let path = astar(&spec, &blocked, start_cell, goal_cell).ok_or(Error::NoPath)?;

    // Polyline: exact start pose, interior cell centers, exact goal pose.
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(path.len() + 1);
    pts.push([start.x, start.y]);
    for &(x, y) in path.iter().skip(1).take(path.len().saturating_sub(2)) {
        let c = spec.voxel_center(Voxel::new(x as u32, y as u32, 0));
        pts.push([c[0], c[1]]);
    }
    pts.push([goal.x, goal.y]);
    Ok(densify(&spec, &pts, start, goal, robot, start_step))
}

fn ground_cell(spec: &GridSpec, pose: &Pose) -> Result<(usize, usize)> {
    let z = spec.origin[2] + 0.5 * spec.resolution;
    let v = spec.world_to_voxel([pose.x, pose.y, z])?;
    Ok((v.x as usize, v.y as usize))
}

/// 8-connected A* with octile heuristic and deterministic tie-breaking
/// by (f, h, flat index). Returns the cell path including both endpoints.
fn astar(
    spec: &GridSpec,
    blocked: &[bool],
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<Vec<(usize, usize)>> {
    let nx = spec.nx as usize;
    let ny = spec.ny as usize;
    let flat = |x: usize, y: usize| y * nx + x;
    let h = |x: usize, y: usize| {
        octile((x as i64 - goal.0 as i64).unsigned_abs(), (y as i64 - goal.1 as i64).unsigned_abs())
    };

    let mut g = vec![u64::MAX; nx * ny];
    let mut parent = vec![u32::MAX; nx * ny];
    let mut heap: BinaryHeap<Reverse<(u64, u64, u32)>> = BinaryHeap::new();
    let sf = flat(start.0, start.1);
    g[sf] = 0;
    heap.push(Reverse((h(start.0, start.1), h(start.0, start.1), sf as u32)));

    const DIRS: [(i64, i64); 8] =
        [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

    while let Some(Reverse((f, _, cur))) = heap.pop() {
        let cur = cur as usize;
        let (cx, cy) = (cur % nx, cur / nx);
        if (cx, cy) == goal {
            let mut path = vec![(cx, cy)];
            let mut node = cur;
            while parent[node] != u32::MAX {
                node = parent[node] as usize;
                path.push((node % nx, node / nx));
            }
            path.reverse();
            return Some(path);
        }
        if f > g[cur].saturating_add(h(cx, cy)) {
            continue; // stale heap entry
        }
        for &(dx, dy) in &DIRS {
            let (qx, qy) = (cx as i64 + dx, cy as i64 + dy);
            if qx < 0 || qy < 0 || qx >= nx as i64 || qy >= ny as i64 {
                continue;
            }
            let (qx, qy) = (qx as usize, qy as usize);
            let qf = flat(qx, qy);
            if blocked[qf] {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal {
                // No corner cutting: both orthogonal neighbours must be open.
                let a = flat(qx, cy);
                let b = flat(cx, qy);
                if blocked[a] || blocked[b] {
                    continue;
                }
            }
            let step = if diagonal { COST_DIAGONAL } else { COST_STRAIGHT };
            let cand = g[cur] + step;
            if cand < g[qf] {
                g[qf] = cand;
                parent[qf] = cur as u32;
                let hq = h(qx, qy);
                heap.push(Reverse((cand + hq, hq, qf as u32)));
            }
        }
    }
    None
}

/// Walk the polyline at fixed arc-length increments of one base-speed step,
/// emitting uniformly spaced states; the final polyline point is always the
/// last state. Headings interpolate from the start heading to the goal
/// heading along the sequence.
fn densify(
    spec: &GridSpec,
    pts: &[[f64; 2]],
    start: &Pose,
    goal: &Pose,
    robot: &RobotModel,
    start_step: u32,
) -> Trajectory {
    let step_len = robot.speed_world(spec.resolution);
    let mut positions: Vec<[f64; 2]> = vec![pts[0]];
    let mut carry = step_len;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let seg_len = (b[0] - a[0]).hypot(b[1] - a[1]);
        if seg_len <= 1e-12 {
            continue;
        }
        let mut d = carry;
        while d < seg_len {
            let f = d / seg_len;
            positions.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
            d += step_len;
        }
        carry = d - seg_len;
    }
    let end = *pts.last().expect("non-empty polyline");
    let last = *positions.last().expect("at least the start");
    if (last[0] - end[0]).hypot(last[1] - end[1]) > 1e-12 {
        positions.push(end);
    }

    let n = positions.len();
    let dh = wrap_to_pi(goal.heading - start.heading);
    let states = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let f = if n <= 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
            Pose::new(p[0], p[1], wrap_to_pi(start.heading + dh * f))
        })
        .collect();
    Trajectory { start_step, states }
}

/// True when a replan is due: the fixed interval has elapsed, or newly
/// Occupied belief intersects the remaining swept cells of the current
/// trajectory (event trigger).
pub fn replan_due(step: u32, last_plan_step: u32, cfg: &PlanConfig, path_blocked: bool) -> bool {
    path_blocked || step.saturating_sub(last_plan_step) >= cfg.replan_interval
}

/// Event-trigger test: does any newly Occupied cell lie inside the robot
/// footprint of any remaining trajectory state?
pub fn path_blocked_by(
    traj: &Trajectory,
    cursor: usize,
    newly_occupied: &[Voxel],
    spec: &GridSpec,
    robot: &RobotModel,
) -> bool {
    if newly_occupied.is_empty() {
        return false;
    }
    let r2 = robot.footprint_radius * robot.footprint_radius;
    for state in &traj.states[cursor.min(traj.states.len() - 1)..] {
        for &v in newly_occupied {
            let c = spec.voxel_center(v);
            if !spec.is_2d() && c[2] >= robot.height {
                continue;
            }
            let dx = c[0] - state.x;
            let dy = c[1] - state.y;
            if dx * dx + dy * dy < r2 {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::CellState;

    fn free_belief(n: u32) -> OccupancyGrid {
        OccupancyGrid::filled(GridSpec::new_2d(n, n, 1.0).unwrap(), CellState::Free)
    }

    fn robot() -> RobotModel {
        RobotModel { footprint_radius: 1.5, base_speed: 1.0, ..RobotModel::default() }
    }

    fn path_length(t: &Trajectory) -> f64 {
        t.states.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    #[test]
    fn straight_path_close_to_euclidean() {
        let belief = free_belief(100);
        let start = Pose::new(10.0, 10.0, 0.0);
        let goal = Pose::new(10.0, 90.0, 0.0);
        let t = plan(&belief, &start, &goal, &PlanConfig::default(), &robot(), 0).unwrap();
        let len = path_length(&t);
        let euclid = start.distance(&goal);
        assert!(len >= euclid - 1e-9);
        assert!(len <= euclid * 1.05, "len {len} vs euclid {euclid}");
    }

    #[test]
    fn diagonal_path_close_to_octile_bound() {
        let belief = free_belief(100);
        let start = Pose::new(10.5, 10.5, 0.0);
        let goal = Pose::new(80.5, 50.5, 0.0);
        let t = plan(&belief, &start, &goal, &PlanConfig::default(), &robot(), 0).unwrap();
        let len = path_length(&t);
        // Exact octile distance lower bound for 8-connected motion.
        let dx = (goal.x - start.x).abs();
        let dy = (goal.y - start.y).abs();
        let octile = dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy);
        assert!(len >= octile * 0.999);
        assert!(len <= octile * 1.05, "len {len} vs octile {octile}");
    }

    #[test]
    fn goal_in_occupied_region_is_no_path() {
        let mut belief = free_belief(50);
        for y in 20..30u32 {
            for x in 20..30u32 {
                belief.set_state(Voxel::new(x, y, 0), CellState::Occupied);
            }
        }
        let start = Pose::new(5.0, 5.0, 0.0);
        let goal = Pose::new(25.0, 25.0, 0.0);
        let r = plan(&belief, &start, &goal, &PlanConfig::default(), &robot(), 0);
        assert!(matches!(r, Err(Error::NoPath)));
    }

    #[test]
    fn start_equals_goal_single_state() {
        let belief = free_belief(20);
        let p = Pose::new(10.2, 10.7, 0.3);
        let t = plan(&belief, &p, &p, &PlanConfig::default(), &robot(), 4).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.duration(), 0);
        assert_eq!(t.start_step, 4);
    }

    #[test]
    fn unknown_policy_changes_reachability() {
        let mut belief = OccupancyGrid::filled(
            GridSpec::new_2d(40, 40, 1.0).unwrap(),
            CellState::Unknown,
        );
        // A known-free corridor along y = 20.
        for x in 0..40u32 {
            for y in 16..25u32 {
                belief.set_state(Voxel::new(x, y, 0), CellState::Free);
            }
        }
        let start = Pose::new(5.0, 20.0, 0.0);
        let goal = Pose::new(35.0, 20.0, 0.0);
        let mut cfg = PlanConfig::default();
        cfg.unknown_policy = UnknownPolicy::TreatAsFree;
        assert!(plan(&belief, &start, &goal, &cfg, &robot(), 0).is_ok());
        cfg.unknown_policy = UnknownPolicy::TreatAsOccupied;
        // Corridor remains plannable even with unknown treated as occupied.
        assert!(plan(&belief, &start, &goal, &cfg, &robot(), 0).is_ok());
        // But a goal inside unknown space is not.
        let goal_unknown = Pose::new(35.0, 5.0, 0.0);
        assert!(plan(&belief, &start, &goal_unknown, &cfg, &robot(), 0).is_err());
    }

    #[test]
    fn displacement_bounded_by_base_speed() {
        let belief = free_belief(60);
        let start = Pose::new(3.4, 7.9, 1.0);
        let goal = Pose::new(55.1, 42.3, -2.0);
        let r = robot();
        let t = plan(&belief, &start, &goal, &PlanConfig::default(), &r, 0).unwrap();
        let max_step = r.speed_world(1.0) + 1e-9;
        for w in t.states.windows(2) {
            assert!(w[0].distance(&w[1]) <= max_step);
        }
        // Headings end at the goal heading.
        assert!((wrap_to_pi(t.states.last().unwrap().heading - goal.heading)).abs() < 1e-9);
        assert!((wrap_to_pi(t.states[0].heading - start.heading)).abs() < 1e-9);
    }

    #[test]
    fn planning_is_deterministic() {
        let mut belief = free_belief(80);
        for y in 30..50u32 {
            for x in 30..50u32 {
                belief.set_state(Voxel::new(x, y, 0), CellState::Occupied);
            }
        }
        let start = Pose::new(10.0, 40.0, 0.0);
        let goal = Pose::new(70.0, 40.0, 0.0);
        let a = plan(&belief, &start, &goal, &PlanConfig::default(), &robot(), 0).unwrap();
        let b = plan(&belief, &start, &goal, &PlanConfig::default(), &robot(), 0).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn paths_avoid_inflated_obstacles() {
        let mut belief = free_belief(60);
        for y in 20..40u32 {
            belief.set_state(Voxel::new(30, y, 0), CellState::Occupied);
        }
        let cfg = PlanConfig { inflation_radius_cells: 2, ..PlanConfig::default() };
        let r = robot();
        let start = Pose::new(10.0, 30.0, 0.0);
        let goal = Pose::new(50.0, 30.0, 0.0);
        let t = plan(&belief, &start, &goal, &cfg, &r, 0).unwrap();
        for s in &t.states {
            for y in 20..40u32 {
                let c = belief.spec.voxel_center(Voxel::new(30, y, 0));
                let d = (c[0] - s.x).hypot(c[1] - s.y);
                assert!(d >= 1.0, "state ({}, {}) too close to obstacle", s.x, s.y);
            }
        }
    }

    #[test]
    fn replan_due_interval_and_event() {
        let cfg = PlanConfig { replan_interval: 5, ..PlanConfig::default() };
        assert!(replan_due(15, 10, &cfg, false));
        assert!(!replan_due(12, 10, &cfg, false));
        assert!(replan_due(11, 10, &cfg, true));
    }

    #[test]
    fn path_blocked_detects_cells_on_remaining_path() {
        let spec = GridSpec::new_2d(40, 40, 1.0).unwrap();
        let r = robot();
        let traj = Trajectory {
            start_step: 0,
            states: (0..20).map(|i| Pose::new(5.0 + i as f64, 20.0, 0.0)).collect(),
        };
        // A cell right on the later part of the path.
        let on_path = spec.world_to_voxel([15.0, 20.0, 0.5]).unwrap();
        assert!(path_blocked_by(&traj, 0, &[on_path], &spec, &r));
        // Already passed: cursor beyond it.
        assert!(!path_blocked_by(&traj, 12, &[on_path], &spec, &r));
        // Far away from the path.
        let far = spec.world_to_voxel([35.0, 35.0, 0.5]).unwrap();
        assert!(!path_blocked_by(&traj, 0, &[far], &spec, &r));
    }
}
