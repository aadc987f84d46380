//! Swept-occupancy computation, tiered reward assignment, motion-primitive
//! enumeration, greedy selection, and the heuristic baseline controllers.
//!
//! The reward field couples two objectives: keeping the swept volume of the
//! planned trajectory recently observed (safety), and re-observing stale
//! regions of the workspace (exploration). Each decision step the full
//! discretised pan/tilt grid is scored against the field and the best
//! primitive wins; locality is enforced by slew-rate-limited execution
//! rather than by pruning the candidate set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{camera_pose, cone_contains, fov_cone_voxels, FovParams};
use crate::voxel::{GridSpec, ObservationTimeMap, Voxel};
use crate::world::{for_each_footprint_cell, wrap_to_pi, Pose, RobotModel};

/// Sentinel for cells never covered by the trajectory footprint, kept
/// distinct from step index 0 (the trajectory's first state counts as
/// occupancy at index 0).
pub const NOT_SWEPT: u32 = u32::MAX;

/// A planned base trajectory: uniformly time-stamped states starting at
/// `start_step`, one state per decision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start_step: u32,
    pub states: Vec<Pose>,
}

impl Trajectory {
    /// Planned duration `T`: number of states minus one.
    pub fn duration(&self) -> u32 {
        (self.states.len() as u32).saturating_sub(1)
    }

    pub fn validate(&self, robot: &RobotModel, resolution: f64) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidConfig("trajectory must be non-empty".into()));
        }
        let max_step = robot.speed_world(resolution) + 1e-9;
        for w in self.states.windows(2) {
            if w[0].distance(&w[1]) > max_step {
                return Err(Error::InvalidConfig(
                    "trajectory step exceeds base speed".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-voxel earliest trajectory step index of robot occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweptOccupancyMap {
    pub spec: GridSpec,
    /// Trajectory duration the map was built from.
    pub duration: u32,
    v: Vec<u32>,
}

impl SweptOccupancyMap {
    /// Earliest trajectory step whose footprint covers the cell, if any.
    #[inline]
    pub fn earliest_step(&self, flat: usize) -> Option<u32> {
        match self.v[flat] {
            NOT_SWEPT => None,
            tau => Some(tau),
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.v
    }
}

/// For each voxel, the minimum trajectory step index at which the robot
/// footprint covers it, else [`NOT_SWEPT`].
pub fn swept_occupancy(
    traj: &Trajectory,
    robot: &RobotModel,
    spec: &GridSpec,
) -> SweptOccupancyMap {
    let mut v = vec![NOT_SWEPT; spec.cell_count()];
    for (tau, state) in traj.states.iter().enumerate() {
        for_each_footprint_cell(spec, state, robot, |cell| {
            let flat = spec.flat(cell);
            if v[flat] == NOT_SWEPT {
                v[flat] = tau as u32;
            }
        });
    }
    SweptOccupancyMap { spec: *spec, duration: traj.duration(), v }
}

/// Weighting applied to voxel rewards inside an evaluated cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeWeighting {
    /// Every cone voxel counts with weight 1.
    Uniform,
    /// Weight `1 / (1 + distance)` in world units from the camera.
    InverseDistance,
}

/// Tiered reward parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeParams {
    /// Reward for soon-to-be-occupied swept cells.
    pub c1: f64,
    /// Reward for later swept cells.
    pub c2: f64,
    /// Staleness reward slope for everything else.
    pub c3: f64,
    /// Priority horizon in trajectory steps; `None` derives `ceil(T / 3)`
    /// from the current trajectory duration.
    pub tau_s: Option<u32>,
    /// Staleness threshold in decision steps for a safe "time last
    /// observed"; smaller is more conservative.
    pub tau_c: u32,
    /// Observation clock clip in decision steps.
    pub t_clip: u32,
    /// Use the swept-branch staleness conditions exactly as printed
    /// (first branch requires `t < tau_c`) instead of the amended reading
    /// that rewards stale swept cells in both branches.
    pub literal_eq2: bool,
    pub weighting: ConeWeighting,
}

impl Default for GazeParams {
    fn default() -> Self {
        Self {
            c1: 1e6,
            c2: 1e3,
            c3: 1.0,
            tau_s: None,
            tau_c: 10,
            t_clip: 100,
            literal_eq2: false,
            weighting: ConeWeighting::Uniform,
        }
    }
}

impl GazeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > self.c2 && self.c2 > self.c3 && self.c3 > 0.0) {
            return Err(Error::InvalidConfig("reward constants must satisfy c1 > c2 > c3 > 0".into()));
        }
        if self.tau_c > self.t_clip {
            return Err(Error::InvalidConfig("tau_c must not exceed t_clip".into()));
        }
        Ok(())
    }

    /// Effective priority horizon for a trajectory of duration `t`.
    pub fn effective_tau_s(&self, duration: u32) -> u32 {
        self.tau_s.unwrap_or(duration.div_ceil(3))
    }
}

/// Per-voxel scalar reward field.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardField {
    pub spec: GridSpec,
    r: Vec<f64>,
}

impl RewardField {
    #[inline]
    pub fn reward_at(&self, flat: usize) -> f64 {
        self.r[flat]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r
    }
}

/// Assign every voxel exactly one reward branch.
///
/// Default semantics: `c1` for swept cells with `v <= tau_s` and
/// `t >= tau_c`; `c2` for swept cells with `v > tau_s` and `t >= tau_c`;
/// otherwise `max(c3 * t, 1)`. With `literal_eq2` the first branch
/// instead requires `t < tau_c`.
pub fn assign_rewards(
    swept: &SweptOccupancyMap,
    times: &ObservationTimeMap,
    p: &GazeParams,
) -> RewardField {
    assert_eq!(swept.spec, times.spec, "grids must share one spec");
    let tau_s = p.effective_tau_s(swept.duration);
    let tau_c = p.tau_c;
    let r = swept
        .as_slice()
        .iter()
        .zip(times.as_slice())
        .map(|(&v, &t)| {
            let otherwise = (p.c3 * t as f64).max(1.0);
            if v == NOT_SWEPT {
                return otherwise;
            }
            let near = v <= tau_s;
            if p.literal_eq2 {
                if near && t < tau_c {
                    p.c1
                } else if !near && t >= tau_c {
                    p.c2
                } else {
                    otherwise
                }
            } else if t >= tau_c {
                if near {
                    p.c1
                } else {
                    p.c2
                }
            } else {
                otherwise
            }
        })
        .collect();
    RewardField { spec: swept.spec, r }
}

/// One candidate head configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub pan: f64,
    pub tilt: f64,
    pub feasible: bool,
}

/// Discretisation of the pan/tilt grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrimitiveDisc {
    /// Pan spacing in radians.
    pub pan_step: f64,
    /// Number of tilt values spanning the tilt limits; 1 uses the midpoint.
    pub tilt_count: u32,
}

impl Default for PrimitiveDisc {
    fn default() -> Self {
        // pi/16 spacing over [-pi/2, pi/2]: 17 pan positions.
        Self { pan_step: std::f64::consts::PI / 16.0, tilt_count: 1 }
    }
}

/// Enumerate the full cartesian pan x tilt grid over the joint limits,
/// pan-major in ascending order, each primitive tagged feasible against
/// the limits.
pub fn enumerate_primitives(
    current: (f64, f64),
    robot: &RobotModel,
    disc: &PrimitiveDisc,
) -> Vec<MotionPrimitive> {
    let _ = current; // the grid is absolute; locality comes from slew limiting
    let (pan_min, pan_max) = robot.pan_limits;
    let (tilt_min, tilt_max) = robot.tilt_limits;
    let span = pan_max - pan_min;
    let n_pan = ((span / disc.pan_step).round() as usize).max(1) + 1;
    let pans: Vec<f64> = (0..n_pan)
        .map(|i| pan_min + span * i as f64 / (n_pan - 1) as f64)
        .collect();
    let tilts: Vec<f64> = if disc.tilt_count <= 1 {
        vec![0.5 * (tilt_min + tilt_max)]
    } else {
        (0..disc.tilt_count)
            .map(|i| tilt_min + (tilt_max - tilt_min) * i as f64 / (disc.tilt_count - 1) as f64)
            .collect()
    };
    let eps = 1e-9;
    let mut prims = Vec::with_capacity(pans.len() * tilts.len());
    for &pan in &pans {
        for &tilt in &tilts {
            let feasible = pan >= pan_min - eps
                && pan <= pan_max + eps
                && tilt >= tilt_min - eps
                && tilt <= tilt_max + eps;
            prims.push(MotionPrimitive { pan, tilt, feasible });
        }
    }
    prims
}

/// Sentinel reward for infeasible primitives.
pub const INFEASIBLE_REWARD: f64 = f64::NEG_INFINITY;

/// Weighted sum of rewards over the primitive's field-of-view cone.
///
/// Infeasible primitives return the sentinel minimum immediately, with no
/// cone evaluation performed.
pub fn evaluate_primitive(
    prim: &MotionPrimitive,
    field: &RewardField,
    base: &Pose,
    robot: &RobotModel,
    fov: &FovParams,
    weighting: ConeWeighting,
) -> f64 {
    if !prim.feasible {
        return INFEASIBLE_REWARD;
    }
    let spec = field.spec;
    let cam = camera_pose(base, prim.pan, prim.tilt, robot, &spec);
    let mut sum = 0.0;
    for v in fov_cone_voxels(&cam, fov, &spec) {
        let r = field.reward_at(spec.flat(v));
        match weighting {
            ConeWeighting::Uniform => sum += r,
            ConeWeighting::InverseDistance => {
                let c = spec.voxel_center(v);
                let dx = c[0] - cam.position[0];
                let dy = c[1] - cam.position[1];
                let dz = if spec.is_2d() { 0.0 } else { c[2] - cam.position[2] };
                sum += r / (1.0 + (dx * dx + dy * dy + dz * dz).sqrt());
            }
        }
    }
    sum
}

/// Greedy argmax over evaluated primitives.
///
/// Ties break towards the smallest angular distance from the current head
/// state, then enumeration order. If every primitive is infeasible the
/// result is a hold-position command at the current head state.
pub fn select_best(
    evals: &[(MotionPrimitive, f64)],
    current: (f64, f64),
) -> MotionPrimitive {
    assert!(!evals.is_empty(), "select_best requires at least one evaluation");
    if evals.iter().all(|(p, _)| !p.feasible) {
        return MotionPrimitive { pan: current.0, tilt: current.1, feasible: true };
    }
    let dist2 = |p: &MotionPrimitive| {
        let dp = p.pan - current.0;
        let dt = p.tilt - current.1;
        dp * dp + dt * dt
    };
    let mut best = 0usize;
    for i in 1..evals.len() {
        let (bp, br) = &evals[best];
        let (ip, ir) = &evals[i];
        if ir > br || (ir == br && dist2(ip) < dist2(bp)) {
            best = i;
        }
    }
    evals[best].0
}

/// The four head behaviours under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Fixed,
    Panning,
    LookAhead,
    Optimised,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Fixed,
        ControllerKind::Panning,
        ControllerKind::LookAhead,
        ControllerKind::Optimised,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Fixed => "fixed",
            ControllerKind::Panning => "panning",
            ControllerKind::LookAhead => "lookahead",
            ControllerKind::Optimised => "optimised",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(ControllerKind::Fixed),
            "panning" => Ok(ControllerKind::Panning),
            "lookahead" | "look-ahead" => Ok(ControllerKind::LookAhead),
            "optimised" | "optimized" => Ok(ControllerKind::Optimised),
            other => Err(Error::InvalidConfig(format!("unknown controller '{other}'"))),
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Controller-specific tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    /// Look-ahead distance in trajectory steps.
    pub lookahead_steps: u32,
    /// Decision steps for one full pan sweep across the limits.
    pub panning_sweep_steps: u32,
    /// Ground-intersection angle for the fixed tilt, degrees below horizontal.
    pub ground_intersect_deg: f64,
    pub disc: PrimitiveDisc,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            lookahead_steps: 10,
            panning_sweep_steps: 40,
            ground_intersect_deg: 30.0,
            disc: PrimitiveDisc::default(),
        }
    }
}

/// A pan/tilt target produced by a controller; the executor slews the
/// head toward it under the joint rate limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadCommand {
    pub pan: f64,
    pub tilt: f64,
}

/// Episode state visible to a controller at one decision step.
pub struct ControllerContext<'a> {
    pub step: u32,
    pub base: Pose,
    /// Current head state (pan, tilt).
    pub head: (f64, f64),
    pub trajectory: Option<&'a Trajectory>,
    /// Index of the current state within the trajectory.
    pub cursor: usize,
    pub times: &'a ObservationTimeMap,
    pub robot: &'a RobotModel,
    pub fov: &'a FovParams,
    pub gaze: &'a GazeParams,
    pub params: &'a ControllerParams,
}

fn fixed_tilt(ctx: &ControllerContext<'_>) -> f64 {
    if ctx.times.spec.is_2d() {
        0.0
    } else {
        let (lo, hi) = ctx.robot.tilt_limits;
        (-ctx.params.ground_intersect_deg.to_radians()).clamp(lo, hi)
    }
}

/// Compute one head command for the requested behaviour.
///
/// Fixed: constant forward command. Panning: triangle-wave pan across the
/// limits. LookAhead: aim at the base position a fixed number of steps
/// ahead on the current trajectory, clamped at its end. Optimised: the
/// full swept-reward pipeline. LookAhead and Optimised fail with
/// [`Error::NoTrajectory`] when no plan exists.
pub fn controller_step(kind: ControllerKind, ctx: &ControllerContext<'_>) -> Result<HeadCommand> {
    match kind {
        ControllerKind::Fixed => Ok(HeadCommand { pan: 0.0, tilt: fixed_tilt(ctx) }),
        ControllerKind::Panning => {
            let (pan_min, pan_max) = ctx.robot.pan_limits;
            let span = pan_max - pan_min;
            let rate = span / ctx.params.panning_sweep_steps.max(1) as f64;
            let period = 2.0 * span;
            // Phase chosen so the sweep starts at pan = 0 moving upward.
            let u0 = 0.0f64.clamp(pan_min, pan_max) - pan_min;
            let u = (u0 + ctx.step as f64 * rate).rem_euclid(period);
            let pan = if u <= span { pan_min + u } else { pan_max - (u - span) };
            Ok(HeadCommand { pan, tilt: fixed_tilt(ctx) })
        }
        ControllerKind::LookAhead => {
            let traj = ctx.trajectory.ok_or(Error::NoTrajectory)?;
            let idx = (ctx.cursor + ctx.params.lookahead_steps as usize)
                .min(traj.states.len() - 1);
            let target = traj.states[idx];
            let dx = target.x - ctx.base.x;
            let dy = target.y - ctx.base.y;
            let dist = dx.hypot(dy);
            if dist < 1e-9 {
                return Ok(HeadCommand { pan: ctx.head.0, tilt: ctx.head.1 });
            }
            let (pan_min, pan_max) = ctx.robot.pan_limits;
            let pan = wrap_to_pi(dy.atan2(dx) - ctx.base.heading).clamp(pan_min, pan_max);
            let tilt = if ctx.times.spec.is_2d() {
                0.0
            } else {
                let (lo, hi) = ctx.robot.tilt_limits;
                (-ctx.robot.mount_height.atan2(dist)).clamp(lo, hi)
            };
            Ok(HeadCommand { pan, tilt })
        }
        ControllerKind::Optimised => {
            let traj = ctx.trajectory.ok_or(Error::NoTrajectory)?;
            let remaining = Trajectory {
                start_step: ctx.step,
                states: traj.states[ctx.cursor.min(traj.states.len() - 1)..].to_vec(),
            };
            let spec = ctx.times.spec;
            let swept = swept_occupancy(&remaining, ctx.robot, &spec);
            let field = assign_rewards(&swept, ctx.times, ctx.gaze);
            let prims = enumerate_primitives(ctx.head, ctx.robot, &ctx.params.disc);
            let eval = |p: &MotionPrimitive| {
                (*p, evaluate_primitive(p, &field, &ctx.base, ctx.robot, ctx.fov, ctx.gaze.weighting))
            };
            // Fan out across primitives when the candidate set is large.
            let evals: Vec<(MotionPrimitive, f64)> = if prims.len() >= 64 {
                prims.par_iter().map(eval).collect()
            } else {
                prims.iter().map(eval).collect()
            };
            let best = select_best(&evals, ctx.head);
            Ok(HeadCommand { pan: best.pan, tilt: best.tilt })
        }
    }
}

/// Slew the head toward a command under the per-step rate limit, clamped
/// to the joint limits.
pub fn slew_head(head: (f64, f64), cmd: &HeadCommand, robot: &RobotModel) -> (f64, f64) {
    let rate = robot.slew_rate;
    let clamp_step = |cur: f64, target: f64, (lo, hi): (f64, f64)| {
        (cur + (target - cur).clamp(-rate, rate)).clamp(lo, hi)
    };
    (
        clamp_step(head.0, cmd.pan, robot.pan_limits),
        clamp_step(head.1, cmd.tilt, robot.tilt_limits),
    )
}

/// Re-exported for oracle-style checks: does `cone_contains` admit this
/// voxel center for the primitive's camera pose?
pub fn primitive_cone_contains(
    prim: &MotionPrimitive,
    base: &Pose,
    robot: &RobotModel,
    fov: &FovParams,
    spec: &GridSpec,
    v: Voxel,
) -> bool {
    let cam = camera_pose(base, prim.pan, prim.tilt, robot, spec);
    cone_contains(&cam, fov, spec.is_2d(), spec.voxel_center(v))
}
