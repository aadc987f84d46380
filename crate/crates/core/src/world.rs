//! Ground-truth environment generation (static and scripted-dynamic),
//! task generation, and collision checking against truth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{plan, PlanConfig};
use crate::voxel::{CellState, GridSpec, OccupancyGrid, Voxel};

/// Base state of the holonomic robot: position in world units plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Physical model of the robot: a footprint disc (cylinder in 3D) carrying
/// a pan/tilt head camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotModel {
    /// Footprint radius in world units.
    pub footprint_radius: f64,
    /// Cylinder height in world units; only meaningful on 3D grids.
    pub height: f64,
    /// Base translation speed in cells per decision step.
    pub base_speed: f64,
    /// Pan joint limits (min, max) in radians, relative to the base heading.
    pub pan_limits: (f64, f64),
    /// Tilt joint limits (min, max) in radians; 0 is horizontal, negative is down.
    pub tilt_limits: (f64, f64),
    /// Maximum head joint change per decision step, radians per axis.
    pub slew_rate: f64,
    /// Camera height above the ground plane, world units; only meaningful in 3D.
    pub mount_height: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            footprint_radius: 2.0,
            height: 12.0,
            base_speed: 1.0,
            pan_limits: (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            tilt_limits: (0.0, 0.0),
            slew_rate: std::f64::consts::FRAC_PI_8,
            mount_height: 10.0,
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.footprint_radius > 0.0) {
            return Err(Error::InvalidConfig("footprint radius must be > 0".into()));
        }
        if !(self.slew_rate > 0.0) {
            return Err(Error::InvalidConfig("slew rate must be > 0".into()));
        }
        if !(self.base_speed > 0.0) {
            return Err(Error::InvalidConfig("base speed must be > 0".into()));
        }
        if self.pan_limits.0 >= self.pan_limits.1 {
            return Err(Error::InvalidConfig("pan limits must satisfy min < max".into()));
        }
        if self.tilt_limits.0 > self.tilt_limits.1 {
            return Err(Error::InvalidConfig("tilt limits must satisfy min <= max".into()));
        }
        Ok(())
    }

    /// World-unit displacement corresponding to one decision step.
    pub fn speed_world(&self, resolution: f64) -> f64 {
        self.base_speed * resolution
    }
}

/// Axis-aligned obstacle box in cell coordinates, `[min, min + size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxObstacle {
    pub min: [u32; 3],
    pub size: [u32; 3],
}

/// A waypoint of a scripted obstacle: box min-corner (world x, y) at a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub step: u32,
    pub pos: [f64; 2],
}

/// A box obstacle following a piecewise-linear schedule.
///
/// The box holds at the first waypoint before its step, interpolates
/// linearly between waypoints, and stays at the last waypoint afterwards.
/// The box rests on the ground (z = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedObstacle {
    /// Box size in cells.
    pub size: [u32; 3],
    pub waypoints: Vec<Waypoint>,
}

impl ScriptedObstacle {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidConfig("scripted obstacle needs >= 1 waypoint".into()));
        }
        for w in self.waypoints.windows(2) {
            if w[1].step <= w[0].step {
                return Err(Error::InvalidConfig(
                    "waypoint step indices must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Interpolated box min-corner position at a decision step.
    pub fn position_at(&self, step: u32) -> [f64; 2] {
        let first = self.waypoints.first().expect("validated non-empty");
        let last = self.waypoints.last().expect("validated non-empty");
        if step <= first.step {
            return first.pos;
        }
        if step >= last.step {
            return last.pos;
        }
        for w in self.waypoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            if step >= a.step && step <= b.step {
                let f = (step - a.step) as f64 / (b.step - a.step) as f64;
                return [
                    a.pos[0] + (b.pos[0] - a.pos[0]) * f,
                    a.pos[1] + (b.pos[1] - a.pos[1]) * f,
                ];
            }
        }
        last.pos
    }
}

/// A fully known simulation environment: perimeter walls, static boxes,
/// and scripted dynamic obstacles over a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub spec: GridSpec,
    /// Perimeter wall thickness in cells.
    pub perimeter: u32,
    pub static_obstacles: Vec<BoxObstacle>,
    pub dynamic_obstacles: Vec<ScriptedObstacle>,
}

impl Environment {
    /// Truth grid of the static scene: all Free except walls and boxes.
    pub fn static_truth(&self) -> OccupancyGrid {
        let mut g = OccupancyGrid::filled(self.spec, CellState::Free);
        self.stamp_perimeter(&mut g);
        for b in &self.static_obstacles {
            stamp_box(&mut g, b);
        }
        g
    }

    fn stamp_perimeter(&self, g: &mut OccupancyGrid) {
        let p = self.perimeter;
        if p == 0 {
            return;
        }
        let (nx, ny, nz) = (self.spec.nx, self.spec.ny, self.spec.nz);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if x < p || y < p || x >= nx - p || y >= ny - p {
                        g.set_state(Voxel::new(x, y, z), CellState::Occupied);
                    }
                }
            }
        }
    }

    /// Ground-truth occupancy at a decision step: static scene plus each
    /// dynamic obstacle stamped at its interpolated position.
    ///
    /// Dynamic stamping only sets cells Occupied, so static occupancy is
    /// preserved at every step.
    pub fn truth_at(&self, step: u32) -> OccupancyGrid {
        let mut g = self.static_truth();
        self.stamp_dynamic(&mut g, step);
        g
    }

    /// In-place variant of [`Environment::truth_at`] for hot loops: `out`
    /// must hold a copy of [`Environment::static_truth`] state or be reusable.
    pub fn truth_at_into(&self, static_truth: &OccupancyGrid, step: u32, out: &mut OccupancyGrid) {
        out.clone_from(static_truth);
        self.stamp_dynamic(out, step);
    }

    fn stamp_dynamic(&self, g: &mut OccupancyGrid, step: u32) {
        for s in &self.dynamic_obstacles {
            let pos = s.position_at(step);
            stamp_world_box(g, pos, s.size);
        }
    }
}

fn stamp_box(g: &mut OccupancyGrid, b: &BoxObstacle) {
    let spec = g.spec;
    let x1 = (b.min[0] + b.size[0]).min(spec.nx);
    let y1 = (b.min[1] + b.size[1]).min(spec.ny);
    let z1 = (b.min[2] + b.size[2]).min(spec.nz);
    for z in b.min[2]..z1 {
        for y in b.min[1]..y1 {
            for x in b.min[0]..x1 {
                g.set_state(Voxel::new(x, y, z), CellState::Occupied);
            }
        }
    }
}

/// Stamp a ground-resting box whose min corner sits at a world xy position:
/// every cell whose center lies inside the box volume becomes Occupied.
fn stamp_world_box(g: &mut OccupancyGrid, pos: [f64; 2], size_cells: [u32; 3]) {
    let spec = g.spec;
    let res = spec.resolution;
    let size_w = [size_cells[0] as f64 * res, size_cells[1] as f64 * res];
    let x0 = (((pos[0] - spec.origin[0]) / res - 0.5).ceil()).max(0.0) as i64;
    let y0 = (((pos[1] - spec.origin[1]) / res - 0.5).ceil()).max(0.0) as i64;
    let x1 = ((pos[0] + size_w[0] - spec.origin[0]) / res - 0.5).floor() as i64;
    let y1 = ((pos[1] + size_w[1] - spec.origin[1]) / res - 0.5).floor() as i64;
    let z1 = size_cells[2].min(spec.nz);
    for z in 0..z1 {
        for y in y0.max(0)..=y1.min(spec.ny as i64 - 1) {
            for x in x0.max(0)..=x1.min(spec.nx as i64 - 1) {
                let v = Voxel::new(x as u32, y as u32, z);
                let c = spec.voxel_center(v);
                if c[0] >= pos[0]
                    && c[0] < pos[0] + size_w[0]
                    && c[1] >= pos[1]
                    && c[1] < pos[1] + size_w[1]
                {
                    g.set_state(v, CellState::Occupied);
                }
            }
        }
    }
}

/// Visit every cell whose center lies strictly inside the robot footprint
/// at `pose`: a disc on 2D grids, a cylinder of `robot.height` on 3D grids.
pub fn for_each_footprint_cell<F: FnMut(Voxel)>(
    spec: &GridSpec,
    pose: &Pose,
    robot: &RobotModel,
    mut f: F,
) {
    let res = spec.resolution;
    let r = robot.footprint_radius;
    let r2 = r * r;
    let x0 = (((pose.x - r - spec.origin[0]) / res).floor()).max(0.0) as i64;
    let y0 = (((pose.y - r - spec.origin[1]) / res).floor()).max(0.0) as i64;
    let x1 = (((pose.x + r - spec.origin[0]) / res).ceil() as i64).min(spec.nx as i64 - 1);
    let y1 = (((pose.y + r - spec.origin[1]) / res).ceil() as i64).min(spec.ny as i64 - 1);
    let z_top = if spec.is_2d() {
        1
    } else {
        // Cells whose center height is below the cylinder top.
        (((robot.height - spec.origin[2]) / res - 0.5).ceil() as i64).clamp(0, spec.nz as i64)
    };
    for z in 0..z_top as u32 {
        for y in y0.max(0)..=y1.max(0) {
            for x in x0.max(0)..=x1.max(0) {
                if x < 0 || y < 0 || x >= spec.nx as i64 || y >= spec.ny as i64 {
                    continue;
                }
                let v = Voxel::new(x as u32, y as u32, z);
                let c = spec.voxel_center(v);
                let dx = c[0] - pose.x;
                let dy = c[1] - pose.y;
                if dx * dx + dy * dy < r2 {
                    f(v);
                }
            }
        }
    }
}

/// True iff any Occupied cell's center lies strictly inside the robot
/// footprint disc/cylinder at `pose`.
pub fn check_collision(truth: &OccupancyGrid, pose: &Pose, robot: &RobotModel) -> bool {
    let mut hit = false;
    for_each_footprint_cell(&truth.spec, pose, robot, |v| {
        if truth.state(v) == CellState::Occupied {
            hit = true;
        }
    });
    hit
}

/// Parameters for random environment generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvGenParams {
    pub dims: (u32, u32, u32),
    pub resolution: f64,
    pub n_obstacles: u32,
    /// Inclusive range of obstacle edge lengths in cells (x and y).
    pub size_range: (u32, u32),
    /// Inclusive range of obstacle heights in cells; ignored on 2D grids.
    pub height_range: (u32, u32),
    /// Perimeter wall thickness in cells.
    pub perimeter: u32,
}

/// Deterministically generate a walled environment with uniformly random
/// axis-aligned boxes. Obstacles may overlap each other but never the
/// perimeter walls.
pub fn generate_environment(seed: u64, params: &EnvGenParams) -> Result<Environment> {
    let (nx, ny, nz) = params.dims;
    let spec = GridSpec::new(nx, ny, nz, params.resolution, [0.0; 3])?;
    let (smin, smax) = params.size_range;
    if smin == 0 || smin > smax {
        return Err(Error::ParamsInfeasible("empty obstacle size range".into()));
    }
    if params.n_obstacles > 0 && (smax + 2 * params.perimeter > nx || smax + 2 * params.perimeter > ny) {
        return Err(Error::ParamsInfeasible(
            "largest obstacle cannot be placed inside the perimeter".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boxes = Vec::with_capacity(params.n_obstacles as usize);
    for _ in 0..params.n_obstacles {
        let sx = rng.gen_range(smin..=smax);
        let sy = rng.gen_range(smin..=smax);
        let sz = if nz == 1 {
            1
        } else {
            let (hmin, hmax) = params.height_range;
            rng.gen_range(hmin.max(1)..=hmax.clamp(1, nz))
        };
        let x0 = rng.gen_range(params.perimeter..=nx - params.perimeter - sx);
        let y0 = rng.gen_range(params.perimeter..=ny - params.perimeter - sy);
        boxes.push(BoxObstacle { min: [x0, y0, 0], size: [sx, sy, sz] });
    }
    Ok(Environment {
        spec,
        perimeter: params.perimeter,
        static_obstacles: boxes,
        dynamic_obstacles: Vec::new(),
    })
}

/// How task start/goal headings are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadingMode {
    /// Headings sampled uniformly in `[-pi, pi)`.
    Uniform,
    /// Both headings face from start towards goal.
    FaceGoal,
}

/// Parameters for task sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGenParams {
    /// Rejection budget before giving up.
    pub max_rejections: u32,
    /// Minimum start-goal separation in world units.
    pub min_separation: f64,
    pub heading: HeadingMode,
}

impl Default for TaskGenParams {
    fn default() -> Self {
        Self { max_rejections: 1000, min_separation: 0.0, heading: HeadingMode::Uniform }
    }
}

/// A motion planning task: an environment reference plus a start/goal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub env_seed: u64,
    pub task_seed: u64,
    pub start: Pose,
    pub goal: Pose,
}

/// Sample a start/goal pair uniformly from free space, rejection-sampled
/// until the full-knowledge oracle planner finds a path on the truth map
/// at step 0. Deterministic per `(env, seed)`. `env_seed` is recorded in
/// the task for reproducibility.
pub fn generate_task(
    env: &Environment,
    env_seed: u64,
    seed: u64,
    robot: &RobotModel,
    plan_cfg: &PlanConfig,
    params: &TaskGenParams,
) -> Result<TaskSpec> {
    let truth0 = env.truth_at(0);
    let spec = env.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = env.perimeter as f64 * spec.resolution;
    let lo = [spec.origin[0] + margin, spec.origin[1] + margin];
    let hi = [spec.world_max()[0] - margin, spec.world_max()[1] - margin];
    if lo[0] >= hi[0] || lo[1] >= hi[1] {
        return Err(Error::ParamsInfeasible("no interior space inside the perimeter".into()));
    }

    for _attempt in 0..params.max_rejections {
        let sx = rng.gen_range(lo[0]..hi[0]);
        let sy = rng.gen_range(lo[1]..hi[1]);
        let gx = rng.gen_range(lo[0]..hi[0]);
        let gy = rng.gen_range(lo[1]..hi[1]);
        let (sh, gh) = match params.heading {
            HeadingMode::Uniform => (
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            ),
            HeadingMode::FaceGoal => {
                let b = (gy - sy).atan2(gx - sx);
                (b, b)
            }
        };
        let start = Pose::new(sx, sy, sh);
        let goal = Pose::new(gx, gy, gh);
        if start.distance(&goal) < params.min_separation {
            continue;
        }
        if check_collision(&truth0, &start, robot) || check_collision(&truth0, &goal, robot) {
            continue;
        }
        // Full-knowledge oracle: plan on truth used directly as belief.
        if plan(&truth0, &start, &goal, plan_cfg, robot, 0).is_ok() {
            return Ok(TaskSpec { env_seed, task_seed: seed, start, goal });
        }
    }
    Err(Error::NoFeasibleTask { attempts: params.max_rejections })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_2d() -> EnvGenParams {
        EnvGenParams {
            dims: (100, 100, 1),
            resolution: 1.0,
            n_obstacles: 5,
            size_range: (10, 30),
            height_range: (1, 1),
            perimeter: 1,
        }
    }

    #[test]
    fn environment_generation_is_deterministic() {
        let a = generate_environment(7, &params_2d()).unwrap();
        let b = generate_environment(7, &params_2d()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.truth_at(0), b.truth_at(0));
        let c = generate_environment(8, &params_2d()).unwrap();
        assert_ne!(a.static_obstacles, c.static_obstacles);
    }

    #[test]
    fn obstacle_sizes_respect_range() {
        let env = generate_environment(7, &params_2d()).unwrap();
        assert_eq!(env.static_obstacles.len(), 5);
        for b in &env.static_obstacles {
            assert!((10..=30).contains(&b.size[0]));
            assert!((10..=30).contains(&b.size[1]));
            assert!(b.min[0] >= 1 && b.min[0] + b.size[0] <= 99);
            assert!(b.min[1] >= 1 && b.min[1] + b.size[1] <= 99);
        }
    }

    #[test]
    fn empty_environment_is_free_inside_perimeter() {
        let mut p = params_2d();
        p.n_obstacles = 0;
        let env = generate_environment(3, &p).unwrap();
        let truth = env.truth_at(0);
        for y in 0..100u32 {
            for x in 0..100u32 {
                let expect = if x == 0 || y == 0 || x == 99 || y == 99 {
                    CellState::Occupied
                } else {
                    CellState::Free
                };
                assert_eq!(truth.state(Voxel::new(x, y, 0)), expect);
            }
        }
    }

    #[test]
    fn infeasible_obstacle_size_is_rejected() {
        let mut p = params_2d();
        p.size_range = (99, 120);
        assert!(matches!(generate_environment(1, &p), Err(Error::ParamsInfeasible(_))));
    }

    #[test]
    fn scripted_obstacle_interpolates_and_holds() {
        let s = ScriptedObstacle {
            size: [2, 2, 1],
            waypoints: vec![
                Waypoint { step: 0, pos: [10.0, 5.0] },
                Waypoint { step: 10, pos: [20.0, 5.0] },
            ],
        };
        s.validate().unwrap();
        assert_eq!(s.position_at(0), [10.0, 5.0]);
        assert_eq!(s.position_at(5), [15.0, 5.0]);
        assert_eq!(s.position_at(10), [20.0, 5.0]);
        // Terminal hold beyond the last waypoint.
        assert_eq!(s.position_at(50), [20.0, 5.0]);
    }

    #[test]
    fn dynamic_stamping_preserves_static_occupancy() {
        let mut p = params_2d();
        p.n_obstacles = 2;
        let mut env = generate_environment(11, &p).unwrap();
        env.dynamic_obstacles.push(ScriptedObstacle {
            size: [4, 4, 1],
            waypoints: vec![
                Waypoint { step: 0, pos: [10.0, 10.0] },
                Waypoint { step: 20, pos: [60.0, 60.0] },
            ],
        });
        let static_truth = env.static_truth();
        for step in [0, 7, 13, 20, 33] {
            let t = env.truth_at(step);
            for flat in 0..static_truth.spec.cell_count() {
                if static_truth.state_at(flat) == CellState::Occupied {
                    assert_eq!(t.state_at(flat), CellState::Occupied);
                }
            }
        }
    }

    #[test]
    fn collision_uses_strict_interior() {
        let spec = GridSpec::new_2d(20, 20, 1.0).unwrap();
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        let robot = RobotModel { footprint_radius: 2.0, ..RobotModel::default() };

        // Centered in a free region.
        let pose = Pose::new(10.5, 10.5, 0.0);
        assert!(!check_collision(&truth, &pose, &robot));

        // Pose center inside an obstacle cell.
        truth.set_state(Voxel::new(10, 10, 0), CellState::Occupied);
        assert!(check_collision(&truth, &pose, &robot));

        // Occupied cell center exactly on the footprint boundary: no hit.
        let mut truth2 = OccupancyGrid::filled(spec, CellState::Free);
        truth2.set_state(Voxel::new(12, 10, 0), CellState::Occupied);
        // Cell center (12.5, 10.5) is exactly 2.0 from the pose center.
        assert!(!check_collision(&truth2, &pose, &robot));
        // Strictly inside by a hair: hit.
        let nudged = Pose::new(10.501, 10.5, 0.0);
        assert!(check_collision(&truth2, &nudged, &robot));
    }

    #[test]
    fn wrap_to_pi_range() {
        for k in -8i32..=8 {
            let a = 0.4 + k as f64 * std::f64::consts::TAU;
            assert!((wrap_to_pi(a) - 0.4).abs() < 1e-9);
        }
        assert!((wrap_to_pi(std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_to_pi(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    }
}
