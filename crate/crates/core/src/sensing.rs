//! Field-of-view cone geometry, simulated depth observation with
//! occlusion, and the cone-based (non-raycast) observation-time reset.
//!
//! Occupancy belief is updated by raycasting so that occlusion is
//! respected, but observation times are reset over the *full* cone —
//! including cells behind surfaces. Deliberately marking occluded cells
//! as observed keeps reward away from space the camera cannot currently
//! see (e.g. behind a wall); the clock threshold brings such cells back
//! into consideration later.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::{CellState, GridSpec, ObservationTimeMap, ObservedMask, OccupancyGrid, Voxel};
use crate::world::{wrap_to_pi, Pose, RobotModel};

/// Camera pose in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: [f64; 3],
    /// Optical axis azimuth, rad.
    pub yaw: f64,
    /// Optical axis elevation, rad; 0 = horizontal, negative = downward.
    pub pitch: f64,
}

/// Field-of-view cone parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FovParams {
    /// Horizontal half-angle, rad.
    pub horizontal_half_angle: f64,
    /// Vertical half-angle, rad; ignored on 2D grids.
    pub vertical_half_angle: f64,
    /// Maximum sensing range, world units.
    pub max_range: f64,
    /// Angular spacing between adjacent rays, rad. The default (0.5 deg)
    /// keeps adjacent rays under one cell apart out to a 128-cell range.
    pub ray_angular_step: f64,
}

impl Default for FovParams {
    fn default() -> Self {
        Self {
            // Xtion-class RGB-D sensor: 58 x 45 degree field of view, 4 m range
            // at 5 cm cells.
            horizontal_half_angle: 29f64.to_radians(),
            vertical_half_angle: 22.5f64.to_radians(),
            max_range: 80.0,
            ray_angular_step: 0.5f64.to_radians(),
        }
    }
}

impl FovParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| a > 0.0 && a <= std::f64::consts::FRAC_PI_2;
        if !ok(self.horizontal_half_angle) || !ok(self.vertical_half_angle) {
            return Err(Error::InvalidConfig("FOV half-angles must be in (0, pi/2]".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::InvalidConfig("FOV max range must be > 0".into()));
        }
        if !(self.ray_angular_step > 0.0) {
            return Err(Error::InvalidConfig("ray angular step must be > 0".into()));
        }
        Ok(())
    }
}

/// Camera pose for a head configuration mounted on the base.
///
/// On 2D grids the camera sits at the layer's center height with zero
/// pitch; on 3D grids it sits at the mount height.
pub fn camera_pose(
    base: &Pose,
    pan: f64,
    tilt: f64,
    robot: &RobotModel,
    spec: &GridSpec,
) -> CameraPose {
    let (z, pitch) = if spec.is_2d() {
        (spec.origin[2] + 0.5 * spec.resolution, 0.0)
    } else {
        (spec.origin[2] + robot.mount_height, tilt)
    };
    CameraPose { position: [base.x, base.y, z], yaw: wrap_to_pi(base.heading + pan), pitch }
}

/// Cone membership test for a world point: within range of the camera and
/// within the horizontal (and, in 3D, vertical) half-angles of the optical
/// axis.
pub fn cone_contains(cam: &CameraPose, fov: &FovParams, two_d: bool, p: [f64; 3]) -> bool {
    let dx = p[0] - cam.position[0];
    let dy = p[1] - cam.position[1];
    let dz = if two_d { 0.0 } else { p[2] - cam.position[2] };
    let dist = (dx * dx + dy * dy + dz * dz).sqrt();
    if dist > fov.max_range {
        return false;
    }
    if dist == 0.0 {
        return true;
    }
    // Rotate the offset into the camera frame: -yaw about z, then -pitch about y.
    let (sy, cy) = cam.yaw.sin_cos();
    let x1 = dx * cy + dy * sy;
    let y1 = -dx * sy + dy * cy;
    let z1 = dz;
    if two_d {
        return y1.atan2(x1).abs() <= fov.horizontal_half_angle;
    }
    let (sp, cp) = cam.pitch.sin_cos();
    let x2 = x1 * cp + z1 * sp;
    let z2 = -x1 * sp + z1 * cp;
    y1.atan2(x2).abs() <= fov.horizontal_half_angle
        && z2.atan2(x2).abs() <= fov.vertical_half_angle
}

/// Exactly the in-bounds voxels whose centers pass [`cone_contains`],
/// in ascending flat-index order.
pub fn fov_cone_voxels(cam: &CameraPose, fov: &FovParams, spec: &GridSpec) -> Vec<Voxel> {
    let two_d = spec.is_2d();
    let res = spec.resolution;
    let r = fov.max_range;
    let cell_range = |pos: f64, origin: f64, n: u32| -> (u32, u32) {
        let lo = (((pos - r - origin) / res).floor()).max(0.0) as u32;
        let hi = ((((pos + r - origin) / res).ceil()).max(0.0) as u32).min(n.saturating_sub(1));
        (lo.min(n.saturating_sub(1)), hi)
    };
    let (x0, x1) = cell_range(cam.position[0], spec.origin[0], spec.nx);
    let (y0, y1) = cell_range(cam.position[1], spec.origin[1], spec.ny);
    let (z0, z1) = if two_d {
        (0, 0)
    } else {
        cell_range(cam.position[2], spec.origin[2], spec.nz)
    };
    let mut out = Vec::new();
    for z in z0..=z1 {
        for y in y0..=y1 {
            for x in x0..=x1 {
                let v = Voxel::new(x, y, z);
                if cone_contains(cam, fov, two_d, spec.voxel_center(v)) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Unit ray directions spanning the cone at the configured angular step.
fn ray_directions(cam: &CameraPose, fov: &FovParams, two_d: bool) -> Vec<[f64; 3]> {
    let samples = |half: f64| -> Vec<f64> {
        let n = ((2.0 * half / fov.ray_angular_step).ceil() as usize + 1).max(2);
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    };
    let azimuths = samples(fov.horizontal_half_angle);
    let elevations = if two_d { vec![0.0] } else { samples(fov.vertical_half_angle) };
    let (sy, cy) = cam.yaw.sin_cos();
    let (sp, cp) = if two_d { (0.0, 1.0) } else { cam.pitch.sin_cos() };
    let mut dirs = Vec::with_capacity(azimuths.len() * elevations.len());
    for &el in &elevations {
        let (se, ce) = el.sin_cos();
        for &az in &azimuths {
            let (sa, ca) = az.sin_cos();
            // Camera frame -> world: pitch about y, then yaw about z.
            let (xc, yc, zc) = (ce * ca, ce * sa, se);
            let x1 = xc * cp - zc * sp;
            let z1 = xc * sp + zc * cp;
            dirs.push([x1 * cy - yc * sy, x1 * sy + yc * cy, z1]);
        }
    }
    dirs
}

/// Exact integer grid traversal: visit every cell a ray segment of length
/// `max_range` intersects, in order from the origin. The visitor returns
/// `true` to stop the ray (occlusion).
fn traverse_ray<F: FnMut(Voxel) -> bool>(
    spec: &GridSpec,
    origin: [f64; 3],
    dir: [f64; 3],
    max_range: f64,
    mut visit: F,
) {
    let Ok(start) = spec.world_to_voxel(origin) else {
        return;
    };
    let mut cell = [start.x as i64, start.y as i64, start.z as i64];
    let dims = [spec.nx as i64, spec.ny as i64, spec.nz as i64];
    let res = spec.resolution;
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if dir[a] > 1e-15 {
            step[a] = 1;
            let boundary = spec.origin[a] + (cell[a] + 1) as f64 * res;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = res / dir[a];
        } else if dir[a] < -1e-15 {
            step[a] = -1;
            let boundary = spec.origin[a] + cell[a] as f64 * res;
            t_max[a] = (boundary - origin[a]) / dir[a];
            t_delta[a] = res / -dir[a];
        }
    }
    loop {
        if visit(Voxel::new(cell[0] as u32, cell[1] as u32, cell[2] as u32)) {
            return;
        }
        let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[axis] > max_range {
            return; // segment ends inside the current cell
        }
        cell[axis] += step[axis];
        if cell[axis] < 0 || cell[axis] >= dims[axis] {
            return;
        }
        t_max[axis] += t_delta[axis];
    }
}

/// Outcome of one observation.
#[derive(Debug, Default)]
pub struct ObserveOutcome {
    /// Cells whose belief transitioned to Occupied during this observation,
    /// in deterministic ray order.
    pub newly_occupied: Vec<Voxel>,
}

/// Take one simulated depth observation.
///
/// Belief is updated by raycasting: cells traversed before a hit become
/// Free (clearing any earlier Occupied belief, so departed dynamic
/// obstacles do not block replanning forever), the hit cell becomes
/// Occupied, and cells beyond a hit are untouched. Belief updates apply
/// only to cells whose centers pass the cone membership test, which keeps
/// the belief-update set a subset of the time-reset set. Observation
/// times are reset over the full cone regardless of occlusion, and the
/// ever-observed mask records belief-updated cells only.
pub fn observe(
    truth: &OccupancyGrid,
    belief: &mut OccupancyGrid,
    times: &mut ObservationTimeMap,
    observed: &mut ObservedMask,
    cam: &CameraPose,
    fov: &FovParams,
) -> Result<ObserveOutcome> {
    assert_eq!(truth.spec, belief.spec, "grids must share one spec");
    assert_eq!(truth.spec, times.spec, "grids must share one spec");
    assert_eq!(truth.spec, observed.spec, "grids must share one spec");
    fov.validate()?;
    let spec = truth.spec;
    let two_d = spec.is_2d();

    let cone = fov_cone_voxels(cam, fov, &spec);
    times.mark_observed(&cone)?;

    let mut outcome = ObserveOutcome::default();
    for dir in ray_directions(cam, fov, two_d) {
        traverse_ray(&spec, cam.position, dir, fov.max_range, |v| {
            let flat = spec.flat(v);
            let hit = truth.state_at(flat) == CellState::Occupied;
            if cone_contains(cam, fov, two_d, spec.voxel_center(v)) {
                if hit {
                    if belief.state_at(flat) != CellState::Occupied {
                        belief.set_state_at(flat, CellState::Occupied);
                        outcome.newly_occupied.push(v);
                    }
                } else {
                    belief.set_state_at(flat, CellState::Free);
                }
                observed.mark(v);
            }
            hit
        });
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_2d(n: u32) -> GridSpec {
        GridSpec::new_2d(n, n, 1.0).unwrap()
    }

    fn fov_2d(range: f64, half_deg: f64) -> FovParams {
        FovParams {
            horizontal_half_angle: half_deg.to_radians(),
            max_range: range,
            ..FovParams::default()
        }
    }

    /// Independent membership oracle: same geometric definition, written
    /// from scratch against the raw spec fields.
    fn oracle_cone(cam: &CameraPose, fov: &FovParams, spec: &GridSpec) -> Vec<Voxel> {
        let two_d = spec.nz == 1;
        let mut out = Vec::new();
        for z in 0..spec.nz {
            for y in 0..spec.ny {
                for x in 0..spec.nx {
                    let cx = spec.origin[0] + (x as f64 + 0.5) * spec.resolution;
                    let cy = spec.origin[1] + (y as f64 + 0.5) * spec.resolution;
                    let cz = spec.origin[2] + (z as f64 + 0.5) * spec.resolution;
                    let dx = cx - cam.position[0];
                    let dy = cy - cam.position[1];
                    let dz = if two_d { 0.0 } else { cz - cam.position[2] };
                    let dist = (dx * dx + dy * dy + dz * dz).sqrt();
                    if dist > fov.max_range {
                        continue;
                    }
                    let inside = if dist == 0.0 {
                        true
                    } else {
                        let x1 = dx * cam.yaw.cos() + dy * cam.yaw.sin();
                        let y1 = -dx * cam.yaw.sin() + dy * cam.yaw.cos();
                        if two_d {
                            y1.atan2(x1).abs() <= fov.horizontal_half_angle
                        } else {
                            let x2 = x1 * cam.pitch.cos() + dz * cam.pitch.sin();
                            let z2 = -x1 * cam.pitch.sin() + dz * cam.pitch.cos();
                            y1.atan2(x2).abs() <= fov.horizontal_half_angle
                                && z2.atan2(x2).abs() <= fov.vertical_half_angle
                        }
                    };
                    if inside {
                        out.push(Voxel::new(x, y, z));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn zero_range_cone_is_empty() {
        let spec = spec_2d(10);
        let cam = CameraPose { position: [5.2, 5.2, 0.5], yaw: 0.0, pitch: 0.0 };
        let mut fov = fov_2d(0.0, 45.0);
        // Validation rejects range 0, but the geometric set must also be
        // empty for a vanishing positive range that excludes every center.
        fov.max_range = 1e-12;
        let cone = fov_cone_voxels(&cam, &fov, &spec);
        assert!(cone.iter().all(|&v| spec.voxel_center(v) == cam.position || false));
        // Range shorter than the distance to any center but not at a center.
        let cam2 = CameraPose { position: [5.2, 5.2, 0.5], yaw: 0.0, pitch: 0.0 };
        assert!(fov_cone_voxels(&cam2, &fov, &spec).is_empty());
    }

    #[test]
    fn cone_matches_exhaustive_oracle_2d() {
        let spec = spec_2d(16);
        let cam = CameraPose { position: [8.5, 8.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(3.0, 45.0);
        assert_eq!(fov_cone_voxels(&cam, &fov, &spec), oracle_cone(&cam, &fov, &spec));
    }

    #[test]
    fn cone_periodic_under_full_turn() {
        let spec = spec_2d(20);
        let cam = CameraPose { position: [9.3, 7.1, 0.5], yaw: 0.4, pitch: 0.0 };
        let turned = CameraPose { yaw: 0.4 + std::f64::consts::TAU, ..cam };
        let fov = fov_2d(6.0, 31.0);
        assert_eq!(fov_cone_voxels(&cam, &fov, &spec), fov_cone_voxels(&turned, &fov, &spec));
    }

    #[test]
    fn cone_matches_oracle_3d() {
        let spec = GridSpec::new(12, 12, 8, 1.0, [0.0; 3]).unwrap();
        let cam = CameraPose { position: [6.3, 6.1, 4.2], yaw: 1.1, pitch: -0.4 };
        let fov = FovParams {
            horizontal_half_angle: 0.6,
            vertical_half_angle: 0.35,
            max_range: 5.0,
            ..FovParams::default()
        };
        assert_eq!(fov_cone_voxels(&cam, &fov, &spec), oracle_cone(&cam, &fov, &spec));
    }

    fn fresh_state(spec: GridSpec) -> (OccupancyGrid, ObservationTimeMap, ObservedMask) {
        (
            OccupancyGrid::filled(spec, CellState::Unknown),
            ObservationTimeMap::new(spec, 100),
            ObservedMask::new(spec),
        )
    }

    #[test]
    fn empty_scene_cone_becomes_free_with_zero_times() {
        let spec = spec_2d(20);
        let truth = OccupancyGrid::filled(spec, CellState::Free);
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [3.5, 10.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(8.0, 40.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        for &v in &fov_cone_voxels(&cam, &fov, &spec) {
            assert_eq!(belief.state(v), CellState::Free, "cell {v:?}");
            assert_eq!(times.t(v), 0);
            assert!(mask.is_seen(v));
        }
    }

    #[test]
    fn wall_occludes_belief_but_resets_times() {
        let spec = spec_2d(30);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        // A wall bisecting the cone at x = 12.
        for y in 0..30u32 {
            truth.set_state(Voxel::new(12, y, 0), CellState::Occupied);
        }
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [4.5, 15.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(14.0, 30.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();

        // The wall cell straight ahead is a hit.
        assert_eq!(belief.state(Voxel::new(12, 15, 0)), CellState::Occupied);
        // Behind the wall: belief untouched, but the clock was reset.
        let behind = Voxel::new(14, 15, 0);
        assert_eq!(belief.state(behind), CellState::Unknown);
        assert_eq!(times.t(behind), 0);
        assert!(!mask.is_seen(behind));
    }

    #[test]
    fn occlusion_soundness_no_free_behind_first_hit() {
        let spec = spec_2d(30);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        for y in 10..21u32 {
            truth.set_state(Voxel::new(15, y, 0), CellState::Occupied);
        }
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [5.5, 15.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(20.0, 20.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        // Directly behind the wall segment the belief must not be Free.
        for x in 16..26u32 {
            assert_ne!(belief.state(Voxel::new(x, 15, 0)), CellState::Free, "x = {x}");
        }
    }

    #[test]
    fn observation_is_idempotent_in_static_scene() {
        let spec = spec_2d(24);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        for y in 8..16u32 {
            truth.set_state(Voxel::new(17, y, 0), CellState::Occupied);
        }
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [6.5, 12.5, 0.5], yaw: 0.2, pitch: 0.0 };
        let fov = fov_2d(12.0, 35.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        let (b1, t1) = (belief.clone(), times.clone());
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        assert_eq!(belief, b1);
        assert_eq!(times, t1);
    }

    #[test]
    fn time_reset_set_contains_belief_update_set() {
        let spec = spec_2d(26);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        for y in 4..20u32 {
            truth.set_state(Voxel::new(13, y, 0), CellState::Occupied);
        }
        let mut belief = OccupancyGrid::filled(spec, CellState::Unknown);
        let mut times = ObservationTimeMap::new(spec, 100);
        let mut mask = ObservedMask::new(spec);
        let cam = CameraPose { position: [6.2, 11.8, 0.5], yaw: -0.3, pitch: 0.0 };
        let fov = fov_2d(9.0, 33.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        for flat in 0..spec.cell_count() {
            if belief.state_at(flat) != CellState::Unknown {
                assert_eq!(times.t_at(flat), 0, "belief-updated cell missing time reset");
            }
        }
    }

    #[test]
    fn dynamic_overwrite_clears_departed_obstacles() {
        let spec = spec_2d(20);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        truth.set_state(Voxel::new(10, 10, 0), CellState::Occupied);
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [4.5, 10.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(12.0, 30.0);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        assert_eq!(belief.state(Voxel::new(10, 10, 0)), CellState::Occupied);
        // Obstacle departs; the same view now clears it.
        truth.set_state(Voxel::new(10, 10, 0), CellState::Free);
        observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        assert_eq!(belief.state(Voxel::new(10, 10, 0)), CellState::Free);
    }

    #[test]
    fn newly_occupied_reports_transitions_once() {
        let spec = spec_2d(20);
        let mut truth = OccupancyGrid::filled(spec, CellState::Free);
        truth.set_state(Voxel::new(9, 10, 0), CellState::Occupied);
        let (mut belief, mut times, mut mask) = fresh_state(spec);
        let cam = CameraPose { position: [3.5, 10.5, 0.5], yaw: 0.0, pitch: 0.0 };
        let fov = fov_2d(10.0, 25.0);
        let out = observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        assert_eq!(out.newly_occupied, vec![Voxel::new(9, 10, 0)]);
        let out2 = observe(&truth, &mut belief, &mut times, &mut mask, &cam, &fov).unwrap();
        assert!(out2.newly_occupied.is_empty());
    }
}
