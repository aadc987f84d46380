//! Temporary debug tracer for one episode (not part of the deliverable).

use gazebench_core::bench::suite::load_suite;
use gazebench_core::config::RunConfig;
use gazebench_core::gaze::{
    controller_step, slew_head, ControllerContext, ControllerKind, HeadCommand, Trajectory,
};
use gazebench_core::planner::{path_blocked_by, plan, replan_due};
use gazebench_core::sensing::{camera_pose, observe};
use gazebench_core::voxel::{CellState, ObservationTimeMap, ObservedMask, OccupancyGrid};
use gazebench_core::world::{check_collision, Pose};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let suite_dir = &args[1];
    let task_idx: usize = args[2].parse().unwrap();
    let kind: ControllerKind = args[3].parse().unwrap();
    let suite = load_suite(std::path::Path::new(suite_dir)).unwrap();
    let cfg: &RunConfig = &suite.config;
    let st = &suite.tasks[task_idx];
    let env = &suite.environments[st.env_index];
    let task = &st.task;
    let spec = env.spec;
    let robot = &cfg.robot;

    let truth0 = env.truth_at(0);
    let oracle = plan(&truth0, &task.start, &task.goal, &cfg.plan, robot, 0).unwrap();
    let budget = ((oracle.duration().max(1) as f64) * cfg.sim.step_budget_factor).ceil() as u32;
    println!(
        "task {} start ({:.1},{:.1}) goal ({:.1},{:.1}) oracle T={} budget={}",
        st.id, task.start.x, task.start.y, task.goal.x, task.goal.y,
        oracle.duration(), budget
    );
    for d in &env.dynamic_obstacles {
        println!("script: size {:?} waypoints {:?}", d.size, d.waypoints);
    }

    let static_truth = env.static_truth();
    let mut truth = static_truth.clone();
    let mut belief = OccupancyGrid::filled(spec, CellState::Unknown);
    let mut times = ObservationTimeMap::new(spec, cfg.gaze.t_clip);
    let mut observed = ObservedMask::new(spec);
    let mut pose = task.start;
    let mut head = (0.0f64, -(cfg.controllers.ground_intersect_deg.to_radians()));
    let mut trajectory: Option<Trajectory> = None;
    let mut cursor = 0usize;
    let mut last_plan_step = 0u32;

    for step in 0..budget {
        env.truth_at_into(&static_truth, step, &mut truth);
        let cam = camera_pose(&pose, head.0, head.1, robot, &spec);
        let outcome = observe(&truth, &mut belief, &mut times, &mut observed, &cam, &cfg.fov).unwrap();
        times.advance();

        let blocked = trajectory
            .as_ref()
            .map(|t| path_blocked_by(t, cursor, &outcome.newly_occupied, &spec, robot))
            .unwrap_or(false);
        let mut plan_note = "";
        if trajectory.is_none() || replan_due(step, last_plan_step, &cfg.plan, blocked) {
            match plan(&belief, &pose, &task.goal, &cfg.plan, robot, step) {
                Ok(t) => {
                    trajectory = Some(t);
                    cursor = 0;
                    last_plan_step = step;
                    plan_note = if blocked { "REPLAN(event)" } else { "replan" };
                }
                Err(_) => {
                    trajectory = None;
                    last_plan_step = step;
                    plan_note = "NOPATH";
                }
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
        let cmd = controller_step(kind, &ctx)
            .unwrap_or(HeadCommand { pan: head.0, tilt: head.1 });
        head = slew_head(head, &cmd, robot);
        if let Some(t) = &trajectory {
            cursor = (cursor + 1).min(t.states.len() - 1);
            pose = t.states[cursor];
        }
        let boxpos = env.dynamic_obstacles.first().map(|d| d.position_at(step)).unwrap_or([0.0, 0.0]);
        let dist_box = (pose.x - boxpos[0] - 2.5).hypot(pose.y - boxpos[1] - 2.5);
        let collided = check_collision(&truth, &pose, robot);
        let belief_occ = belief.count(CellState::Occupied);
        println!(
            "step {step:3} pose ({:6.2},{:6.2}) head ({:5.2},{:5.2})->cmd ({:5.2},{:5.2}) box ({:5.1},{:5.1}) d={:5.1} occ_belief={:4} {} {}",
            pose.x, pose.y, head.0, head.1, cmd.pan, cmd.tilt, boxpos[0], boxpos[1], dist_box, belief_occ,
            plan_note,
            if collided { "** COLLISION **" } else { "" }
        );
        if collided {
            break;
        }
        if pose.distance(&task.goal) <= cfg.sim.goal_pos_tol_cells {
            println!("reached goal at step {step}");
            break;
        }
    }
}
