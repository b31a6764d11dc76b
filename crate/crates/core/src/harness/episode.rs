//! One navigation episode: sense, map, plan on a fixed cadence, act.

use std::fs;
use std::io::Write;
use std::path::Path as FsPath;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::baselines::{frontier_goal, is_frontier, random_goal};
use super::config::{Method, RunConfig, Task};
use crate::controller::{next_action, reached, ControllerState};
use crate::ensemble::{update_ensemble_maps, EnsembleState};
use crate::formats::{render_svg, write_paths, write_pgm, PathRecord, SvgScene};
use crate::geom::Cell;
use crate::mapping::{GlobalMap, OCC};
use crate::metrics::{coverage, iou, map_accuracy, spl, MetricsRecord};
use crate::policy::{score_all_exploration, score_all_pointgoal, select_path, short_term_goal, DecisionRecord, PolicyConfig};
use crate::predictor::PredictorParams;
use crate::rrt::{plan_paths, CandidateSet, Path, RrtParams};
use crate::world::{sense, step, Action, AgentPose, Episode, Floorplan};
use crate::{Error, Result};

/// Distance at which a short-term goal counts as reached.
const SUBGOAL_RADIUS_M: f64 = 0.2;

/// Consecutive controller failures after which the current target is
/// dropped until the next replan.
const STUCK_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSnapshot {
    pub step: usize,
    pub cov_m2: f64,
    pub cov_pct: f64,
}

/// Everything an episode produced besides its artifacts on disk.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub record: MetricsRecord,
    pub snapshots: Vec<CoverageSnapshot>,
    pub decisions: Vec<DecisionRecord>,
    pub actions: Vec<Action>,
    /// Pose before the first action and after every action.
    pub trajectory: Vec<AgentPose>,
    pub collisions: usize,
    pub mean_step_seconds: f64,
}

#[derive(Debug, Clone)]
enum Target {
    Along { path: Path, idx: usize },
    Goal(Cell),
    Rotate,
}

fn replan_seed(run: u64, episode_seed: u64, step: usize) -> u64 {
    let mut z = run ^ episode_seed.rotate_left(17) ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Replan {
    target: Target,
    decision: DecisionRecord,
    candidates: Option<CandidateSet>,
}

#[allow(clippy::too_many_arguments)]
fn replan(
    cfg: &RunConfig,
    policy: &PolicyConfig,
    state: &EnsembleState,
    agent: Cell,
    goal: Option<Cell>,
    avoid: &[Cell],
    step_idx: usize,
    episode_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Replan> {
    let mode = cfg.task.mode();
    let mut decision =
        DecisionRecord { step: step_idx, mode, candidates: 0, blocked: false, reached_goal: false, scores: Vec::new(), selected: None, short_term_goal: None };
    let fused = state.fused();
    let block = cfg.controller.block_threshold;
    let target = match cfg.method {
        Method::Upen | Method::UpenOcc | Method::UpenGreedy => {
            let params = RrtParams { seed: replan_seed(cfg.seeds.run, episode_seed, step_idx), ..cfg.rrt };
            let set = match plan_paths(fused, agent, goal, &params) {
                Ok(set) => set,
                Err(Error::NotTraversable { .. }) => {
                    decision.blocked = true;
                    return Ok(Replan { target: Target::Rotate, decision, candidates: None });
                }
                Err(e) => return Err(e),
            };
            decision.candidates = set.paths.len();
            decision.blocked = set.blocked;
            decision.reached_goal = set.reached_goal;
            if set.paths.is_empty() {
                return Ok(Replan { target: Target::Rotate, decision, candidates: Some(set) });
            }
            let scores = match cfg.task {
                Task::Explore => score_all_exploration(&set.paths, &state.uncertainty, fused.w())?,
                Task::Pointgoal if state.n_members() >= 2 => score_all_pointgoal(&set.paths, &state.member_grids(), policy)?,
                // a lone member has no spread; score it against itself
                Task::Pointgoal => {
                    let g = state.member_grids();
                    score_all_pointgoal(&set.paths, &[g[0], g[0]], policy)?
                }
            };
            let sel = select_path(&scores, mode)?;
            let path = set.paths[sel].clone();
            let idx = short_term_goal(&path.cells, 0, policy.lookahead_m, fused.cell_size);
            decision.scores = scores;
            decision.selected = Some(sel);
            decision.short_term_goal = Some(path.cells[idx]);
            return Ok(Replan { target: Target::Along { path, idx }, decision, candidates: Some(set) });
        }
        Method::Frontier => frontier_goal(&state.obs_map, agent, block, cfg.controller.clearance_cells, avoid).map_or(Target::Rotate, Target::Goal),
        Method::RandomGoal => random_goal(fused, agent, block, avoid, rng).map_or(Target::Rotate, Target::Goal),
        Method::StraightGoal => goal.map_or(Target::Rotate, Target::Goal),
    };
    if let Target::Goal(c) = target {
        decision.short_term_goal = Some(c);
    }
    Ok(Replan { target, decision, candidates: None })
}

fn subgoal_reached(map: &GlobalMap, pose: &AgentPose, cell: Cell) -> bool {
    let (x, z) = map.cell_center(cell);
    pose.dist_to(x, z) <= SUBGOAL_RADIUS_M
}

fn occ_layer(map: &GlobalMap) -> Vec<f64> {
    map.probs.cells().iter().map(|d| d[OCC]).collect()
}

/// Runs one episode. With `out_dir`, writes the decision log, map
/// snapshots, candidate paths and a trajectory render there.
pub fn run_episode(
    cfg: &RunConfig,
    fp: &Floorplan,
    episode: &Episode,
    members: &[PredictorParams],
    episode_index: usize,
    out_dir: Option<&FsPath>,
) -> Result<EpisodeOutcome> {
    let method = cfg.method;
    let policy = method.policy(&cfg.policy);
    let mode = cfg.task.mode();
    let budget = episode.budget_t;
    let cadence = policy.cadence(mode);
    let n = cfg.map.local_size;
    let template = GlobalMap::around(fp, cfg.map.pad_cells);
    let mut state = if method.uses_ensemble() {
        if members.is_empty() {
            return Err(Error::TooFewMembers { needed: 1, got: 0 });
        }
        EnsembleState::new(members.to_vec(), &template, n, n)?
    } else {
        EnsembleState::observation_only(&template, n, n)?
    };
    if cfg.task == Task::Pointgoal && episode.goal.is_none() {
        return Err(Error::Config("point-goal episode without a goal".into()));
    }
    let goal_cell = episode.goal.map(|(x, z)| template.cell_at(x, z));
    let navigable = fp.reachable_from(fp.cell_at(episode.start.x_m, episode.start.z_m));
    let mut rng = ChaCha8Rng::seed_from_u64(replan_seed(cfg.seeds.run, episode.floorplan_id, usize::MAX));
    let mut ctrl = ControllerState::new();

    let mut pose = episode.start;
    let scan = sense(fp, &pose, &cfg.sensor)?;
    update_ensemble_maps(&mut state, &scan, &pose)?;

    let checkpoint = cfg.episode.map_checkpoint.min(budget).max(1);
    let mut map_metrics: Option<(f64, f64)> = None;
    let mut out = EpisodeOutcome {
        record: MetricsRecord {
            episode: episode_index,
            method: method.name().to_string(),
            floorplan_seed: episode.floorplan_id,
            steps_taken: 0,
            success: false,
            spl: 0.0,
            gd_m: episode.geodesic_m,
            gedr: episode.gedr,
            path_m: 0.0,
            map_acc_m2: 0.0,
            iou_pct: 0.0,
            cov_m2: 0.0,
            cov_pct: 0.0,
            failure: String::new(),
        },
        snapshots: Vec::new(),
        decisions: Vec::new(),
        actions: Vec::new(),
        trajectory: vec![pose],
        collisions: 0,
        mean_step_seconds: 0.0,
    };
    let mut target = Target::Rotate;
    let mut last_candidates: Option<(CandidateSet, Option<usize>)> = None;
    let mut subgoals: Vec<Cell> = Vec::new();
    // goals the controller gave up on; baselines skip them when replanning
    let mut avoid: Vec<Cell> = Vec::new();
    let mut elapsed = 0.0;
    let mut stopped = false;
    // the frontier baseline holds its goal until it is reached, dropped or
    // no longer on the frontier, then picks a fresh one at once
    let mut goal_done = false;

    for t in 0..budget {
        let started = Instant::now();
        let agent = state.fused().cell_at(pose.x_m, pose.z_m);
        if cfg.task == Task::Pointgoal && reached(&pose, episode.goal.expect("checked above"), cfg.episode.success_radius_m) {
            out.actions.push(Action::Stop);
            out.trajectory.push(pose);
            stopped = true;
            elapsed += started.elapsed().as_secs_f64();
            break;
        }
        if method == Method::Frontier {
            if let Target::Goal(c) = target {
                if !is_frontier(&state.obs_map, c) {
                    target = Target::Rotate;
                    goal_done = true;
                }
            }
        }
        let due = if method == Method::Frontier { goal_done || (t % cadence == 0 && matches!(target, Target::Rotate)) } else { t % cadence == 0 };
        if due {
            goal_done = false;
            let r = replan(cfg, &policy, &state, agent, goal_cell, &avoid, t, episode.floorplan_id, &mut rng)?;
            if let Some(c) = r.decision.short_term_goal {
                subgoals.push(c);
            }
            if let Some(set) = r.candidates {
                last_candidates = Some((set, r.decision.selected));
            }
            out.decisions.push(r.decision);
            target = r.target;
        }

        // advance along the selected path as short-term goals are reached
        let block = cfg.controller.block_threshold;
        loop {
            match &mut target {
                Target::Along { path, idx } => {
                    let cell = path.cells[*idx];
                    let blocked_cell = state.fused().probs.occ(cell) >= block;
                    if !subgoal_reached(state.fused(), &pose, cell) && !blocked_cell {
                        break;
                    }
                    let next = short_term_goal(&path.cells, *idx, policy.lookahead_m, state.fused().cell_size);
                    if next != *idx {
                        *idx = next;
                        subgoals.push(path.cells[next]);
                        continue;
                    }
                    if blocked_cell && !subgoal_reached(state.fused(), &pose, cell) {
                        break;
                    }
                    target = match goal_cell {
                        Some(g) => Target::Goal(g),
                        None => Target::Rotate,
                    };
                }
                Target::Goal(c) => {
                    if Some(*c) != goal_cell && subgoal_reached(state.fused(), &pose, *c) {
                        goal_done = method == Method::Frontier;
                        target = match goal_cell {
                            Some(g) if cfg.task == Task::Pointgoal => Target::Goal(g),
                            _ => Target::Rotate,
                        };
                        continue;
                    }
                    break;
                }
                Target::Rotate => break,
            }
        }

        let action = match &target {
            Target::Along { path, idx } => next_action(&mut ctrl, &pose, state.fused(), path.cells[*idx], &cfg.controller),
            Target::Goal(c) => next_action(&mut ctrl, &pose, state.fused(), *c, &cfg.controller),
            Target::Rotate => Action::TurnLeft,
        };
        if ctrl.stuck >= STUCK_LIMIT {
            if let Target::Goal(c) = target {
                if Some(c) != goal_cell {
                    avoid.push(c);
                    goal_done = method == Method::Frontier;
                }
            }
            target = Target::Rotate;
            ctrl.stuck = 0;
        }
        let (next, collided) = step(fp, &pose, action);
        if collided {
            out.collisions += 1;
            ctrl.note_collision(state.fused(), &pose);
        }
        out.record.path_m += pose.dist_to(next.x_m, next.z_m);
        pose = next;
        out.actions.push(action);
        out.trajectory.push(pose);
        let scan = sense(fp, &pose, &cfg.sensor)?;
        update_ensemble_maps(&mut state, &scan, &pose)?;
        elapsed += started.elapsed().as_secs_f64();

        let taken = t + 1;
        if taken == checkpoint {
            map_metrics = Some((map_accuracy(state.fused(), fp)?, iou(state.fused(), fp)?.pct));
        }
        if cfg.task == Task::Explore && cfg.episode.snapshots.contains(&taken) {
            let (cov_m2, cov_pct) = coverage(&state.obs_map, fp, &navigable)?;
            out.snapshots.push(CoverageSnapshot { step: taken, cov_m2, cov_pct });
            if let Some(dir) = out_dir {
                write_snapshot(dir, taken, &state)?;
            }
        }
    }

    let steps = out.actions.len();
    out.record.steps_taken = steps;
    out.mean_step_seconds = if steps > 0 { elapsed / steps as f64 } else { 0.0 };
    let (acc, iou_pct) = match map_metrics {
        Some(m) => m,
        None => (map_accuracy(state.fused(), fp)?, iou(state.fused(), fp)?.pct),
    };
    out.record.map_acc_m2 = acc;
    out.record.iou_pct = iou_pct;
    let (cov_m2, cov_pct) = coverage(&state.obs_map, fp, &navigable)?;
    out.record.cov_m2 = cov_m2;
    out.record.cov_pct = cov_pct;
    if cfg.task == Task::Pointgoal {
        out.record.success = stopped;
        out.record.spl = if episode.geodesic_m > 0.0 {
            spl(stopped, episode.geodesic_m, out.record.path_m)?
        } else if stopped {
            1.0
        } else {
            0.0
        };
    }

    if let Some(dir) = out_dir {
        write_snapshot(dir, steps, &state)?;
        let mut log = fs::File::create(dir.join("decisions.jsonl"))?;
        for d in &out.decisions {
            serde_json::to_writer(&mut log, d)?;
            log.write_all(b"\n")?;
        }
        let fused = state.fused();
        let to_world = |c: &Cell| fused.cell_center(*c);
        let mut scene = SvgScene {
            trajectory: out.trajectory.iter().map(|p| (p.x_m, p.z_m)).collect(),
            short_term_goals: subgoals.iter().map(to_world).collect(),
            goal: episode.goal,
            ..SvgScene::default()
        };
        if let Some((set, sel)) = &last_candidates {
            scene.paths = set.paths.iter().map(|p| p.cells.iter().map(to_world).collect()).collect();
            scene.selected = *sel;
            let recs: Vec<PathRecord> =
                set.paths.iter().enumerate().map(|(i, p)| PathRecord { index: i, length_m: p.length_m, cells: p.cells.clone() }).collect();
            fs::write(dir.join("paths.txt"), write_paths(&recs))?;
        }
        fs::write(dir.join("trajectory.svg"), render_svg(fp, &scene))?;
    }
    Ok(out)
}

fn write_snapshot(dir: &FsPath, step: usize, state: &EnsembleState) -> Result<()> {
    let (h, w) = (state.obs_map.h(), state.obs_map.w());
    fs::write(dir.join(format!("obs_{step:04}.pgm")), write_pgm(h, w, &occ_layer(&state.obs_map), 1.0))?;
    if !state.members.is_empty() {
        fs::write(dir.join(format!("fused_{step:04}.pgm")), write_pgm(h, w, &occ_layer(&state.mean_map), 1.0))?;
        // population variance of a probability is at most 0.25
        fs::write(dir.join(format!("uncertainty_{step:04}.pgm")), write_pgm(h, w, &state.uncertainty, 0.25))?;
    }
    Ok(())
}
