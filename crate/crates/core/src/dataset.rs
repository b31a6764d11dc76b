//! Training pairs sampled along shortest paths between random locations.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{Cell, NEIGHBORS8};
use crate::mapping::{argmax, egocentric_crop, ground_project, register_bayes, CellClass, GlobalMap, LocalGrid, LOCAL_SIZE};
use crate::predictor::{extract_features, Sample};
use crate::world::{distance_field, sense, AgentPose, Floorplan, SensorConfig, TURN_STEP_DEG};
use crate::{Error, Result};

/// Padding of the training global map around the floorplan, in cells.
pub const MAP_PAD: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    /// Accumulated observations cropped at the waypoint pose.
    pub input: LocalGrid,
    /// Ground-truth class per cell, aligned with `input`.
    pub target: Vec<CellClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub episodes_per_plan: usize,
    pub waypoints_per_episode: usize,
    /// Path cells between consecutive scans during traversal.
    pub scan_every_cells: usize,
    pub local_size: usize,
    /// Shortest paths with fewer cells are resampled.
    pub min_path_cells: usize,
    pub sensor: SensorConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            episodes_per_plan: 4,
            waypoints_per_episode: 5,
            scan_every_cells: 5,
            local_size: LOCAL_SIZE,
            min_path_cells: 20,
            sensor: SensorConfig::default(),
        }
    }
}

const MAX_RESAMPLES: usize = 200;

/// Cell sequence from `from` to the source of `dist` by steepest descent.
fn descend(fp: &Floorplan, dist: &[f64], from: Cell) -> Vec<Cell> {
    let cols = fp.cols();
    let mut path = vec![from];
    let mut cur = from;
    while dist[cur.index(cols)] > 0.0 {
        let mut best: Option<(f64, Cell)> = None;
        for &(dr, dc, _) in &NEIGHBORS8 {
            let n = Cell::new(cur.row + dr, cur.col + dc);
            if !fp.is_free(n) {
                continue;
            }
            // no corner cutting, matching the distance field
            if dr != 0 && dc != 0 && !(fp.is_free(Cell::new(cur.row + dr, cur.col)) && fp.is_free(Cell::new(cur.row, cur.col + dc))) {
                continue;
            }
            let d = dist[n.index(cols)];
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, n));
            }
        }
        match best {
            Some((d, n)) if d < dist[cur.index(cols)] => {
                path.push(n);
                cur = n;
            }
            _ => break,
        }
    }
    path
}

/// Heading from `a` toward `b`, quantized to the turn increment.
fn heading_between(a: Cell, b: Cell) -> f64 {
    let deg = f64::from(b.row - a.row).atan2(f64::from(b.col - a.col)).to_degrees();
    ((deg / TURN_STEP_DEG).round() * TURN_STEP_DEG).rem_euclid(360.0)
}

/// Ground-truth labels of the `h × w` egocentric window at `pose`. Cells
/// outside the floorplan are UNKNOWN.
pub fn target_labels(truth: &GlobalMap, pose: &AgentPose, h: usize, w: usize) -> Vec<CellClass> {
    egocentric_crop(truth, pose, h, w).probs.cells().iter().map(argmax).collect()
}

/// Samples `cfg.episodes_per_plan` shortest paths per floorplan, traverses
/// each while accumulating scans, and emits one pair per waypoint. Pairs at
/// later waypoints carry more accumulated scans.
pub fn build_dataset(floorplans: &[Floorplan], cfg: &DatasetConfig, seed: u64) -> Result<Vec<TrainingPair>> {
    if cfg.waypoints_per_episode == 0 || cfg.scan_every_cells == 0 || cfg.local_size == 0 {
        return Err(Error::InvalidParam("dataset counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let n = cfg.local_size;
    for fp in floorplans {
        let truth = GlobalMap::truth_of(fp, MAP_PAD);
        let clear = fp.clear_mask(1);
        let candidates: Vec<usize> = (0..clear.len()).filter(|&i| clear[i]).collect();
        if candidates.len() < 2 {
            return Err(Error::InvalidFloorplan("no room for a training path".into()));
        }
        let cols = fp.cols();
        let cell_of = |i: usize| Cell::new((i / cols) as i32, (i % cols) as i32);
        for _ in 0..cfg.episodes_per_plan {
            let mut path = Vec::new();
            for _ in 0..MAX_RESAMPLES {
                let a = cell_of(candidates[rng.random_range(0..candidates.len())]);
                let b = cell_of(candidates[rng.random_range(0..candidates.len())]);
                let dist = distance_field(fp, b);
                if !dist[a.index(cols)].is_finite() {
                    continue;
                }
                let p = descend(fp, &dist, a);
                if p.len() >= cfg.min_path_cells && p.last() == Some(&b) {
                    path = p;
                    break;
                }
            }
            if path.is_empty() {
                return Err(Error::EpisodeSampling(MAX_RESAMPLES));
            }

            let stops: Vec<usize> = (0..path.len()).step_by(cfg.scan_every_cells).collect();
            let k = cfg.waypoints_per_episode;
            let waypoints: Vec<usize> = (0..k).map(|i| if k == 1 { stops.len() - 1 } else { (i * (stops.len() - 1) + (k - 1) / 2) / (k - 1) }).collect();
            let mut obs = GlobalMap::around(fp, MAP_PAD);
            let mut next_wp = 0;
            for (si, &pi) in stops.iter().enumerate() {
                if next_wp >= waypoints.len() {
                    break;
                }
                let cell = path[pi];
                let ahead = path[(pi + cfg.scan_every_cells).min(path.len() - 1)];
                let jitter = f64::from(rng.random_range(-2i32..=2)) * TURN_STEP_DEG;
                let heading = if ahead == cell { 0.0 } else { heading_between(cell, ahead) } + jitter;
                let (x, z) = fp.cell_center(cell);
                let pose = AgentPose::new(x, z, heading);
                let scan = sense(fp, &pose, &cfg.sensor)?;
                let local = ground_project(&scan, fp.cell_size(), n, n);
                register_bayes(&mut obs, &local, &pose);
                while next_wp < waypoints.len() && waypoints[next_wp] == si {
                    pairs.push(TrainingPair { input: egocentric_crop(&obs, &pose, n, n), target: target_labels(&truth, &pose, n, n) });
                    next_wp += 1;
                }
            }
        }
    }
    Ok(pairs)
}

/// Up to `max_cells` randomly chosen unobserved cells of a pair as
/// training samples. Observed cells are copied at prediction time and
/// carry no training signal.
pub fn samples_from_pair<R: Rng>(pair: &TrainingPair, max_cells: usize, rng: &mut R) -> Vec<Sample> {
    let features = extract_features(&pair.input);
    let unobserved: Vec<usize> = (0..features.values.len()).filter(|&i| !features.observed[i]).collect();
    let take = max_cells.min(unobserved.len());
    let mut picked: Vec<usize> = index::sample(rng, unobserved.len(), take).into_iter().map(|j| unobserved[j]).collect();
    picked.sort_unstable();
    picked.into_iter().map(|i| Sample { x: features.values[i], label: pair.target[i] }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::is_uniform;
    use crate::world::{generate_floorplan, FloorplanParams};

    fn small_cfg() -> DatasetConfig {
        DatasetConfig { episodes_per_plan: 1, waypoints_per_episode: 5, local_size: 64, ..DatasetConfig::default() }
    }

    #[test]
    fn one_episode_five_waypoints_gives_five_pairs() {
        let fp = Floorplan::open_room(80, 80, 0.05);
        let pairs = build_dataset(&[fp], &small_cfg(), 3).unwrap();
        assert_eq!(pairs.len(), 5);
        for p in &pairs {
            assert_eq!(p.target.len(), 64 * 64);
            assert_eq!(p.input.h(), 64);
        }
    }

    #[test]
    fn observation_accumulates_along_the_path() {
        let fp = generate_floorplan(5, &FloorplanParams::default()).unwrap();
        let pairs = build_dataset(&[fp], &small_cfg(), 9).unwrap();
        let counts: Vec<usize> = pairs.iter().map(|p| p.input.observed_count()).collect();
        assert!(counts[4] > 0);
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn occupied_truth_is_labelled_occupied() {
        let fp = Floorplan::open_room(80, 80, 0.05);
        let truth = GlobalMap::truth_of(&fp, MAP_PAD);
        // 0.5 m from the west wall, facing it
        let pose = AgentPose::new(0.55, 2.0, 180.0);
        let labels = target_labels(&truth, &pose, 64, 64);
        let occ = labels.iter().filter(|&&c| c == CellClass::Occupied).count();
        assert!(occ > 0);
        assert!(labels.contains(&CellClass::Free));
        assert!(labels.contains(&CellClass::Unknown));
    }

    #[test]
    fn samples_skip_observed_cells() {
        let fp = Floorplan::open_room(80, 80, 0.05);
        let pairs = build_dataset(&[fp], &small_cfg(), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = samples_from_pair(&pairs[0], 100_000, &mut rng);
        let unobserved = pairs[0].input.probs.cells().iter().filter(|d| is_uniform(d)).count();
        assert_eq!(s.len(), unobserved);
    }
}
