use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::dataset::DatasetConfig;
use crate::mapping::LOCAL_SIZE;
use crate::policy::{Mode, PolicyConfig};
use crate::predictor::TrainConfig;
use crate::rrt::RrtParams;
use crate::world::{EpisodeConstraints, FloorplanParams, SensorConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Explore,
    Pointgoal,
}

impl Task {
    pub fn mode(self) -> Mode {
        match self {
            Task::Explore => Mode::Explore,
            Task::Pointgoal => Mode::PointGoal,
        }
    }

    pub fn default_budget(self) -> usize {
        match self {
            Task::Explore => 1000,
            Task::Pointgoal => 500,
        }
    }
}

/// Path-selection policy driving the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Ensemble-based selection with the configured alphas.
    Upen,
    /// Point-goal selection by occupancy only (both alphas zero).
    UpenOcc,
    /// Point-goal selection by occupancy and length (alpha1 zero).
    UpenGreedy,
    /// Nearest frontier cluster on the observation map.
    Frontier,
    /// Uniformly sampled reachable goals.
    RandomGoal,
    /// The final goal fed straight to the local controller.
    StraightGoal,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Upen, Method::UpenOcc, Method::UpenGreedy, Method::Frontier, Method::RandomGoal, Method::StraightGoal];

    pub fn name(self) -> &'static str {
        match self {
            Method::Upen => "upen",
            Method::UpenOcc => "upen_occ",
            Method::UpenGreedy => "upen_greedy",
            Method::Frontier => "frontier",
            Method::RandomGoal => "random_goal",
            Method::StraightGoal => "straight_goal",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let norm = name.replace('-', "_");
        Self::ALL.into_iter().find(|m| m.name() == norm).ok_or_else(|| Error::UnknownBaseline(name.to_string()))
    }

    pub fn uses_ensemble(self) -> bool {
        matches!(self, Method::Upen | Method::UpenOcc | Method::UpenGreedy)
    }

    /// Policy with the method's alpha overrides applied.
    pub fn policy(self, base: &PolicyConfig) -> PolicyConfig {
        match self {
            Method::UpenOcc => PolicyConfig { alpha1: 0.0, alpha2: 0.0, ..*base },
            Method::UpenGreedy => PolicyConfig { alpha1: 0.0, ..*base },
            _ => *base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    /// Evaluation floorplan `i` uses seed `eval_base + i`.
    pub eval_base: u64,
    /// Training floorplan `i` uses seed `train_base + i`.
    pub train_base: u64,
    pub train_floorplans: u64,
    /// Seeds RRT, random goals and training.
    pub run: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self { eval_base: 1_000_000, train_base: 0, train_floorplans: 8, run: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Step budget; the task default when absent.
    pub budget_t: Option<usize>,
    /// Map accuracy and IoU are measured at this step (or at the end, if
    /// earlier).
    pub map_checkpoint: usize,
    pub success_radius_m: f64,
    pub min_geodesic_m: f64,
    pub min_gedr: f64,
    /// Exploration coverage snapshots.
    pub snapshots: Vec<usize>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { budget_t: None, map_checkpoint: 500, success_radius_m: 0.2, min_geodesic_m: 1.0, min_gedr: 1.0, snapshots: vec![100, 250, 500, 1000] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Global map margin around the floorplan, in cells.
    pub pad_cells: usize,
    pub local_size: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { pad_cells: 8, local_size: LOCAL_SIZE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub members: usize,
    /// Weight files; when empty the members are trained from the training
    /// seeds before the run.
    pub weights: Vec<PathBuf>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { members: 4, weights: Vec::new() }
    }
}

/// Full experiment configuration, stored as TOML with one table per section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub method: Method,
    pub episodes: usize,
    /// Text floorplan used for every episode instead of generated ones.
    pub floorplan_file: Option<PathBuf>,
    pub seeds: SeedConfig,
    pub episode: EpisodeConfig,
    pub world: FloorplanParams,
    pub map: MapConfig,
    pub sensor: SensorConfig,
    pub ensemble: EnsembleConfig,
    pub policy: PolicyConfig,
    pub rrt: RrtParams,
    pub controller: ControllerConfig,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Explore,
            method: Method::Upen,
            episodes: 5,
            floorplan_file: None,
            seeds: SeedConfig::default(),
            episode: EpisodeConfig::default(),
            world: FloorplanParams::default(),
            map: MapConfig::default(),
            sensor: SensorConfig::default(),
            ensemble: EnsembleConfig::default(),
            policy: PolicyConfig::default(),
            rrt: RrtParams::default(),
            controller: ControllerConfig::default(),
            dataset: DatasetConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn for_task(task: Task) -> Self {
        let mut cfg = Self { task, ..Self::default() };
        if task == Task::Pointgoal {
            cfg.method = Method::Upen;
        }
        cfg
    }

    pub fn budget(&self) -> usize {
        self.episode.budget_t.unwrap_or(self.task.default_budget())
    }

    pub fn constraints(&self) -> EpisodeConstraints {
        EpisodeConstraints { min_geodesic_m: self.episode.min_geodesic_m, min_gedr: self.episode.min_gedr, budget_t: self.budget() }
    }

    pub fn eval_seed(&self, episode: usize) -> u64 {
        self.seeds.eval_base + episode as u64
    }

    /// Checks parameters and that the training and evaluation floorplan seed
    /// ranges cannot overlap.
    pub fn validate(&self) -> Result<()> {
        if self.budget() == 0 {
            return Err(Error::Config("budget_t must be at least 1".into()));
        }
        self.policy.validate()?;
        if self.map.local_size == 0 {
            return Err(Error::Config("local_size must be positive".into()));
        }
        if self.method.uses_ensemble() && self.ensemble.members == 0 {
            return Err(Error::Config("the ensemble needs at least one member".into()));
        }
        if self.task == Task::Pointgoal && self.method == Method::Frontier {
            return Err(Error::Config("the frontier baseline is exploration-only".into()));
        }
        if self.task == Task::Explore && matches!(self.method, Method::StraightGoal) {
            return Err(Error::Config("straight_goal needs a point goal".into()));
        }
        let train = self.seeds.train_base..self.seeds.train_base.saturating_add(self.seeds.train_floorplans);
        let eval = self.seeds.eval_base..self.seeds.eval_base.saturating_add(self.episodes as u64);
        if train.start < eval.end && eval.start < train.end {
            return Err(Error::Config(format!("training seeds {train:?} overlap evaluation seeds {eval:?}")));
        }
        if let Some(f) = &self.floorplan_file {
            if !f.exists() {
                return Err(Error::Config(format!("floorplan file {} does not exist", f.display())));
            }
        }
        for w in &self.ensemble.weights {
            if !w.exists() {
                return Err(Error::Config(format!("weights file {} does not exist", w.display())));
            }
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn write_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = write_config(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = parse_config("task = \"pointgoal\"\nmethod = \"upen_occ\"\n[policy]\nalpha1 = 0.3\n[episode]\nmin_gedr = 2.5\n").unwrap();
        assert_eq!(cfg.task, Task::Pointgoal);
        assert_eq!(cfg.method, Method::UpenOcc);
        assert_eq!(cfg.policy.alpha1, 0.3);
        assert_eq!(cfg.policy.alpha2, 0.5);
        assert_eq!(cfg.budget(), 500);
        assert_eq!(cfg.episode.min_gedr, 2.5);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(parse_config("tsak = \"explore\"").is_err());
        assert!(parse_config("method = \"ans\"").is_err());
        assert!(matches!(Method::parse("occant"), Err(Error::UnknownBaseline(_))));
        assert_eq!(Method::parse("random-goal").unwrap(), Method::RandomGoal);
    }

    #[test]
    fn overlapping_seed_ranges_fail_validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.seeds.train_base = cfg.seeds.eval_base + 2;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn method_overrides() {
        let base = PolicyConfig::default();
        assert_eq!(Method::UpenOcc.policy(&base).alpha2, 0.0);
        assert_eq!(Method::UpenGreedy.policy(&base).alpha1, 0.0);
        assert_eq!(Method::UpenGreedy.policy(&base).alpha2, 0.5);
    }
}
