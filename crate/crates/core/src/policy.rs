//! Path scoring and selection.
//!
//! Exploration picks the candidate with the highest mean uncertainty along
//! its cells. Point-goal picks the lowest `mu - alpha1 * sigma + alpha2 * d`,
//! where `mu` and `sigma` are the mean and population standard deviation
//! across members of each member's worst occupancy along the path and `d` is
//! the length relative to the longest candidate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::mapping::{ProbGrid, OCC};
use crate::predictor::population_variance;
use crate::rrt::Path;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Explore,
    PointGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lookahead_m: f64,
    pub explore_cadence: usize,
    pub pointgoal_cadence: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self { alpha1: 0.1, alpha2: 0.5, lookahead_m: 3.0, explore_cadence: 30, pointgoal_cadence: 20 }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 >= 0.0 && self.alpha2 >= 0.0) {
            return Err(Error::InvalidParam("alpha1 and alpha2 must be non-negative".into()));
        }
        if self.explore_cadence == 0 || self.pointgoal_cadence == 0 {
            return Err(Error::InvalidParam("replanning cadence must be at least 1".into()));
        }
        if !(self.lookahead_m > 0.0) {
            return Err(Error::InvalidParam("lookahead must be positive".into()));
        }
        Ok(())
    }

    pub fn cadence(&self, mode: Mode) -> usize {
        match mode {
            Mode::Explore => self.explore_cadence,
            Mode::PointGoal => self.pointgoal_cadence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    pub index: usize,
    pub length_m: f64,
    pub explore_score: f64,
    pub mu_s: f64,
    pub sigma_s: f64,
    pub d_s: f64,
    /// The value the selection rule compares.
    pub total: f64,
}

/// Mean uncertainty over the path cells. `u` is row-major with `cols` columns.
pub fn score_exploration(path: &[Cell], u: &[f64], cols: usize) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let mut sum = 0.0;
    for c in path {
        sum += *u.get(c.index(cols)).filter(|_| c.col >= 0 && (c.col as usize) < cols).ok_or_else(|| out_of_extent(*c))?;
    }
    Ok(sum / path.len() as f64)
}

fn out_of_extent(c: Cell) -> Error {
    Error::DimensionMismatch(format!("path cell ({}, {}) outside the grid", c.row, c.col))
}

/// Highest occupied probability of `member` over the path cells.
pub fn path_occupancy_score(path: &[Cell], member: &ProbGrid) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    path.iter().try_fold(f64::NEG_INFINITY, |m, c| Ok(m.max(member.get(*c).ok_or_else(|| out_of_extent(*c))?[OCC])))
}

/// Point-goal score of one path. `max_length_m` normalizes the length term.
pub fn score_pointgoal(path: &Path, index: usize, members: &[&ProbGrid], max_length_m: f64, cfg: &PolicyConfig) -> Result<PathScore> {
    if members.len() < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: members.len() });
    }
    let p = members.iter().map(|m| path_occupancy_score(&path.cells, m)).collect::<Result<Vec<f64>>>()?;
    let n = p.len() as f64;
    let mu_s = p.iter().sum::<f64>() / n;
    let sigma_s = population_variance(p.iter().copied()).sqrt();
    let d_s = normalized_length(path.length_m, max_length_m);
    Ok(PathScore { index, length_m: path.length_m, explore_score: 0.0, mu_s, sigma_s, d_s, total: ucb_total(mu_s, sigma_s, d_s, cfg) })
}

pub fn ucb_total(mu_s: f64, sigma_s: f64, d_s: f64, cfg: &PolicyConfig) -> f64 {
    mu_s - cfg.alpha1 * sigma_s + cfg.alpha2 * d_s
}

fn normalized_length(len: f64, max: f64) -> f64 {
    if max > 0.0 {
        len / max
    } else {
        1.0
    }
}

fn max_length(paths: &[Path]) -> f64 {
    paths.iter().map(|p| p.length_m).fold(0.0, f64::max)
}

/// Exploration scores for every candidate.
pub fn score_all_exploration(paths: &[Path], u: &[f64], cols: usize) -> Result<Vec<PathScore>> {
    let max = max_length(paths);
    paths
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let s = score_exploration(&p.cells, u, cols)?;
            Ok(PathScore { index, length_m: p.length_m, explore_score: s, mu_s: 0.0, sigma_s: 0.0, d_s: normalized_length(p.length_m, max), total: s })
        })
        .collect()
}

/// Point-goal scores for every candidate.
pub fn score_all_pointgoal(paths: &[Path], members: &[&ProbGrid], cfg: &PolicyConfig) -> Result<Vec<PathScore>> {
    let max = max_length(paths);
    paths.iter().enumerate().map(|(i, p)| score_pointgoal(p, i, members, max, cfg)).collect()
}

/// Index into `scores` of the chosen candidate: highest total when
/// exploring, lowest for point-goal, ties to the shorter path and then the
/// lower candidate index.
pub fn select_path(scores: &[PathScore], mode: Mode) -> Result<usize> {
    let better = |a: &PathScore, b: &PathScore| -> Ordering {
        let primary = match mode {
            Mode::Explore => b.total.total_cmp(&a.total),
            Mode::PointGoal => a.total.total_cmp(&b.total),
        };
        primary.then(a.length_m.total_cmp(&b.length_m)).then(a.index.cmp(&b.index))
    };
    scores.iter().enumerate().min_by(|(_, a), (_, b)| better(a, b)).map(|(i, _)| i).ok_or(Error::NoCandidates)
}

/// Index of the farthest cell from `start` whose cumulative distance along
/// the path stays within `lookahead_m`; the terminal cell when the rest of
/// the path is shorter.
pub fn short_term_goal(cells: &[Cell], start: usize, lookahead_m: f64, cell_size: f64) -> usize {
    let mut acc = 0.0;
    let mut best = start.min(cells.len().saturating_sub(1));
    for i in start + 1..cells.len() {
        acc += cells[i - 1].dist(cells[i]) * cell_size;
        if acc > lookahead_m + 1e-9 {
            break;
        }
        best = i;
    }
    best
}

/// One row of the per-replan decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: usize,
    pub mode: Mode,
    pub candidates: usize,
    pub blocked: bool,
    pub reached_goal: bool,
    pub scores: Vec<PathScore>,
    pub selected: Option<usize>,
    pub short_term_goal: Option<Cell>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::ProbGrid;

    fn score(index: usize, total: f64, length_m: f64) -> PathScore {
        PathScore { index, length_m, explore_score: total, mu_s: 0.0, sigma_s: 0.0, d_s: 1.0, total }
    }

    fn occ_grid(occ: &[f64]) -> ProbGrid {
        ProbGrid::from_cells(1, occ.len(), occ.iter().map(|&o| [(1.0 - o) / 2.0, o, (1.0 - o) / 2.0]).collect()).unwrap()
    }

    fn row_path(n: usize) -> Vec<Cell> {
        (0..n as i32).map(|c| Cell::new(0, c)).collect()
    }

    #[test]
    fn exploration_mean_examples() {
        assert!((score_exploration(&row_path(3), &[0.1, 0.2, 0.3], 3).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(score_exploration(&row_path(3), &[0.0; 3], 3).unwrap(), 0.0);
        assert_eq!(score_exploration(&row_path(1), &[0.5], 1).unwrap(), 0.5);
        assert!(matches!(score_exploration(&[], &[0.5], 1), Err(Error::EmptyPath)));
    }

    #[test]
    fn occupancy_max_examples() {
        assert_eq!(path_occupancy_score(&row_path(3), &occ_grid(&[0.1, 0.9, 0.3])).unwrap(), 0.9);
        assert_eq!(path_occupancy_score(&row_path(3), &occ_grid(&[0.0; 3])).unwrap(), 0.0);
        assert_eq!(path_occupancy_score(&row_path(1), &occ_grid(&[0.42])).unwrap(), 0.42);
    }

    #[test]
    fn total_example() {
        let cfg = PolicyConfig::default();
        assert!((ucb_total(0.4, 0.2, 0.6, &cfg) - 0.68).abs() < 1e-12);
        let occ_only = PolicyConfig { alpha1: 0.0, alpha2: 0.0, ..cfg };
        assert_eq!(ucb_total(0.4, 0.2, 0.6, &occ_only), 0.4);
    }

    #[test]
    fn identical_members_have_zero_sigma() {
        let g = occ_grid(&[0.2, 0.7]);
        let path = Path::from_cells(row_path(2), 0.05).unwrap();
        let s = score_pointgoal(&path, 0, &[&g, &g, &g], path.length_m, &PolicyConfig::default()).unwrap();
        assert_eq!(s.sigma_s, 0.0);
        assert!((s.total - (0.7 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn selection_examples() {
        let s = [score(0, 0.1, 1.0), score(1, 0.4, 1.0), score(2, 0.2, 1.0)];
        assert_eq!(select_path(&s, Mode::Explore).unwrap(), 1);
        let s = [score(0, 0.7, 2.0), score(1, 0.7, 1.5)];
        assert_eq!(select_path(&s, Mode::PointGoal).unwrap(), 1);
        assert_eq!(select_path(&[score(0, 3.0, 1.0)], Mode::PointGoal).unwrap(), 0);
        assert!(matches!(select_path(&[], Mode::Explore), Err(Error::NoCandidates)));
    }

    #[test]
    fn short_term_goal_examples() {
        let spaced: Vec<Cell> = (0..13).map(|i| Cell::new(0, 5 * i)).collect();
        assert_eq!(short_term_goal(&spaced, 0, 1.5, 0.05), 6);
        assert_eq!(short_term_goal(&row_path(10), 0, 1.5, 0.05), 9);
        // 3 m path: the goal sits at the last cell within 1.5 m
        let long = row_path(61);
        assert_eq!(short_term_goal(&long, 0, 1.5, 0.05), 30);
        assert_eq!(short_term_goal(&long, 40, 1.5, 0.05), 60);
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::default().validate().is_ok());
        assert!(PolicyConfig { alpha1: -0.1, ..PolicyConfig::default() }.validate().is_err());
        assert!(PolicyConfig { explore_cadence: 0, ..PolicyConfig::default() }.validate().is_err());
    }
}
