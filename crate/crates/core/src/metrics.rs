//! Map quality, coverage and navigation metrics.

use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::mapping::{argmax, is_uniform, truth_labels, CellClass, CellDist, GlobalMap};
use crate::world::Floorplan;
use crate::{Error, Result};

/// Margin over the uniform 1/3 a class must exceed for a cell to count as
/// decided.
pub const DECIDED_MARGIN: f64 = 0.05;

/// Class of a cell that carries a decision, `None` otherwise.
pub fn decided_class(d: &CellDist) -> Option<CellClass> {
    let c = argmax(d);
    (c != CellClass::Unknown && d[c.index()] > 1.0 / 3.0 + DECIDED_MARGIN).then_some(c)
}

/// Offset of floorplan cell (0, 0) inside `map`, checking the floorplan lies
/// on the map grid and inside its extent.
fn alignment(map: &GlobalMap, fp: &Floorplan) -> Result<(i32, i32)> {
    let r = fp.cell_size();
    if (map.cell_size - r).abs() > 1e-12 {
        return Err(Error::DimensionMismatch(format!("map cell size {} vs floorplan {}", map.cell_size, r)));
    }
    let dc = (fp.origin().0 - map.origin.0) / r;
    let dr = (fp.origin().1 - map.origin.1) / r;
    let (rc, rr) = (dc.round(), dr.round());
    if (dc - rc).abs() > 1e-6 || (dr - rr).abs() > 1e-6 {
        return Err(Error::DimensionMismatch("floorplan is not on the map grid".into()));
    }
    let (or, oc) = (rr as i32, rc as i32);
    if or < 0 || oc < 0 || or as usize + fp.rows() > map.h() || oc as usize + fp.cols() > map.w() {
        return Err(Error::DimensionMismatch("floorplan extends past the map".into()));
    }
    Ok((or, oc))
}

/// Visits every floorplan cell with its ground-truth class and the map
/// distribution over it.
fn for_each_cell(map: &GlobalMap, fp: &Floorplan, mut f: impl FnMut(Cell, CellClass, &CellDist)) -> Result<()> {
    let (or, oc) = alignment(map, fp)?;
    let truth = truth_labels(fp);
    for row in 0..fp.rows() as i32 {
        for col in 0..fp.cols() as i32 {
            let c = Cell::new(row, col);
            f(c, truth[c.index(fp.cols())], &map.probs.cells()[Cell::new(row + or, col + oc).index(map.w())]);
        }
    }
    Ok(())
}

/// Area in m² of decided cells whose class matches the ground truth.
pub fn map_accuracy(pred: &GlobalMap, truth: &Floorplan) -> Result<f64> {
    let mut n = 0usize;
    for_each_cell(pred, truth, |_, t, d| {
        if t != CellClass::Unknown && decided_class(d) == Some(t) {
            n += 1;
        }
    })?;
    Ok(n as f64 * truth.cell_size().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iou {
    pub pct: f64,
    /// Classes left out because both prediction and truth were empty.
    pub skipped: usize,
}

/// Mean over FREE and OCCUPIED of intersection over union between decided
/// cells and ground truth, in percent.
pub fn iou(pred: &GlobalMap, truth: &Floorplan) -> Result<Iou> {
    let classes = [CellClass::Free, CellClass::Occupied];
    let mut inter = [0usize; 2];
    let mut union = [0usize; 2];
    for_each_cell(pred, truth, |_, t, d| {
        let p = decided_class(d);
        for (k, &cls) in classes.iter().enumerate() {
            let (in_p, in_t) = (p == Some(cls), t == cls);
            inter[k] += usize::from(in_p && in_t);
            union[k] += usize::from(in_p || in_t);
        }
    })?;
    let ratios: Vec<f64> = (0..2).filter(|&k| union[k] > 0).map(|k| inter[k] as f64 / union[k] as f64).collect();
    let skipped = 2 - ratios.len();
    let pct = if ratios.is_empty() { 0.0 } else { 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64 };
    Ok(Iou { pct, skipped })
}

/// Observed navigable area: cells that carry evidence in the observation map
/// and belong to `navigable`, as m² and as a percentage of the navigable area.
pub fn coverage(obs: &GlobalMap, truth: &Floorplan, navigable: &[bool]) -> Result<(f64, f64)> {
    if navigable.len() != truth.rows() * truth.cols() {
        return Err(Error::DimensionMismatch("navigable mask does not match the floorplan".into()));
    }
    let total = navigable.iter().filter(|&&b| b).count();
    let mut seen = 0usize;
    for_each_cell(obs, truth, |c, _, d| {
        if navigable[c.index(truth.cols())] && !is_uniform(d) {
            seen += 1;
        }
    })?;
    let area = truth.cell_size().powi(2);
    let pct = if total == 0 { 0.0 } else { 100.0 * seen as f64 / total as f64 };
    Ok((seen as f64 * area, pct))
}

/// Success weighted by path length for one episode.
pub fn spl(success: bool, shortest_m: f64, taken_m: f64) -> Result<f64> {
    if !(shortest_m > 0.0) {
        return Err(Error::InvalidParam(format!("shortest path length must be positive, got {shortest_m}")));
    }
    if !(taken_m >= 0.0) {
        return Err(Error::InvalidParam(format!("taken path length must be non-negative, got {taken_m}")));
    }
    Ok(if success { shortest_m / taken_m.max(shortest_m) } else { 0.0 })
}

/// One row of the per-episode metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub method: String,
    pub floorplan_seed: u64,
    pub steps_taken: usize,
    pub success: bool,
    pub spl: f64,
    pub gd_m: f64,
    pub gedr: f64,
    pub path_m: f64,
    pub map_acc_m2: f64,
    pub iou_pct: f64,
    pub cov_m2: f64,
    pub cov_pct: f64,
    /// Empty unless the episode aborted.
    pub failure: String,
}
