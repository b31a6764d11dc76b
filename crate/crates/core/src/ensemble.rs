//! Per-member global maps and their fused mean and uncertainty.

use crate::mapping::{egocentric_crop, ground_project, is_uniform, register_bayes, register_bayes_where, CellBox, GlobalMap, ProbGrid, OCC};
use crate::predictor::{extract_features, population_variance, predict_with_features, PredictorParams};
use crate::world::{AgentPose, RangeScan};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub members: Vec<PredictorParams>,
    pub member_maps: Vec<GlobalMap>,
    /// Registered observations only, no predictions.
    pub obs_map: GlobalMap,
    pub mean_map: GlobalMap,
    /// Population variance of the occupied probability across member maps.
    pub uncertainty: Vec<f64>,
    pub local_h: usize,
    pub local_w: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub obs_updated: usize,
    pub dropped: usize,
}

impl EnsembleState {
    /// Mapper without predictors: the fused map is the observation map and
    /// the uncertainty stays zero.
    pub fn observation_only(template: &GlobalMap, local_h: usize, local_w: usize) -> Result<Self> {
        let mut s = Self::new(vec![PredictorParams::zeros()], template, local_h, local_w)?;
        s.members.clear();
        s.member_maps.clear();
        Ok(s)
    }

    /// Map used for planning and control: the member mean, or the
    /// observations when there are no members.
    pub fn fused(&self) -> &GlobalMap {
        if self.members.is_empty() {
            &self.obs_map
        } else {
            &self.mean_map
        }
    }

    /// All maps start uniform over `template`'s geometry. With a single
    /// member the uncertainty stays zero.
    pub fn new(members: Vec<PredictorParams>, template: &GlobalMap, local_h: usize, local_w: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::TooFewMembers { needed: 1, got: 0 });
        }
        if local_h == 0 || local_w == 0 {
            return Err(Error::InvalidParam("local window must be non-empty".into()));
        }
        let blank = GlobalMap::new(template.h(), template.w(), template.cell_size, template.origin);
        Ok(Self {
            member_maps: vec![blank.clone(); members.len()],
            members,
            obs_map: blank.clone(),
            mean_map: blank,
            uncertainty: vec![0.0; template.h() * template.w()],
            local_h,
            local_w,
        })
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    /// Recomputes mean and uncertainty inside `b`.
    fn refresh(&mut self, b: CellBox) {
        let w = self.mean_map.w();
        let n = self.member_maps.len() as f64;
        for row in b.r0..=b.r1 {
            for col in b.c0..=b.c1 {
                let i = row * w + col;
                let mut acc = [0.0; 3];
                for m in &self.member_maps {
                    let d = m.probs.cells()[i];
                    for k in 0..3 {
                        acc[k] += d[k];
                    }
                }
                let mean = acc.map(|v| v / n);
                self.mean_map.probs.cells_mut()[i] = mean;
                self.uncertainty[i] = population_variance(self.member_maps.iter().map(|m| m.probs.cells()[i][OCC]));
            }
        }
    }

    /// Member maps as plain grids, for the ensemble reductions.
    pub fn member_grids(&self) -> Vec<&ProbGrid> {
        self.member_maps.iter().map(|m| &m.probs).collect()
    }
}

/// Projects `scan` into the observation map, predicts the cropped view with
/// every member, registers each prediction into its member map, and refreshes
/// the fused mean and uncertainty where anything changed.
pub fn update_ensemble_maps(state: &mut EnsembleState, scan: &RangeScan, pose: &AgentPose) -> Result<UpdateStats> {
    let (h, w) = (state.local_h, state.local_w);
    let local = ground_project(scan, state.obs_map.cell_size, h, w);
    let obs_stats = register_bayes(&mut state.obs_map, &local, pose);
    if state.members.is_empty() {
        return Ok(UpdateStats { obs_updated: obs_stats.updated, dropped: obs_stats.dropped });
    }
    let input = egocentric_crop(&state.obs_map, pose, h, w);
    let features = extract_features(&input);
    let mut touched: Option<CellBox> = None;
    // the crop and the registration sample the rotated window in opposite
    // directions, so an observed global cell can land on a predicted local
    // cell; such cells keep only observed evidence
    let obs_cells = state.obs_map.probs.cells();
    let keep = |gi: usize, li: usize| features.observed[li] || is_uniform(&obs_cells[gi]);
    for (member, map) in state.members.iter().zip(state.member_maps.iter_mut()) {
        let pred = predict_with_features(member, &features, &input);
        if let Some(b) = register_bayes_where(map, &pred, pose, keep).touched {
            touched = Some(touched.map_or(b, |t| t.union(b)));
        }
    }
    if let Some(b) = touched {
        state.refresh(b);
    }
    Ok(UpdateStats { obs_updated: obs_stats.updated, dropped: obs_stats.dropped })
}
