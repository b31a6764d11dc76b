//! Patch-based multinomial logistic occupancy predictor.
//!
//! Each cell of an egocentric grid is described by the density of observed
//! free and occupied cells in four square rings of its 15×15 neighbourhood,
//! the distance to the nearest observed cell, and a bias. A linear layer and a
//! softmax turn that into a distribution over the three classes. Observed
//! cells are copied from the input instead of predicted.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::chamfer_distance;
use crate::mapping::{floor_project, is_uniform, CellClass, CellDist, LocalGrid, ProbGrid, EPSILON, FREE, OCC, UNK};
use crate::{Error, Result};

/// Neighbourhood side length.
pub const PATCH_SIZE: usize = 15;
/// Outer Chebyshev radius of each ring.
const RING_RADII: [usize; 4] = [1, 3, 5, 7];
pub const N_FEATURES: usize = 10;
pub const N_CLASSES: usize = 3;
const DIST_FEATURE: usize = 8;
const BIAS_FEATURE: usize = 9;

pub type FeatureVec = [f64; N_FEATURES];

/// One training cell: features and ground-truth class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: FeatureVec,
    pub label: CellClass,
}

/// Per-cell features of an egocentric grid.
#[derive(Debug, Clone)]
pub struct Features {
    pub h: usize,
    pub w: usize,
    pub values: Vec<FeatureVec>,
    pub observed: Vec<bool>,
}

/// Evidence class of an observed cell, `None` for cells without evidence.
fn observed_class(d: &CellDist) -> Option<CellClass> {
    if is_uniform(d) {
        return None;
    }
    if d[OCC] > d[FREE] && d[OCC] > d[UNK] {
        Some(CellClass::Occupied)
    } else if d[FREE] > d[OCC] && d[FREE] > d[UNK] {
        Some(CellClass::Free)
    } else {
        None
    }
}

struct Integral {
    cols: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn new(h: usize, w: usize, indicator: impl Fn(usize) -> bool) -> Self {
        let cols = w + 1;
        let mut sums = vec![0u32; (h + 1) * cols];
        for r in 0..h {
            let mut row_sum = 0u32;
            for c in 0..w {
                row_sum += u32::from(indicator(r * w + c));
                sums[(r + 1) * cols + c + 1] = sums[r * cols + c + 1] + row_sum;
            }
        }
        Self { cols, sums }
    }

    /// Sum over the square of radius `rad` around (r, c), clipped to the grid.
    fn square(&self, h: usize, w: usize, r: usize, c: usize, rad: usize) -> u32 {
        let r0 = r.saturating_sub(rad);
        let c0 = c.saturating_sub(rad);
        let r1 = (r + rad).min(h - 1) + 1;
        let c1 = (c + rad).min(w - 1) + 1;
        self.sums[r1 * self.cols + c1] + self.sums[r0 * self.cols + c0] - self.sums[r0 * self.cols + c1] - self.sums[r1 * self.cols + c0]
    }
}

pub fn extract_features(input: &LocalGrid) -> Features {
    let (h, w) = (input.h(), input.w());
    let cells = input.probs.cells();
    let classes: Vec<Option<CellClass>> = cells.iter().map(observed_class).collect();
    let observed: Vec<bool> = cells.iter().map(|d| !is_uniform(d)).collect();
    let free = Integral::new(h, w, |i| classes[i] == Some(CellClass::Free));
    let occ = Integral::new(h, w, |i| classes[i] == Some(CellClass::Occupied));
    let dist = chamfer_distance(h, w, |i| observed[i]);
    let k = PATCH_SIZE as f64;

    let mut areas = [0.0; 4];
    let mut prev = 0usize;
    for (i, &rad) in RING_RADII.iter().enumerate() {
        let a = (2 * rad + 1) * (2 * rad + 1);
        areas[i] = (a - prev) as f64;
        prev = a;
    }

    let mut values = vec![[0.0; N_FEATURES]; h * w];
    for r in 0..h {
        for c in 0..w {
            let f = &mut values[r * w + c];
            let (mut prev_free, mut prev_occ) = (0u32, 0u32);
            for (i, &rad) in RING_RADII.iter().enumerate() {
                let sf = free.square(h, w, r, c, rad);
                let so = occ.square(h, w, r, c, rad);
                f[i] = f64::from(sf - prev_free) / areas[i];
                f[4 + i] = f64::from(so - prev_occ) / areas[i];
                prev_free = sf;
                prev_occ = so;
            }
            f[DIST_FEATURE] = dist[r * w + c].min(2.0 * k) / k;
            f[BIAS_FEATURE] = 1.0;
        }
    }
    Features { h, w, values, observed }
}

/// Weights of one ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub weights: [[f64; N_FEATURES]; N_CLASSES],
    pub init_seed: u64,
}

impl PredictorParams {
    pub fn zeros() -> Self {
        Self { weights: [[0.0; N_FEATURES]; N_CLASSES], init_seed: 0 }
    }

    /// Gaussian initialization with standard deviation `scale`.
    pub fn random(seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale.max(0.0)).expect("non-negative std");
        let mut weights = [[0.0; N_FEATURES]; N_CLASSES];
        for row in &mut weights {
            for w in row.iter_mut() {
                *w = normal.sample(&mut rng);
            }
        }
        Self { weights, init_seed: seed }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().all(|w| w.is_finite())
    }

    /// Raw softmax class probabilities for one feature vector.
    pub fn softmax(&self, x: &FeatureVec) -> CellDist {
        let mut z = [0.0; N_CLASSES];
        for (c, row) in self.weights.iter().enumerate() {
            z[c] = row.iter().zip(x).map(|(w, v)| w * v).sum();
        }
        let m = z[0].max(z[1]).max(z[2]);
        let e = z.map(|v| (v - m).exp());
        let s: f64 = e.iter().sum();
        e.map(|v| v / s)
    }
}

/// Prediction from precomputed features; observed cells are copied from
/// `input`, the rest are floored softmax outputs.
pub fn predict_with_features(member: &PredictorParams, features: &Features, input: &LocalGrid) -> LocalGrid {
    let cells = input
        .probs
        .cells()
        .iter()
        .zip(&features.values)
        .zip(&features.observed)
        .map(|((d, x), &obs)| if obs { *d } else { floor_project(member.softmax(x)) })
        .collect();
    LocalGrid { probs: ProbGrid::from_cells(input.h(), input.w(), cells).expect("same shape as input"), cell_size: input.cell_size }
}

pub fn predict(member: &PredictorParams, input: &LocalGrid) -> LocalGrid {
    predict_with_features(member, &extract_features(input), input)
}

/// Cross-entropy of one cell against its label, with the predicted
/// probability clamped to `[EPSILON, 1 - EPSILON]`.
pub fn cell_loss(pred: &CellDist, label: CellClass) -> f64 {
    -pred[label.index()].clamp(EPSILON, 1.0 - EPSILON).ln()
}

/// Mean per-cell cross-entropy over aligned predictions and labels.
pub fn cross_entropy(pred: &[CellDist], labels: &[CellClass]) -> Result<f64> {
    if pred.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} predictions vs {} labels", pred.len(), labels.len())));
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(pred.iter().zip(labels).map(|(p, l)| cell_loss(p, *l)).sum::<f64>() / pred.len() as f64)
}

/// Mean loss of `params` over samples and its analytic gradient. Cells whose
/// target probability sits in a clamp region contribute no gradient.
pub fn loss_and_grad(params: &PredictorParams, samples: &[Sample]) -> (f64, [[f64; N_FEATURES]; N_CLASSES]) {
    let mut grad = [[0.0; N_FEATURES]; N_CLASSES];
    let mut loss = 0.0;
    for s in samples {
        let p = params.softmax(&s.x);
        let t = s.label.index();
        loss += cell_loss(&p, s.label);
        if p[t] <= EPSILON || p[t] >= 1.0 - EPSILON {
            continue;
        }
        for c in 0..N_CLASSES {
            let g = p[c] - if c == t { 1.0 } else { 0.0 };
            for (gw, x) in grad[c].iter_mut().zip(&s.x) {
                *gw += g * x;
            }
        }
    }
    let n = samples.len().max(1) as f64;
    grad.iter_mut().flatten().for_each(|g| *g /= n);
    (loss / n, grad)
}

pub fn mean_loss(params: &PredictorParams, samples: &[Sample]) -> f64 {
    loss_and_grad(params, samples).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Unobserved cells sampled from each training pair.
    pub cells_per_pair: usize,
    pub init_scale: f64,
    /// Fraction of pairs (taken from the end) held out for validation.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 12, lr: 0.5, batch_size: 256, cells_per_pair: 1500, init_scale: 0.3, holdout_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub heldout: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: PredictorParams,
    pub initial_heldout: f64,
    pub curve: Vec<EpochLoss>,
}

/// Minibatch SGD on the mean cross-entropy. Deterministic for a fixed seed.
pub fn train(init: &PredictorParams, train_set: &[Sample], heldout: &[Sample], cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = init.clone();
    let eval = if heldout.is_empty() { train_set } else { heldout };
    let initial_heldout = mean_loss(&params, eval);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size.max(1));
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i]));
            let (loss, grad) = loss_and_grad(&params, &batch);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, loss });
            }
            for (row, grow) in params.weights.iter_mut().zip(&grad) {
                for (w, g) in row.iter_mut().zip(grow) {
                    *w -= cfg.lr * g;
                }
            }
            if !params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, loss: f64::NAN });
            }
            epoch_loss += loss;
            n_batches += 1;
        }
        curve.push(EpochLoss { epoch, train: epoch_loss / n_batches as f64, heldout: mean_loss(&params, eval) });
    }
    Ok(TrainOutcome { params, initial_heldout, curve })
}

/// Trains `n_members` members. `scenes[i]` names the floorplan pair `i`
/// came from. Member `i` starts from its own random initialization and sees
/// a bootstrap resample of the training floorplans (all pairs of each drawn
/// floorplan, once per draw); the last pairs are held out for every member.
pub fn train_ensemble(pairs: &[Vec<Sample>], scenes: &[u64], n_members: usize, cfg: &TrainConfig, seed: u64) -> Result<Vec<TrainOutcome>> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scenes.len() != pairs.len() {
        return Err(Error::DimensionMismatch(format!("{} pairs but {} scene ids", pairs.len(), scenes.len())));
    }
    let n_hold = if pairs.len() >= 2 { ((pairs.len() as f64 * cfg.holdout_fraction).ceil() as usize).clamp(1, pairs.len() - 1) } else { 0 };
    let (train_pairs, hold_pairs) = pairs.split_at(pairs.len() - n_hold);
    let heldout: Vec<Sample> = hold_pairs.iter().flatten().copied().collect();
    let mut ids: Vec<u64> = scenes[..train_pairs.len()].to_vec();
    ids.sort_unstable();
    ids.dedup();
    let groups: Vec<Vec<usize>> = ids.iter().map(|id| (0..train_pairs.len()).filter(|&i| scenes[i] == *id).collect()).collect();
    (0..n_members)
        .map(|m| {
            let member_seed = seed.wrapping_mul(1_000_003).wrapping_add(m as u64 * 7919 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(member_seed);
            let mut data = Vec::new();
            for _ in 0..groups.len() {
                for &i in &groups[rng.random_range(0..groups.len())] {
                    data.extend_from_slice(&train_pairs[i]);
                }
            }
            let init = PredictorParams::random(member_seed, cfg.init_scale);
            let mut out = train(&init, &data, &heldout, cfg, member_seed ^ 0xA5A5)?;
            out.params.init_seed = member_seed;
            Ok(out)
        })
        .collect()
}

fn check_aligned(grids: &[&ProbGrid], min: usize) -> Result<()> {
    if grids.len() < min {
        return Err(Error::TooFewMembers { needed: min, got: grids.len() });
    }
    if grids.iter().any(|g| !g.same_shape(grids[0])) {
        return Err(Error::DimensionMismatch("ensemble grids differ in shape".into()));
    }
    Ok(())
}

/// Cell-wise arithmetic mean of the members' distributions.
pub fn ensemble_mean(grids: &[&ProbGrid]) -> Result<ProbGrid> {
    check_aligned(grids, 1)?;
    let n = grids.len() as f64;
    let cells = (0..grids[0].cells().len())
        .map(|i| {
            let mut acc = [0.0; 3];
            for g in grids {
                for (a, v) in acc.iter_mut().zip(&g.cells()[i]) {
                    *a += v;
                }
            }
            acc.map(|v| v / n)
        })
        .collect();
    ProbGrid::from_cells(grids[0].rows(), grids[0].cols(), cells)
}

/// Population variance of `values`, computed on offsets from the first value
/// so identical inputs give exactly zero.
pub fn population_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let Some(first) = it.next() else { return 0.0 };
    let n = values.clone().count() as f64;
    let mean = values.clone().map(|v| v - first).sum::<f64>() / n;
    values.map(|v| (v - first - mean).powi(2)).sum::<f64>() / n
}

/// Population variance of one cell's occupied probability across members.
pub fn occ_variance_at(grids: &[&ProbGrid], i: usize) -> f64 {
    population_variance(grids.iter().map(|g| g.cells()[i][OCC]))
}

/// Per-cell population variance of the occupied-class probability.
pub fn ensemble_variance(grids: &[&ProbGrid]) -> Result<Vec<f64>> {
    check_aligned(grids, 2)?;
    Ok((0..grids[0].cells().len()).map(|i| occ_variance_at(grids, i)).collect())
}
