//! Predictor training from generated training floorplans.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::RunConfig;
use crate::dataset::{build_dataset, samples_from_pair, TrainingPair};
use crate::formats::{decode_grid, decode_labels, encode_grid, encode_labels, read_manifest, write_manifest, write_weights, ManifestRow};
use crate::mapping::{GlobalMap, LocalGrid};
use crate::predictor::{train_ensemble, TrainOutcome};
use crate::world::{generate_floorplan, Floorplan};
use crate::{Error, Result};

/// Floorplans for training, seeded `train_base..train_base + train_floorplans`.
pub fn training_floorplans(cfg: &RunConfig) -> Result<Vec<(u64, Floorplan)>> {
    (0..cfg.seeds.train_floorplans)
        .map(|i| {
            let seed = cfg.seeds.train_base + i;
            Ok((seed, generate_floorplan(seed, &cfg.world)?))
        })
        .collect()
}

/// Pairs with the floorplan seed they came from.
pub fn training_pairs(cfg: &RunConfig) -> Result<Vec<(u64, TrainingPair)>> {
    let mut out = Vec::new();
    for (seed, fp) in training_floorplans(cfg)? {
        let ds = crate::dataset::DatasetConfig { local_size: cfg.map.local_size, sensor: cfg.sensor, ..cfg.dataset };
        for p in build_dataset(std::slice::from_ref(&fp), &ds, cfg.seeds.run ^ seed.wrapping_mul(0x2545_F491_4F6C_DD1D))? {
            out.push((seed, p));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub members: Vec<TrainOutcome>,
    pub pairs: usize,
    pub samples: usize,
}

#[derive(Serialize)]
struct CurveRow {
    member: usize,
    epoch: usize,
    train_loss: Option<f64>,
    heldout_loss: f64,
}

/// Trains `cfg.ensemble.members` predictors. With `out_dir`, writes
/// `member_<i>.weights` and `loss_curve.csv` there; epoch 0 of the curve is
/// the held-out loss at initialization.
pub fn train_predictors(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<TrainReport> {
    let pairs = training_pairs(cfg)?;
    train_from_pairs(cfg, pairs.iter().map(|(s, p)| (*s, p)), out_dir)
}

/// `pairs` yields `(floorplan seed, pair)`; the seed is the bootstrap unit.
pub fn train_from_pairs<'a>(cfg: &RunConfig, pairs: impl Iterator<Item = (u64, &'a TrainingPair)>, out_dir: Option<&Path>) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds.run ^ 0x7EA1);
    let mut scenes = Vec::new();
    let per_pair: Vec<_> = pairs
        .map(|(s, p)| {
            scenes.push(s);
            samples_from_pair(p, cfg.train.cells_per_pair, &mut rng)
        })
        .collect();
    if per_pair.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let samples = per_pair.iter().map(Vec::len).sum();
    let members = train_ensemble(&per_pair, &scenes, cfg.ensemble.members, &cfg.train, cfg.seeds.run)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut curve = csv::Writer::from_path(dir.join("loss_curve.csv"))?;
        for (m, o) in members.iter().enumerate() {
            fs::write(dir.join(format!("member_{m}.weights")), write_weights(&o.params))?;
            curve.serialize(CurveRow { member: m, epoch: 0, train_loss: None, heldout_loss: o.initial_heldout })?;
            for e in &o.curve {
                curve.serialize(CurveRow { member: m, epoch: e.epoch + 1, train_loss: Some(e.train), heldout_loss: e.heldout })?;
            }
        }
        curve.flush()?;
    }
    Ok(TrainReport { members, pairs: per_pair.len(), samples })
}

/// Writes pairs as grid and label files plus `manifest.csv`.
pub fn export_dataset(dir: &Path, pairs: &[(u64, TrainingPair)], waypoints_per_episode: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut rows = Vec::with_capacity(pairs.len());
    let mut per_plan = 0usize;
    let mut last_seed = None;
    for (i, (seed, pair)) in pairs.iter().enumerate() {
        if last_seed != Some(*seed) {
            per_plan = 0;
            last_seed = Some(*seed);
        }
        let (input, target) = (format!("p{i:05}.grid"), format!("p{i:05}.labels"));
        let grid = GlobalMap { probs: pair.input.probs.clone(), cell_size: pair.input.cell_size, origin: (0.0, 0.0) };
        fs::write(dir.join(&input), encode_grid(&grid))?;
        fs::write(dir.join(&target), encode_labels(pair.input.h(), pair.input.w(), &pair.target)?)?;
        let wpe = waypoints_per_episode.max(1);
        rows.push(ManifestRow { input, target, floorplan: *seed, episode: per_plan / wpe, waypoint: per_plan % wpe });
        per_plan += 1;
    }
    write_manifest(fs::File::create(dir.join("manifest.csv"))?, &rows)
}

/// Reads a dataset directory written by [`export_dataset`].
pub fn import_dataset(dir: &Path) -> Result<Vec<(u64, TrainingPair)>> {
    let rows = read_manifest(fs::File::open(dir.join("manifest.csv"))?)?;
    rows.into_iter()
        .map(|r| {
            let grid = decode_grid(&fs::read(dir.join(&r.input))?)?;
            let (h, w, target) = decode_labels(&fs::read(dir.join(&r.target))?)?;
            if (h, w) != (grid.h(), grid.w()) {
                return Err(Error::DimensionMismatch(format!("{} and {} differ in shape", r.input, r.target)));
            }
            Ok((r.floorplan, TrainingPair { input: LocalGrid { probs: grid.probs, cell_size: grid.cell_size }, target }))
        })
        .collect()
}
