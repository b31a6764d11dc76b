//! Episode suites, baselines and their CSV outputs.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{Method, RunConfig, Task};
use super::episode::{run_episode, CoverageSnapshot, EpisodeOutcome};
use super::train::train_predictors;
use crate::formats::{parse_floorplan, parse_weights};
use crate::metrics::MetricsRecord;
use crate::predictor::PredictorParams;
use crate::world::{generate_floorplan, sample_episode, sample_start, Episode, Floorplan};
use crate::{Error, Result};

/// Means over every episode row, aborted ones included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub method: String,
    pub task: Task,
    pub episodes: usize,
    pub aborted: usize,
    pub success_rate: f64,
    pub mean_spl: f64,
    pub mean_map_acc_m2: f64,
    pub mean_iou_pct: f64,
    pub mean_cov_m2: f64,
    pub mean_cov_pct: f64,
    pub mean_steps: f64,
    pub mean_path_m: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub records: Vec<MetricsRecord>,
    pub summary: SuiteSummary,
    /// Episode index with each coverage snapshot.
    pub snapshots: Vec<(usize, CoverageSnapshot)>,
    pub step_seconds: Vec<f64>,
}

impl SuiteResult {
    pub fn aborted(&self) -> usize {
        self.summary.aborted
    }
}

pub fn summarize(method: &str, task: Task, records: &[MetricsRecord]) -> SuiteSummary {
    let n = records.len();
    let mean = |f: &dyn Fn(&MetricsRecord) -> f64| if n == 0 { 0.0 } else { records.iter().map(f).sum::<f64>() / n as f64 };
    SuiteSummary {
        method: method.to_string(),
        task,
        episodes: n,
        aborted: records.iter().filter(|r| !r.failure.is_empty()).count(),
        success_rate: mean(&|r| f64::from(u8::from(r.success))),
        mean_spl: mean(&|r| r.spl),
        mean_map_acc_m2: mean(&|r| r.map_acc_m2),
        mean_iou_pct: mean(&|r| r.iou_pct),
        mean_cov_m2: mean(&|r| r.cov_m2),
        mean_cov_pct: mean(&|r| r.cov_pct),
        mean_steps: mean(&|r| r.steps_taken as f64),
        mean_path_m: mean(&|r| r.path_m),
    }
}

/// Floorplan and episode `index` of an evaluation suite.
pub fn prepare_episode(cfg: &RunConfig, index: usize, fixed: Option<&Floorplan>) -> Result<(Floorplan, Episode)> {
    let seed = cfg.eval_seed(index);
    let fp = match fixed {
        Some(fp) => fp.clone(),
        None => generate_floorplan(seed, &cfg.world)?,
    };
    let episode_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ cfg.seeds.run;
    let mut episode = match cfg.task {
        Task::Explore => sample_start(&fp, seed, episode_seed, cfg.budget())?,
        Task::Pointgoal => sample_episode(&fp, seed, episode_seed, &cfg.constraints())?,
    };
    episode.floorplan_id = seed;
    Ok((fp, episode))
}

/// Weights for ensemble methods: loaded from the configured files, or
/// trained on the training seeds when none are given.
pub fn resolve_members(cfg: &RunConfig) -> Result<Vec<PredictorParams>> {
    if !cfg.method.uses_ensemble() {
        return Ok(Vec::new());
    }
    if cfg.ensemble.weights.is_empty() {
        return Ok(train_predictors(cfg, None)?.members.into_iter().map(|o| o.params).collect());
    }
    cfg.ensemble.weights.iter().map(|p| parse_weights(&fs::read_to_string(p)?)).collect()
}

fn failed_record(cfg: &RunConfig, index: usize, err: &Error) -> MetricsRecord {
    MetricsRecord {
        episode: index,
        method: cfg.method.name().to_string(),
        floorplan_seed: cfg.eval_seed(index),
        steps_taken: 0,
        success: false,
        spl: 0.0,
        gd_m: 0.0,
        gedr: 0.0,
        path_m: 0.0,
        map_acc_m2: 0.0,
        iou_pct: 0.0,
        cov_m2: 0.0,
        cov_pct: 0.0,
        failure: err.to_string(),
    }
}

#[derive(Serialize)]
struct CoverageRow {
    episode: usize,
    step: usize,
    cov_m2: f64,
    cov_pct: f64,
}

#[derive(Serialize)]
struct TimingRow {
    episode: usize,
    mean_step_seconds: f64,
}

/// Runs `cfg.episodes` episodes. With `out_dir`, writes `metrics.csv`,
/// `summary.csv`, `coverage.csv` (exploration), `timing.csv` and one
/// artifact directory per episode. Wall-clock timing only goes to
/// `timing.csv`, so the other files are identical across reruns.
pub fn run_suite(cfg: &RunConfig, members: &[PredictorParams], out_dir: Option<&Path>) -> Result<SuiteResult> {
    cfg.validate()?;
    let fixed = match &cfg.floorplan_file {
        Some(p) => Some(parse_floorplan(&fs::read_to_string(p)?)?),
        None => None,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut records = Vec::with_capacity(cfg.episodes);
    let mut snapshots = Vec::new();
    let mut step_seconds = Vec::new();
    for i in 0..cfg.episodes {
        let ep_dir = out_dir.map(|d| d.join(format!("episode_{i:04}")));
        if let Some(d) = &ep_dir {
            fs::create_dir_all(d)?;
        }
        let outcome: Result<EpisodeOutcome> =
            prepare_episode(cfg, i, fixed.as_ref()).and_then(|(fp, ep)| run_episode(cfg, &fp, &ep, members, i, ep_dir.as_deref()));
        match outcome {
            Ok(o) => {
                snapshots.extend(o.snapshots.iter().map(|s| (i, *s)));
                step_seconds.push(o.mean_step_seconds);
                records.push(o.record);
            }
            Err(e) => {
                step_seconds.push(0.0);
                records.push(failed_record(cfg, i, &e));
            }
        }
    }
    let summary = summarize(cfg.method.name(), cfg.task, &records);
    if let Some(dir) = out_dir {
        let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
        if records.is_empty() {
            w.write_record(METRICS_HEADER)?;
        }
        for r in &records {
            w.serialize(r)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        w.serialize(&summary)?;
        w.flush()?;
        if cfg.task == Task::Explore {
            let mut w = csv::Writer::from_path(dir.join("coverage.csv"))?;
            if snapshots.is_empty() {
                w.write_record(["episode", "step", "cov_m2", "cov_pct"])?;
            }
            for (e, s) in &snapshots {
                w.serialize(CoverageRow { episode: *e, step: s.step, cov_m2: s.cov_m2, cov_pct: s.cov_pct })?;
            }
            w.flush()?;
        }
        let mut w = csv::Writer::from_path(dir.join("timing.csv"))?;
        if step_seconds.is_empty() {
            w.write_record(["episode", "mean_step_seconds"])?;
        }
        for (e, s) in step_seconds.iter().enumerate() {
            w.serialize(TimingRow { episode: e, mean_step_seconds: *s })?;
        }
        w.flush()?;
    }
    Ok(SuiteResult { records, summary, snapshots, step_seconds })
}

/// Column order of `metrics.csv`.
pub const METRICS_HEADER: [&str; 14] =
    ["episode", "method", "floorplan_seed", "steps_taken", "success", "spl", "gd_m", "gedr", "path_m", "map_acc_m2", "iou_pct", "cov_m2", "cov_pct", "failure"];

/// Runs a suite with one of the baseline policies.
pub fn run_baseline(cfg: &RunConfig, baseline: &str, out_dir: Option<&Path>) -> Result<SuiteResult> {
    let method = Method::parse(baseline)?;
    if !matches!(method, Method::Frontier | Method::RandomGoal | Method::StraightGoal) {
        return Err(Error::UnknownBaseline(baseline.to_string()));
    }
    run_suite(&RunConfig { method, ..cfg.clone() }, &[], out_dir)
}
