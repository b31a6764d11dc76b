//! Experiment plumbing: configuration, episodes, suites, baselines and
//! predictor training.

mod baselines;
mod config;
mod episode;
mod suite;
mod train;

pub use baselines::{frontier_goal, frontier_mask, random_goal, route_distances};
pub use config::{parse_config, write_config, EnsembleConfig, EpisodeConfig, MapConfig, Method, RunConfig, SeedConfig, Task};
pub use episode::{run_episode, CoverageSnapshot, EpisodeOutcome};
pub use suite::{prepare_episode, resolve_members, run_baseline, run_suite, summarize, SuiteResult, SuiteSummary, METRICS_HEADER};
pub use train::{export_dataset, import_dataset, train_from_pairs, train_predictors, training_floorplans, training_pairs, TrainReport};
