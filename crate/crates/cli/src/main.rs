use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use occnav::formats::write_floorplan;
use occnav::harness::{
    export_dataset, parse_config, resolve_members, run_baseline, run_suite, train_from_pairs, training_pairs, write_config, Method, RunConfig, SuiteResult,
    Task,
};
use occnav::world::generate_floorplan;

#[derive(Parser)]
#[command(name = "occnav", version, about = "Ensemble-uncertainty exploration and point-goal navigation in 2D grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "OCCNAV_OUT_DIR", default_value = "occnav-out")]
    out: PathBuf,
    /// Number of evaluation episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Step budget per episode.
    #[arg(long)]
    budget: Option<usize>,
    /// Run seed for planning, goal sampling and training.
    #[arg(long)]
    seed: Option<u64>,
    /// Weight files, one per ensemble member.
    #[arg(long = "weights", num_args = 1..)]
    weights: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated floorplans as text files.
    GenMaps {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        count: u64,
        #[arg(long, default_value_t = 1_000_000)]
        seed_base: u64,
    },
    /// Train the predictor ensemble on the training seeds.
    Train {
        #[command(flatten)]
        common: Common,
        /// Also write the training pairs here.
        #[arg(long)]
        dataset_dir: Option<PathBuf>,
    },
    /// Exploration suite.
    Explore {
        #[command(flatten)]
        common: Common,
        /// upen, frontier or random_goal.
        #[arg(long, default_value = "upen")]
        method: String,
    },
    /// Point-goal suite.
    Pointnav {
        #[command(flatten)]
        common: Common,
        /// upen, upen_occ, upen_greedy, random_goal or straight_goal.
        #[arg(long, default_value = "upen")]
        method: String,
        /// Minimum geodesic-to-euclidean ratio of sampled episodes.
        #[arg(long)]
        min_gedr: Option<f64>,
    },
    /// Baseline suite: frontier, random_goal or straight_goal.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        name: String,
        #[arg(long, value_parser = ["explore", "pointgoal"], default_value = "explore")]
        task: String,
    },
    /// Collect the summary.csv files under a directory into one table.
    Report {
        #[arg(long, env = "OCCNAV_OUT_DIR", default_value = "occnav-out")]
        dir: PathBuf,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn load(common: &Common, task: Task) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => parse_config(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => RunConfig::for_task(task),
    };
    cfg.task = task;
    if let Some(n) = common.episodes {
        cfg.episodes = n;
    }
    if let Some(b) = common.budget {
        cfg.episode.budget_t = Some(b);
    }
    if let Some(s) = common.seed {
        cfg.seeds.run = s;
    }
    if !common.weights.is_empty() {
        cfg.ensemble.weights = common.weights.clone();
        cfg.ensemble.members = common.weights.len();
    }
    Ok(cfg)
}

fn suite(cfg: &RunConfig, out: &Path) -> Result<SuiteResult> {
    cfg.validate()?;
    let members = resolve_members(cfg)?;
    let res = run_suite(cfg, &members, Some(out))?;
    print_summary(&res);
    Ok(res)
}

fn print_summary(res: &SuiteResult) {
    let s = &res.summary;
    println!(
        "{} {:?}: {} episodes, {} aborted, success {:.3}, spl {:.3}, cov {:.2} m2 ({:.1}%), map acc {:.2} m2, iou {:.1}%",
        s.method, s.task, s.episodes, s.aborted, s.success_rate, s.mean_spl, s.mean_cov_m2, s.mean_cov_pct, s.mean_map_acc_m2, s.mean_iou_pct
    );
}

fn report(dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).with_context(|| format!("reading {}", d.display()))? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "summary.csv") {
                files.push(p);
            }
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no summary.csv under {}", dir.display());
    }
    let mut header_done = false;
    let mut out = String::new();
    for f in &files {
        let text = fs::read_to_string(f)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if !header_done {
            out.push_str("source,");
            out.push_str(header);
            out.push('\n');
            header_done = true;
        }
        for l in lines {
            let src = f.parent().unwrap_or(dir).strip_prefix(dir).unwrap_or(Path::new("")).display().to_string();
            out.push_str(&format!("{src},{l}\n"));
        }
    }
    fs::write(dir.join("report.csv"), &out)?;
    print!("{out}");
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let res = match cli.command {
        Command::GenMaps { common, count, seed_base } => {
            let cfg = load(&common, Task::Explore)?;
            fs::create_dir_all(&common.out)?;
            for seed in seed_base..seed_base + count {
                let fp = generate_floorplan(seed, &cfg.world)?;
                fs::write(common.out.join(format!("floorplan_{seed}.txt")), write_floorplan(&fp))?;
            }
            println!("wrote {count} floorplans to {}", common.out.display());
            return Ok(ExitCode::SUCCESS);
        }
        Command::Train { common, dataset_dir } => {
            let cfg = load(&common, Task::Explore)?;
            cfg.validate()?;
            let pairs = training_pairs(&cfg)?;
            if let Some(d) = &dataset_dir {
                export_dataset(d, &pairs, cfg.dataset.waypoints_per_episode)?;
            }
            let report = train_from_pairs(&cfg, pairs.iter().map(|(s, p)| (*s, p)), Some(&common.out))?;
            fs::write(common.out.join("config.toml"), write_config(&cfg)?)?;
            for (i, m) in report.members.iter().enumerate() {
                let last = m.curve.last().map_or(m.initial_heldout, |e| e.heldout);
                println!("member {i}: held-out loss {:.4} -> {:.4}", m.initial_heldout, last);
            }
            println!("{} pairs, {} samples", report.pairs, report.samples);
            return Ok(ExitCode::SUCCESS);
        }
        Command::Explore { common, method } => {
            let mut cfg = load(&common, Task::Explore)?;
            cfg.method = Method::parse(&method)?;
            suite(&cfg, &common.out)?
        }
        Command::Pointnav { common, method, min_gedr } => {
            let mut cfg = load(&common, Task::Pointgoal)?;
            cfg.method = Method::parse(&method)?;
            if let Some(g) = min_gedr {
                cfg.episode.min_gedr = g;
            }
            suite(&cfg, &common.out)?
        }
        Command::Baseline { common, name, task } => {
            let task = if task == "explore" { Task::Explore } else { Task::Pointgoal };
            let cfg = load(&common, task)?;
            let res = run_baseline(&cfg, &name, Some(&common.out))?;
            print_summary(&res);
            res
        }
        Command::Report { dir } => {
            report(&dir)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::DefaultConfig => {
            print!("{}", write_config(&RunConfig::default())?);
            return Ok(ExitCode::SUCCESS);
        }
    };
    Ok(if res.aborted() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
