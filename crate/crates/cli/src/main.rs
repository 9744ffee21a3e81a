use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use mdpu::discovery::{certificate_holds, classify, exploration_threshold, psi, DiscoveryModel, PsiClass};
use mdpu::envs::{
    baseline_random, baseline_repeat, build_ladder, BaselineOptions, CrawlerConfig, CrawlerLadder, CrawlerLevelEnv,
    Exploration, LevelOptions,
};
use mdpu::harness::{run_experiment, write_log, CellTag, ExperimentConfig, LogLine, Method};
use mdpu::mdp::DiscreteMdp;
use mdpu::urmax::{diagonal_run, DiagonalConfig, DiagonalReport, MdpuEnv, TabularLadder};
use mdpu::{derive_seed, Mdpu, Policy};

/// MDPs with unawareness: discovery calculus, URMAX and the crawler lab.
///
/// Structured output goes to stdout, a short summary to stderr.
#[derive(Parser)]
#[command(name = "mdpu", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learnability class of a discovery model, with its certificate.
    Classify(ModelArgs),
    /// Least T with Ψ(T) ≥ ln(4N/δ).
    Threshold(ModelArgs),
    /// Run diagonal URMAX on the crawler ladder or on a tabular MDPU.
    Learn(LearnArgs),
    /// Describe crawler discretization levels.
    Ladder(LadderArgs),
    /// Run a search baseline at one crawler level.
    Baseline(BaselineArgs),
    /// Run an experiment grid from a TOML document.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Discovery model, e.g. `constant:0.1`, `power:1,2`, `systematic:340,116`.
    #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
    model: Option<String>,
    /// Shorthand for `--model constant:BETA`.
    #[arg(long)]
    beta: Option<f64>,
    /// The N inside ln(4N/δ).
    #[arg(long, short = 'n', default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

impl ModelArgs {
    fn model(&self) -> Result<DiscoveryModel> {
        match (&self.model, self.beta) {
            (Some(m), _) => Ok(m.parse()?),
            (None, Some(b)) => Ok(DiscoveryModel::new(mdpu::discovery::DiscoveryKind::Constant { beta: b })?),
            (None, None) => bail!("one of --model or --beta is required"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExplorationArg {
    Systematic,
    Random,
    Apprenticeship,
}

#[derive(Args)]
struct CrawlerArgs {
    /// TOML file with crawler parameters; defaults otherwise.
    #[arg(long)]
    crawler: Option<PathBuf>,
    /// Continuous samples per transition estimate.
    #[arg(long, default_value_t = 16)]
    kernel_samples: usize,
    /// Samples per usefulness check.
    #[arg(long, default_value_t = 4)]
    useful_samples: usize,
}

impl CrawlerArgs {
    fn config(&self) -> Result<CrawlerConfig> {
        let Some(path) = &self.crawler else {
            return Ok(CrawlerConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
        let cfg: CrawlerConfig = toml::from_str(&text).with_context(|| path.display().to_string())?;
        cfg.validate().map_err(anyhow::Error::msg)?;
        Ok(cfg)
    }

    fn options(&self, seed: u64) -> LevelOptions {
        LevelOptions { kernel_samples: self.kernel_samples, useful_samples: self.useful_samples, seed }
    }
}

#[derive(Args)]
struct LearnArgs {
    /// Tabular MDP document (JSON) instead of the crawler.
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// With --mdp: actions hidden at start, found through explore plays.
    #[arg(long, value_delimiter = ',')]
    hidden: Vec<usize>,
    /// With --mdp: start state.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Discovery model; with --mdp it drives discovery, otherwise it only
    /// sizes the explore budget.
    #[arg(long)]
    discovery: Option<String>,
    /// Crawler levels 2..=depth+1.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, value_enum, default_value = "systematic")]
    exploration: ExplorationArg,
    /// Apprenticeship hint strength.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 20_000)]
    budget: u64,
    #[arg(long, default_value_t = 10_000)]
    cell_budget: u64,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    /// Evaluation episodes per cell; default ⌈8 ln(2/δ)/ε²⌉.
    #[arg(long)]
    eval_runs: Option<usize>,
    /// Write the learner log here as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    crawler: CrawlerArgs,
}

#[derive(Args)]
struct LadderArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    levels: Vec<usize>,
    /// Also count useful actions at the rest state.
    #[arg(long)]
    useful: bool,
    #[command(flatten)]
    crawler: CrawlerArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Random,
    Repeat,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum, default_value = "random")]
    kind: BaselineKind,
    #[arg(long, default_value_t = 2)]
    level: usize,
    #[arg(long, default_value_t = 20_000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[command(flatten)]
    crawler: CrawlerArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment document (TOML).
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the document.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json values serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<Value> {
    match command {
        Command::Classify(a) => classify_cmd(&a),
        Command::Threshold(a) => threshold_cmd(&a),
        Command::Learn(a) => learn_cmd(&a),
        Command::Ladder(a) => ladder_cmd(&a),
        Command::Baseline(a) => baseline_cmd(&a),
        Command::Experiment(a) => experiment_cmd(&a),
    }
}

fn classify_cmd(a: &ModelArgs) -> Result<Value> {
    let model = a.model()?;
    let class = classify(&model);
    let checked = match class {
        PsiClass::PolynomialTime { m1, m2 } => Some(certificate_holds(&model, m1, m2)),
        _ => None,
    };
    let threshold = match class {
        PsiClass::Impossible { .. } => None,
        _ => exploration_threshold(&model, a.n, a.delta).ok(),
    };
    eprintln!("{model}: {}", class.name());
    Ok(json!({
        "model": model.to_string(),
        "class": class.name(),
        "certificate": class,
        "certificate_checked": checked,
        "n": a.n,
        "delta": a.delta,
        "threshold": threshold,
    }))
}

fn threshold_cmd(a: &ModelArgs) -> Result<Value> {
    let model = a.model()?;
    let t = exploration_threshold(&model, a.n, a.delta)?;
    let target = (4.0 * a.n as f64 / a.delta).ln();
    eprintln!("least T with Ψ(T) ≥ ln(4N/δ) = {target:.4}: {t}");
    Ok(
        json!({ "model": model.to_string(), "n": a.n, "delta": a.delta, "target": target, "psi": psi(&model, t), "threshold": t }),
    )
}

fn parse_model(text: &Option<String>) -> Result<Option<DiscoveryModel>> {
    text.as_deref().map(|t| t.parse().map_err(anyhow::Error::from)).transpose()
}

fn tabular_mdpu(path: &Path, hidden: &[usize], model: DiscoveryModel) -> Result<Mdpu> {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let mdp = DiscreteMdp::<f64>::from_json(&text).with_context(|| path.display().to_string())?;
    let hidden: BTreeSet<usize> = hidden.iter().copied().collect();
    let n = mdp.n_states();
    let aware = (0..n).map(|s| mdp.available(s).filter(|a| !hidden.contains(a)).collect()).collect();
    let found = (0..n).map(|s| mdp.available(s).filter(|a| hidden.contains(a)).collect()).collect();
    Ok(Mdpu::new(mdp.clone(), mdp.actions(), aware, model, found)?)
}

fn log_lines(report: &DiagonalReport, method: Method, level_offset: usize, seed: u64) -> Vec<LogLine> {
    report
        .log
        .iter()
        .map(|((level, rank), r)| LogLine {
            step: r.step,
            cell: CellTag { method, level: level + level_offset, seed, rank: Some(*rank) },
            event: r.event,
            payload: r.payload.clone(),
        })
        .collect()
}

fn learn_cmd(a: &LearnArgs) -> Result<Value> {
    let diag = DiagonalConfig {
        epsilon: a.epsilon,
        delta: a.delta,
        cell_budget: a.cell_budget,
        eval_runs: a.eval_runs,
        eval_horizon: a.horizon,
        ..DiagonalConfig::default()
    };
    let model = parse_model(&a.discovery)?;
    let (method, exploration) = match a.exploration {
        ExplorationArg::Systematic => (Method::BruteForce, Exploration::Systematic),
        ExplorationArg::Random => (Method::BruteForceRandom, Exploration::Random),
        ExplorationArg::Apprenticeship => (Method::Apprenticeship, Exploration::Apprenticeship { beta: a.beta }),
    };
    exploration.validate().map_err(anyhow::Error::msg)?;
    let mut runs = Vec::new();
    let mut log = Vec::new();
    for &seed in &a.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
        let (policy, report, offset): (Policy, DiagonalReport, usize) = match &a.mdp {
            Some(path) => {
                let model = model.clone().unwrap_or_else(|| DiscoveryModel::constant(1.0));
                let mdpu = tabular_mdpu(path, &a.hidden, model)?;
                if a.start >= mdpu.n_states() {
                    bail!("start state {} outside 0..{}", a.start, mdpu.n_states());
                }
                let ladder = TabularLadder { env: MdpuEnv::new(mdpu, a.start) };
                let (p, r) = diagonal_run(&ladder, &mut rng, a.budget, &diag)?;
                (p, r, 0)
            }
            None => {
                if a.depth == 0 {
                    bail!("--depth must be positive");
                }
                let levels: Vec<usize> = (2..a.depth + 2).collect();
                let built = build_ladder(&a.crawler.config()?, &levels, a.crawler.options(0))?;
                let ladder = CrawlerLadder::new(built, exploration).with_discovery(model.clone());
                let (p, r) = diagonal_run(&ladder, &mut rng, a.budget, &diag)?;
                (p, r, 1)
            }
        };
        let best = report.cells.iter().map(|c| c.measured_reward).fold(f64::NEG_INFINITY, f64::max);
        eprintln!(
            "seed {seed}: {} cells, {} steps, best measured reward {best:.6} at {}",
            report.cells.len(),
            report.budget_consumed,
            report.best_cell.map_or("no cell".to_string(), |(l, k)| format!("level {}, rank {k}", l + offset))
        );
        log.extend(log_lines(&report, method, offset, seed));
        let cells: Vec<Value> = report
            .cells
            .iter()
            .map(|c| {
                let mut v = serde_json::to_value(c).expect("reports serialize");
                v["level"] = json!(c.level + offset);
                v
            })
            .collect();
        runs.push(json!({
            "seed": seed,
            "budget_consumed": report.budget_consumed,
            "best_cell": report.best_cell.map(|(l, k)| (l + offset, k)),
            "cells": cells,
            "policy": policy,
        }));
    }
    if let Some(path) = &a.log {
        let file = std::fs::File::create(path).with_context(|| path.display().to_string())?;
        write_log(std::io::BufWriter::new(file), &log)?;
    }
    Ok(json!({ "runs": runs }))
}

fn ladder_cmd(a: &LadderArgs) -> Result<Value> {
    let levels = build_ladder(&a.crawler.config()?, &a.levels, a.crawler.options(0))?;
    let mut out = Vec::new();
    for l in &levels {
        let mut v = serde_json::to_value(l.summary())?;
        v["rest_state"] = json!(l.rest_state());
        if a.useful {
            v["rest_useful_actions"] = json!(l.useful_count(l.rest_state()));
        }
        let s = l.summary();
        eprintln!(
            "level {}: {} states, {} basic actions, {} potential actions, resolution {:.3}",
            s.level, s.states, s.basic_actions, s.potential_actions, s.resolution
        );
        out.push(v);
    }
    Ok(Value::Array(out))
}

fn baseline_cmd(a: &BaselineArgs) -> Result<Value> {
    let level = build_ladder(&a.crawler.config()?, &[a.level], a.crawler.options(0))?.remove(0);
    let goal = level.crawler().config().arena_radius;
    let mut env = CrawlerLevelEnv::new(level, Exploration::Random);
    let opts = BaselineOptions { horizon: a.horizon, goal };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, &[0]));
    let v = match a.kind {
        BaselineKind::Random => serde_json::to_value(baseline_random(&mut env, a.budget, &opts, &mut rng)?)?,
        BaselineKind::Repeat => serde_json::to_value(baseline_repeat(&mut env, a.budget, &opts, &mut rng)?)?,
    };
    eprintln!(
        "{} steps, best average reward {:.6}, {} useful actions",
        v["steps"], v["best_avg_reward"], v["useful_found"]
    );
    Ok(v)
}

fn experiment_cmd(a: &ExperimentArgs) -> Result<Value> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let out = run_experiment(&cfg)?;
    let dir = a.out.clone().or_else(|| cfg.output_dir.clone());
    if let Some(dir) = &dir {
        out.write_to(dir)?;
    }
    eprint!("{}", out.results.to_csv_string());
    for f in out.failures() {
        eprintln!("failed: {} level {} seed {}: {}", f.method, f.level, f.seed, f.error.as_deref().unwrap_or(""));
    }
    Ok(json!({
        "output_dir": dir,
        "runs": out.runs.len(),
        "failures": out.failures().count(),
        "results": out.results.rows,
    }))
}
