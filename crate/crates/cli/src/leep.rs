//! LEEP and its ablations on the maze suite, driven by a config file.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use epistemic_core::epistemic::ContextSet;
use epistemic_core::leep::{
    generalization_report, train_baseline_pg, train_ensemble_noreg, train_leep, ConfigMap, Link, TrainConfig,
    TrainResult,
};
use epistemic_core::worlds::make_contextual_maze;

use crate::output::{emit, mean_se, read_file, usage, Outcome};

#[derive(Args)]
pub struct LeepArgs {
    /// `key = value` config file.
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Leep,
    Baseline,
    NoReg,
    LeepAvg,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Leep, Method::Baseline, Method::NoReg, Method::LeepAvg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Leep => "leep",
            Method::Baseline => "baseline",
            Method::NoReg => "ensemble_noreg",
            Method::LeepAvg => "leep_avg",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub width: usize,
    pub height: usize,
    pub contexts: usize,
    pub train: usize,
    pub maze_seed: u64,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    pub train_cfg: TrainConfig,
}

impl Experiment {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let c = ConfigMap::parse(text)?;
        let env: String = c.get_or("env", "maze".to_string())?;
        if env != "maze" {
            return Err(usage(format!("line {}: unknown env '{env}'", c.line("env"))));
        }
        let train_cfg = TrainConfig::from_config(&c)?;
        let methods = match c.get_list::<String>("methods")? {
            None => Method::ALL.to_vec(),
            Some(names) => names
                .iter()
                .map(|n| n.parse::<Method>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("line {}: {e}", c.line("methods"))))?,
        };
        let exp = Experiment {
            width: c.get_or("width", 8)?,
            height: c.get_or("height", 8)?,
            contexts: c.get_or("contexts", 300)?,
            train: c.get_or("train", 200)?,
            maze_seed: c.get_or("maze_seed", 0)?,
            seeds: c.get_list("seeds")?.unwrap_or_else(|| vec![train_cfg.seed]),
            methods,
            out_dir: c.get_or("out_dir", PathBuf::from("leep_out"))?,
            train_cfg,
        };
        c.finish()?;
        if exp.seeds.is_empty() {
            return Err(usage("seeds must not be empty"));
        }
        Ok(exp)
    }
}

pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub train_return: f64,
    pub test_return: f64,
}

fn train(method: Method, exp: &Experiment, cfg: &TrainConfig, seed: u64) -> anyhow::Result<(TrainResult, f64, f64)> {
    let suite = make_contextual_maze(exp.contexts, exp.train, exp.width, exp.height, exp.maze_seed + seed)?;
    let (cm, tr, te): (_, &ContextSet, &ContextSet) = (&suite.contexts, &suite.train, &suite.test);
    let result = match method {
        Method::Leep => train_leep(cm, tr, te, cfg)?,
        Method::LeepAvg => train_leep(cm, tr, te, &TrainConfig { link: Link::Avg, ..cfg.clone() })?,
        Method::Baseline => train_baseline_pg(cm, tr, te, cfg)?,
        Method::NoReg => train_ensemble_noreg(cm, tr, te, cfg)?,
    };
    let report = generalization_report(cm, &result.policy, tr, te)?;
    Ok((result, report.train_return, report.test_return))
}

pub fn run_experiment(exp: &Experiment) -> anyhow::Result<Vec<RunSummary>> {
    std::fs::create_dir_all(&exp.out_dir).with_context(|| format!("creating {}", exp.out_dir.display()))?;
    let mut runs = Vec::new();
    for &method in &exp.methods {
        for &seed in &exp.seeds {
            let cfg = TrainConfig { seed, ..exp.train_cfg.clone() };
            let (result, train_return, test_return) = train(method, exp, &cfg, seed)?;
            let path = exp.out_dir.join(format!("{}_seed{seed}.csv", method.name()));
            emit(Some(&path), &result.log.to_csv())?;
            eprintln!(
                "{} seed {seed}: train {train_return:.4} test {test_return:.4}",
                method.name()
            );
            runs.push(RunSummary {
                method,
                seed,
                train_return,
                test_return,
            });
        }
    }
    Ok(runs)
}

pub fn summary_csv(exp: &Experiment, runs: &[RunSummary]) -> String {
    let mut out = String::from("method,seeds,train_mean,train_se,test_mean,test_se,gap_mean,gap_se\n");
    for &method in &exp.methods {
        let rs: Vec<_> = runs.iter().filter(|r| r.method == method).collect();
        let train: Vec<f64> = rs.iter().map(|r| r.train_return).collect();
        let test: Vec<f64> = rs.iter().map(|r| r.test_return).collect();
        let gap: Vec<f64> = rs.iter().map(|r| r.train_return - r.test_return).collect();
        let (a, b, c) = (mean_se(&train), mean_se(&test), mean_se(&gap));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            method.name(),
            rs.len(),
            a.0,
            a.1,
            b.0,
            b.1,
            c.0,
            c.1
        );
    }
    out
}

pub fn run(args: &LeepArgs) -> anyhow::Result<Outcome> {
    let mut exp = Experiment::parse(&read_file(&args.config)?)
        .with_context(|| format!("in config {}", args.config.display()))?;
    if let Some(out) = &args.out {
        exp.out_dir = out.clone();
    }
    let runs = run_experiment(&exp)?;
    let mut finals = String::from("method,seed,train_return,test_return,gap\n");
    for r in &runs {
        let _ = writeln!(
            finals,
            "{},{},{},{},{}",
            r.method.name(),
            r.seed,
            r.train_return,
            r.test_return,
            r.train_return - r.test_return
        );
    }
    emit(Some(&exp.out_dir.join("final.csv")), &finals)?;
    let summary = summary_csv(&exp, &runs);
    emit(Some(&exp.out_dir.join("summary.csv")), &summary)?;
    print!("{summary}");
    Ok(Outcome::Pass)
}
