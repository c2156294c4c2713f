//! Guessing policies on label datasets.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use epistemic_core::worlds::{classification_optimal_memoryless, guess_policy_return, GuessPolicy, LabelDataset};

use crate::output::{emit, read_file, usage, Outcome};

const ORDER_TOL: f64 = 1e-12;

#[derive(Args)]
pub struct ClassifyArgs {
    /// Dataset file with one `id p1 ... pd` line per item.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Generate this many noisy items instead of reading a dataset.
    #[arg(long)]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 5)]
    labels: usize,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the generated dataset here.
    #[arg(long, requires = "synthetic")]
    write_dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.9,0.99")]
    gammas: Vec<f64>,
    /// Attempts per item; unlimited when absent.
    #[arg(long)]
    time_limit: Option<usize>,
    /// Fraction of items, taken from the end, forming the held-out split.
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub const POLICIES: [&str; 4] = ["deterministic", "uniform_after_first", "optimal_memoryless", "adaptive"];

/// Mean return of each policy in `POLICIES` order.
pub fn policy_means(items: &[Vec<f64>], gamma: f64, time_limit: Option<usize>) -> anyhow::Result<[f64; 4]> {
    let mut sums = [0.0; 4];
    for p in items {
        let row = classification_optimal_memoryless(p, gamma)?;
        let policies = [
            GuessPolicy::DeterministicRepeat,
            GuessPolicy::UniformAfterFirst,
            GuessPolicy::Memoryless(row),
            GuessPolicy::Adaptive,
        ];
        for (s, g) in sums.iter_mut().zip(&policies) {
            *s += guess_policy_return(p, g, gamma, time_limit)?;
        }
    }
    Ok(sums.map(|s| s / items.len() as f64))
}

/// Adaptive ≥ uniform-after-first ≥ deterministic, and the optimal
/// memoryless row at least as good as repeating one guess.
pub fn ordering_holds(m: &[f64; 4]) -> bool {
    m[3] >= m[1] - ORDER_TOL && m[1] >= m[0] - ORDER_TOL && m[2] >= m[0] - ORDER_TOL
}

fn load(args: &ClassifyArgs) -> anyhow::Result<LabelDataset> {
    let t = args.time_limit.unwrap_or(1);
    match (&args.dataset, args.synthetic) {
        (Some(path), None) => Ok(LabelDataset::parse(&read_file(path)?, 0.9, t)?),
        (None, Some(n)) => {
            let ds = LabelDataset::synthetic(n, args.labels, args.noise, 0.9, t, args.seed)?;
            if let Some(path) = &args.write_dataset {
                emit(Some(path), &ds.to_text())?;
            }
            Ok(ds)
        }
        _ => Err(usage("pass exactly one of --dataset or --synthetic")),
    }
}

pub fn run(args: &ClassifyArgs) -> anyhow::Result<Outcome> {
    if !(0.0..=1.0).contains(&args.test_fraction) {
        return Err(usage(format!("test fraction {} outside [0, 1]", args.test_fraction)));
    }
    if args.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(usage("discounts must lie in [0, 1]"));
    }
    let ds = load(args)?;
    let items: Vec<Vec<f64>> = ds.items.iter().map(|(_, p)| p.clone()).collect();
    let n_test = ((items.len() as f64) * args.test_fraction).round() as usize;
    let (train, test) = items.split_at(items.len() - n_test);
    let mut csv = String::from("gamma,split,items,policy,mean_return\n");
    let mut ok = true;
    for &gamma in &args.gammas {
        for (split, set) in [("train", train), ("test", test)] {
            if set.is_empty() {
                continue;
            }
            let means = policy_means(set, gamma, args.time_limit)?;
            for (name, m) in POLICIES.iter().zip(&means) {
                let _ = writeln!(csv, "{gamma},{split},{},{name},{m}", set.len());
            }
            if !ordering_holds(&means) {
                eprintln!("ordering violated at gamma={gamma} on {split}: {means:?}");
                ok = false;
            }
        }
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(Outcome::from_pass(ok))
}
