//! Optimal policies for a posterior read from a file.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use epistemic_core::epistemic::{bayes_optimal_memory_policy, optimal_memoryless_policy, DEFAULT_NODE_BUDGET};
use epistemic_core::format::parse_posterior;
use epistemic_core::mdp::{horizon_for_bias, optimal_deterministic_policy};
use epistemic_core::{Error, MemorylessPolicy};

use crate::output::{emit, read_file, Outcome};

#[derive(Args)]
pub struct SolveArgs {
    posterior: PathBuf,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Belief-tree horizon; 0 picks one from a truncation bias of 1e-4,
    /// capped at 60.
    #[arg(long, default_value_t = 0)]
    horizon: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    node_budget: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Rows as `a|b|c` probabilities joined by `;`.
fn policy_cell(pi: &MemorylessPolicy) -> String {
    (0..pi.num_states())
        .map(|s| pi.row(s).iter().map(|p| p.to_string()).collect::<Vec<_>>().join("|"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn run(args: &SolveArgs) -> anyhow::Result<Outcome> {
    let p = parse_posterior(&read_file(&args.posterior)?)?;
    let mut csv = String::from("kind,member,weight,value,policy\n");
    for (i, (m, w)) in p.mdps().iter().zip(p.weights()).enumerate() {
        let opt = optimal_deterministic_policy(m);
        let _ = writeln!(csv, "member_optimal,{i},{w},{},{}", opt.value, policy_cell(&opt.policy));
    }
    let sol = optimal_memoryless_policy(&p, args.restarts, args.seed)?;
    let _ = writeln!(csv, "bayes_memoryless,,,{},{}", sol.value, policy_cell(&sol.policy));
    let horizon = if args.horizon > 0 {
        args.horizon
    } else {
        horizon_for_bias(&p.mdps()[0], 1e-4).min(60)
    };
    match bayes_optimal_memory_policy(&p, horizon, args.node_budget) {
        Ok(tree) => {
            let _ = writeln!(
                csv,
                "bayes_memory,,,{},horizon={horizon} nodes={} bias<={}",
                tree.value,
                tree.len(),
                tree.truncation_bias
            );
        }
        Err(Error::NodeBudgetExceeded { budget }) => {
            eprintln!("belief tree skipped: more than {budget} nodes at horizon {horizon}");
        }
        Err(e) => return Err(e.into()),
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(Outcome::Pass)
}
