//! Closed forms of the analytic constructions against exact evaluation.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use epistemic_core::epistemic::{bayes_optimal_memory_policy, optimal_memoryless_policy, DEFAULT_NODE_BUDGET};
use epistemic_core::worlds::{
    binary_tree_reference, classification_memoryless_return, classification_optimal_memoryless,
    classification_ordering_return, deterministic_guess_return, make_binary_tree, make_classification_env_unbounded,
    make_disjoint_support, make_stay_switch, tree_reference_policy, LabelDataset, TreeSpec,
};
use epistemic_core::{epistemic_return, MemorylessPolicy};

use crate::output::{emit, Outcome};

const TOL: f64 = 1e-8;

#[derive(Args)]
pub struct ConstructionsArgs {
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 20.0)]
    penalty: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 3)]
    tree_depth: usize,
    #[arg(long, default_value_t = 0.99)]
    tree_gamma: f64,
    /// Label distribution for the classification rows.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.3,0.2")]
    labels: Vec<f64>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub struct Row {
    pub construction: String,
    pub policy: &'static str,
    pub closed_form: f64,
    pub computed: f64,
}

impl Row {
    pub fn abs_err(&self) -> f64 {
        (self.closed_form - self.computed).abs()
    }
}

pub fn rows(args: &ConstructionsArgs) -> anyhow::Result<Vec<Row>> {
    let mut out = Vec::new();
    let (eps, c, g) = (args.epsilon, args.penalty, args.gamma);
    let ss = make_stay_switch(eps, c, g)?;
    let name = format!("stay_switch(eps={eps},c={c},gamma={g})");
    let per_step = (1.0 - eps) - eps * c;
    for (policy, closed, pi) in [
        ("always_switch", per_step / (1.0 - g), MemorylessPolicy::deterministic(&[1, 1], 2)),
        ("uniform", 0.5 * per_step / (1.0 - g), MemorylessPolicy::uniform(2, 2)),
        ("always_stay", 0.0, MemorylessPolicy::deterministic(&[0, 0], 2)),
    ] {
        out.push(Row {
            construction: name.clone(),
            policy,
            closed_form: closed,
            computed: epistemic_return(&ss, &pi)?,
        });
    }

    let spec = TreeSpec::new(args.tree_depth, args.tree_gamma);
    let reference = binary_tree_reference(&spec, 0.5)?;
    let tree = make_binary_tree(&spec)?;
    let name = format!("binary_tree(n={},gamma={})", spec.depth, spec.discount);
    let (n, na) = (tree.num_states(), tree.num_actions());
    for (policy, closed, pi) in [
        ("bayes_memoryless", reference.j_opt, tree_reference_policy(&spec)?),
        ("uniform", reference.j_unif, MemorylessPolicy::uniform(n, na)),
        ("always_left", reference.j_det, MemorylessPolicy::deterministic(&vec![0; n], na)),
    ] {
        out.push(Row {
            construction: name.clone(),
            policy,
            closed_form: closed,
            computed: epistemic_return(&tree, &pi)?,
        });
    }

    let p = &args.labels;
    let ds = LabelDataset::new(vec![("x".into(), p.clone())], g, p.len())?;
    let item = &make_classification_env_unbounded(&ds)?.items[0];
    let name = format!("classification(p={p:?},gamma={g})");
    let tree = bayes_optimal_memory_policy(&item.posterior, p.len() + 1, DEFAULT_NODE_BUDGET)?;
    out.push(Row {
        construction: name.clone(),
        policy: "adaptive_ordering",
        closed_form: classification_ordering_return(p, g)?.0,
        computed: tree.value,
    });
    let row = classification_optimal_memoryless(p, g)?;
    out.push(Row {
        construction: name.clone(),
        policy: "optimal_memoryless",
        closed_form: classification_memoryless_return(p, &row, g)?,
        computed: epistemic_return(&item.posterior, &item.tied_policy(&row)?)?,
    });
    let best = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
    let onehot: Vec<f64> = (0..p.len()).map(|y| (y == best) as u8 as f64).collect();
    out.push(Row {
        construction: name,
        policy: "deterministic_repeat",
        closed_form: deterministic_guess_return(p, g)?,
        computed: epistemic_return(&item.posterior, &item.tied_policy(&onehot)?)?,
    });

    let disjoint = make_disjoint_support(g)?;
    out.push(Row {
        construction: format!("disjoint_support(gamma={g})"),
        policy: "bayes_memoryless",
        closed_form: 0.0,
        computed: optimal_memoryless_policy(&disjoint, 4, 0)?.value,
    });
    Ok(out)
}

pub fn run(args: &ConstructionsArgs) -> anyhow::Result<Outcome> {
    let rows = rows(args)?;
    let mut csv = String::from("construction,policy,closed_form,computed,abs_err\n");
    let mut failures = 0;
    for r in &rows {
        let _ = writeln!(
            csv,
            "\"{}\",{},{},{},{:e}",
            r.construction,
            r.policy,
            r.closed_form,
            r.computed,
            r.abs_err()
        );
        if !(r.abs_err() <= TOL) {
            failures += 1;
        }
    }
    emit(args.out.as_deref(), &csv)?;
    eprintln!("constructions: {} rows, {failures} above {TOL:e}", rows.len());
    Ok(Outcome::from_pass(failures == 0))
}
