//! Property suites from the analysis module.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use epistemic_core::analysis::{
    bound_coefficient, bound_suite, link_suite, maxent_suite, pdl_suite, verify_link_optimality, OptimizerBudget,
    BOUND_TOL, LINK_TOL, PDL_TOL,
};
use epistemic_core::leep::Link;

use crate::output::{emit, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Bound,
    Link,
    Maxent,
    Pdl,
    All,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Random instances per suite; each suite has its own default.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failures CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub struct Failure {
    pub suite: &'static str,
    pub case: String,
    pub measured: f64,
    pub threshold: f64,
}

/// Runs one suite, returning the number of checks and the failures.
pub fn run_suite(suite: Suite, count: Option<usize>, seed: u64) -> anyhow::Result<(usize, Vec<Failure>)> {
    let mut failures = Vec::new();
    let checks = match suite {
        Suite::Bound => {
            let cases = bound_suite(count.unwrap_or(200), seed)?;
            for c in &cases {
                if !c.report.holds() {
                    failures.push(Failure {
                        suite: "bound",
                        case: c.id.clone(),
                        measured: c.report.slack,
                        threshold: -BOUND_TOL,
                    });
                }
            }
            cases.len()
        }
        Suite::Pdl => {
            let reports = pdl_suite(count.unwrap_or(100), seed)?;
            for (i, r) in reports.iter().enumerate() {
                if !(r.residual <= PDL_TOL) {
                    failures.push(Failure {
                        suite: "pdl",
                        case: i.to_string(),
                        measured: r.residual,
                        threshold: PDL_TOL,
                    });
                }
            }
            reports.len()
        }
        Suite::Maxent => {
            let n = count.unwrap_or(100);
            let reports = maxent_suite(n, n.min(10), seed)?;
            for (i, (_, r)) in reports.iter().enumerate() {
                if !r.passes() {
                    failures.push(Failure {
                        suite: "maxent",
                        case: i.to_string(),
                        measured: r.max_abs_diff,
                        threshold: 1e-9,
                    });
                }
            }
            reports.len()
        }
        Suite::Link => {
            let cases = link_suite(seed)?;
            let cases = &cases[..count.unwrap_or(cases.len()).min(cases.len())];
            for c in cases {
                for link in [Link::Max, Link::Avg] {
                    let alpha = bound_coefficient(&c.posterior);
                    let r = verify_link_optimality(&c.posterior, link, alpha, OptimizerBudget::default())?;
                    if !r.passes() {
                        failures.push(Failure {
                            suite: "link",
                            case: format!("{}-{}", c.id, link.name()),
                            measured: r.grid_value - r.ensemble_value,
                            threshold: LINK_TOL,
                        });
                    }
                }
            }
            2 * cases.len()
        }
        Suite::All => {
            let mut total = 0;
            for s in [Suite::Bound, Suite::Link, Suite::Maxent, Suite::Pdl] {
                let (n, f) = run_suite(s, count, seed)?;
                total += n;
                failures.extend(f);
            }
            total
        }
    };
    Ok((checks, failures))
}

pub fn run(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let (checks, failures) = run_suite(args.suite, args.count, args.seed)?;
    let mut csv = String::from("suite,case,measured,threshold\n");
    for f in &failures {
        let _ = writeln!(csv, "{},{},{},{}", f.suite, f.case, f.measured, f.threshold);
    }
    emit(args.out.as_deref(), &csv)?;
    eprintln!("{:?}: {checks} checks, {} failures", args.suite, failures.len());
    Ok(Outcome::from_pass(failures.is_empty()))
}
