//! The ensemble lower bound and the performance difference identity.

use std::fmt::Write as _;

use rand::Rng;

use crate::epistemic::{epistemic_return, Posterior};
use crate::error::{Error, Result};
use crate::leep::Link;
use crate::mdp::{evaluate, value_bundle, MemorylessPolicy, TabularMdp};
use crate::random::{random_deterministic_with, random_mdp_with, random_policy_with, rng};

/// Allowed negative slack, for rounding.
pub const BOUND_TOL: f64 = 1e-8;
pub const PDL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Epistemic return of the combined policy.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `√2 r_max / ((1 - γ)² n)`.
    pub coefficient: f64,
    /// Per member: `(J_{M_i}(π_i), E_{s∼d_i}[√KL(π_i ‖ π)])`.
    pub terms: Vec<(f64, f64)>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.slack >= -BOUND_TOL
    }
}

fn kl_row(p: &[f64], q: &[f64]) -> f64 {
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            kl += a * (a / b).ln();
        }
    }
    kl.max(0.0)
}

/// `E_{s∼d^{π_i}_M}[√KL(π_i(·|s) ‖ π(·|s))]` over non-terminal states, given
/// the occupancy of `pi_i`. Infinite when `π` misses support that `π_i`
/// reaches.
pub fn expected_sqrt_kl(m: &TabularMdp, occupancy: &[f64], pi_i: &MemorylessPolicy, pi: &MemorylessPolicy) -> f64 {
    let mut total = 0.0;
    for (s, &d) in occupancy.iter().enumerate() {
        if d > 0.0 && !m.is_terminal(s) {
            total += d * kl_row(pi_i.row(s), pi.row(s)).sqrt();
        }
    }
    total
}

fn check_ensemble(p: &Posterior, members: &[MemorylessPolicy]) -> Result<()> {
    if members.len() != p.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} members for {} posterior samples",
            members.len(),
            p.len()
        )));
    }
    if !p.is_uniform() {
        return Err(Error::InvalidParameter("ensemble checks need uniform posterior weights".into()));
    }
    let shape = (p.num_states(), p.num_actions());
    if members.iter().any(|m| (m.num_states(), m.num_actions()) != shape) {
        return Err(Error::ShapeMismatch("member policy shape differs from the posterior".into()));
    }
    Ok(())
}

pub fn bound_coefficient(p: &Posterior) -> f64 {
    let g = p.discount();
    std::f64::consts::SQRT_2 * p.r_max() / ((1.0 - g) * (1.0 - g) * p.len() as f64)
}

/// Per-member returns and expected root divergences from `combined`.
fn member_terms(p: &Posterior, members: &[MemorylessPolicy], combined: &MemorylessPolicy) -> Result<Vec<(f64, f64)>> {
    p.mdps()
        .iter()
        .zip(members)
        .map(|(m, pi_i)| {
            let ev = evaluate(m, pi_i)?;
            Ok((ev.ret, expected_sqrt_kl(m, &ev.occupancy, pi_i, combined)))
        })
        .collect()
}

/// Both sides of `J(π) ≥ (1/n) Σ_i J_{M_i}(π_i) - c Σ_i E_{d_i}[√KL(π_i ‖ π)]`.
pub fn lower_bound_report(
    p: &Posterior,
    members: &[MemorylessPolicy],
    combined: &MemorylessPolicy,
) -> Result<BoundReport> {
    check_ensemble(p, members)?;
    if (combined.num_states(), combined.num_actions()) != (p.num_states(), p.num_actions()) {
        return Err(Error::ShapeMismatch("combined policy shape differs from the posterior".into()));
    }
    let lhs = epistemic_return(p, combined)?;
    let coefficient = bound_coefficient(p);
    let terms = member_terms(p, members, combined)?;
    let n = p.len() as f64;
    let mean: f64 = terms.iter().map(|t| t.0).sum::<f64>() / n;
    let divergence: f64 = terms.iter().map(|t| t.1).sum();
    let rhs = if divergence.is_infinite() {
        f64::NEG_INFINITY
    } else {
        mean - coefficient * divergence
    };
    Ok(BoundReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        coefficient,
        terms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointObjective {
    /// `(1/n) Σ_i J_{M_i}(π_i) - α Σ_i E_{d_i}[√KL(π_i ‖ f)]`.
    pub value: f64,
    pub mean_return: f64,
    pub divergence: f64,
    /// Whether `α` reaches the bound coefficient, so that the link of a
    /// maximizer is Bayes-optimal among memoryless policies.
    pub alpha_sufficient: bool,
}

pub fn joint_objective(members: &[MemorylessPolicy], link: Link, alpha: f64, p: &Posterior) -> Result<JointObjective> {
    check_ensemble(p, members)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} must be nonnegative")));
    }
    let f = link.apply(members)?;
    let terms = member_terms(p, members, &f)?;
    let mean_return = terms.iter().map(|t| t.0).sum::<f64>() / p.len() as f64;
    let divergence: f64 = terms.iter().map(|t| t.1).sum();
    let penalty = if alpha == 0.0 { 0.0 } else { alpha * divergence };
    Ok(JointObjective {
        value: mean_return - penalty,
        mean_return,
        divergence,
        alpha_sufficient: alpha >= bound_coefficient(p) * (1.0 - 1e-12),
    })
}

/// Random uniform posterior (1 to 5 members, 2 to 6 states, 2 to 4 actions,
/// γ ∈ {0.5, 0.9}) and one member policy per sample, some deterministic.
pub fn random_bound_instance(seed: u64) -> (Posterior, Vec<MemorylessPolicy>) {
    let mut g = rng(seed);
    let k = g.gen_range(1..=5);
    let n = g.gen_range(2..=6);
    let na = g.gen_range(2..=4);
    let gamma = if g.gen_bool(0.5) { 0.5 } else { 0.9 };
    let mdps = (0..k).map(|_| random_mdp_with(&mut g, n, na, gamma)).collect();
    let members = (0..k)
        .map(|_| {
            if g.gen_bool(0.3) {
                random_deterministic_with(&mut g, n, na)
            } else {
                random_policy_with(&mut g, n, na)
            }
        })
        .collect();
    (Posterior::uniform(mdps).expect("random members share a shape"), members)
}

#[derive(Debug, Clone)]
pub struct BoundCase {
    pub id: String,
    pub report: BoundReport,
}

/// For each instance: the bound against both links, against the uniform
/// policy with deterministic members, and the equality case where every
/// member is the combined policy.
pub fn bound_suite(instances: usize, seed: u64) -> Result<Vec<BoundCase>> {
    let mut out = Vec::with_capacity(4 * instances);
    for k in 0..instances {
        let (p, members) = random_bound_instance(seed.wrapping_add(k as u64));
        for link in [Link::Max, Link::Avg] {
            let f = link.apply(&members)?;
            out.push(BoundCase {
                id: format!("{k}-{}", link.name()),
                report: lower_bound_report(&p, &members, &f)?,
            });
        }
        let (n, na) = (p.num_states(), p.num_actions());
        let mut g = rng(seed.wrapping_add(k as u64) ^ 0x5eed);
        let det: Vec<_> = (0..p.len()).map(|_| random_deterministic_with(&mut g, n, na)).collect();
        out.push(BoundCase {
            id: format!("{k}-uniform"),
            report: lower_bound_report(&p, &det, &MemorylessPolicy::uniform(n, na))?,
        });
        let same = vec![members[0].clone(); p.len()];
        out.push(BoundCase {
            id: format!("{k}-equal"),
            report: lower_bound_report(&p, &same, &members[0])?,
        });
    }
    Ok(out)
}

pub fn bound_csv(cases: &[BoundCase]) -> String {
    let mut out = String::from("instance_id,lhs,rhs,slack,pass\n");
    for c in cases {
        let r = &c.report;
        let _ = writeln!(out, "{},{},{},{},{}", c.id, r.lhs, r.rhs, r.slack, r.holds());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdlReport {
    /// `J(π') - J(π)`.
    pub difference: f64,
    /// `(1/(1-γ)) E_{s∼d^{π'}} E_{a∼π'}[A^π(s, a)]`.
    pub advantage_term: f64,
    pub residual: f64,
}

/// Both sides of the performance difference identity.
pub fn verify_performance_difference(
    m: &TabularMdp,
    pi: &MemorylessPolicy,
    pi_prime: &MemorylessPolicy,
) -> Result<PdlReport> {
    let base = value_bundle(m, pi)?;
    let other = evaluate(m, pi_prime)?;
    let j = crate::mdp::dot(m.initial(), &base.state_values);
    let mut adv = 0.0;
    for (s, &d) in other.occupancy.iter().enumerate() {
        let e: f64 = (0..m.num_actions()).map(|a| pi_prime.prob(s, a) * base.advantage(s, a)).sum();
        adv += d * e;
    }
    let advantage_term = adv / (1.0 - m.discount());
    let difference = other.ret - j;
    Ok(PdlReport {
        difference,
        advantage_term,
        residual: (difference - advantage_term).abs(),
    })
}

/// Random `(M, π, π')` triples.
pub fn pdl_suite(count: usize, seed: u64) -> Result<Vec<PdlReport>> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let n = g.gen_range(2..=8);
            let na = g.gen_range(2..=4);
            let gamma = g.gen_range(0.1..0.99);
            let m = random_mdp_with(&mut g, n, na, gamma);
            let pi = random_policy_with(&mut g, n, na);
            let pi_prime = random_policy_with(&mut g, n, na);
            verify_performance_difference(&m, &pi, &pi_prime)
        })
        .collect()
}
