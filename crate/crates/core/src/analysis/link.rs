//! Joint maximization of the linked-ensemble objective on tiny posteriors,
//! compared against exhaustive search over memoryless policies.

use rand::Rng;

use super::bound::joint_objective;
use crate::epistemic::{decision_states, epistemic_gradient, epistemic_return, grid_search_memoryless, Posterior};
use crate::error::{Error, Result};
use crate::leep::{Link, SoftmaxTabularPolicy};
use crate::mdp::{evaluate, optimal_deterministic_policy, MemorylessPolicy};
use crate::random::{random_mdp_with, rng};
use crate::worlds::{make_disjoint_support, make_stay_switch};

/// Allowed shortfall of the linked ensemble against the grid optimum.
pub const LINK_TOL: f64 = 1e-2;
const GRID_RESOLUTION: usize = 100;
const MAX_MEMBERS: usize = 3;
const CORNER_LOGIT: f64 = 4.0;
const FD_STEP: f64 = 1e-6;
const SMOOTHING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerBudget {
    /// Random starts on top of the uniform and corner starts.
    pub random_starts: usize,
    /// Ascent steps per start and stage.
    pub steps: usize,
    pub seed: u64,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            random_starts: 4,
            steps: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkOptimalityReport {
    /// Joint objective at the best members found.
    pub objective: f64,
    /// Epistemic return of their link.
    pub ensemble_value: f64,
    pub grid_value: f64,
    pub members: Vec<MemorylessPolicy>,
    pub combined: MemorylessPolicy,
}

impl LinkOptimalityReport {
    pub fn passes(&self) -> bool {
        self.ensemble_value >= self.grid_value - LINK_TOL
    }
}

struct Problem<'a> {
    p: &'a Posterior,
    link: Link,
    alpha: f64,
    n: usize,
    na: usize,
}

impl Problem<'_> {
    fn policies(&self, theta: &[f64]) -> Vec<MemorylessPolicy> {
        let size = self.n * self.na;
        theta
            .chunks_exact(size)
            .map(|c| SoftmaxTabularPolicy::from_logits(self.n, self.na, c.to_vec()).expect("finite logits").policy())
            .collect()
    }

    fn exact(&self, theta: &[f64]) -> Result<f64> {
        Ok(joint_objective(&self.policies(theta), self.link, self.alpha, self.p)?.value)
    }

    /// The objective with `√KL` replaced by `√(KL + η) - √η`, which is
    /// differentiable where members agree.
    fn smoothed(&self, theta: &[f64]) -> Result<f64> {
        let members = self.policies(theta);
        let f = self.link.apply(&members)?;
        let mut mean = 0.0;
        let mut penalty = 0.0;
        for (m, pi) in self.p.mdps().iter().zip(&members) {
            let ev = evaluate(m, pi)?;
            mean += ev.ret;
            for (s, &d) in ev.occupancy.iter().enumerate() {
                if d > 0.0 && !m.is_terminal(s) {
                    let kl: f64 = pi
                        .row(s)
                        .iter()
                        .zip(f.row(s))
                        .filter(|(a, _)| **a > 0.0)
                        .map(|(a, b)| a * (a / b).ln())
                        .sum();
                    penalty += d * ((kl.max(0.0) + SMOOTHING).sqrt() - SMOOTHING.sqrt());
                }
            }
        }
        Ok(mean / self.p.len() as f64 - self.alpha * penalty)
    }

    fn fd_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut x = theta.to_vec();
        let mut g = vec![0.0; theta.len()];
        for k in 0..theta.len() {
            x[k] = theta[k] + FD_STEP;
            let up = self.smoothed(&x)?;
            x[k] = theta[k] - FD_STEP;
            let down = self.smoothed(&x)?;
            x[k] = theta[k];
            g[k] = (up - down) / (2.0 * FD_STEP);
        }
        Ok(g)
    }
}

/// Adaptive-step ascent accepting only improvements of `value`.
fn ascend<V, G>(mut theta: Vec<f64>, steps: usize, value: V, grad: G) -> Result<(Vec<f64>, f64)>
where
    V: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut current = value(&theta)?;
    let mut eta = 1.0;
    let mut g = grad(&theta)?;
    for _ in 0..steps {
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-14 || eta < 1e-14 {
            break;
        }
        let trial: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t + eta * d / norm).collect();
        let v = value(&trial)?;
        if v > current {
            theta = trial;
            current = v;
            eta *= 1.5;
            g = grad(&theta)?;
        } else {
            eta *= 0.5;
        }
    }
    Ok((theta, current))
}

/// Softmax chain rule applied to the gradient in probability space.
fn tied_gradient(p: &Posterior, n: usize, na: usize, theta: &[f64]) -> Result<Vec<f64>> {
    let pi = SoftmaxTabularPolicy::from_logits(n, na, theta.to_vec())?.policy();
    let g = epistemic_gradient(p, &pi)?;
    let mut out = vec![0.0; n * na];
    for s in 0..n {
        let row = pi.row(s);
        let mean: f64 = row.iter().zip(&g[s * na..]).map(|(a, b)| a * b).sum();
        for b in 0..na {
            out[s * na + b] = row[b] * (g[s * na + b] - mean);
        }
    }
    Ok(out)
}

fn corner_starts(states: &[usize], n: usize, na: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = na.pow(states.len() as u32);
    for code in 0..total {
        let mut theta = vec![0.0; n * na];
        let mut c = code;
        for &s in states {
            theta[s * na + c % na] = CORNER_LOGIT;
            c /= na;
        }
        out.push(theta);
    }
    out
}

/// Maximizes the joint objective over all member logits, first with members
/// tied to one policy and then freely, and compares the epistemic return of
/// the linked result with the grid optimum.
pub fn verify_link_optimality(
    p: &Posterior,
    link: Link,
    alpha: f64,
    budget: OptimizerBudget,
) -> Result<LinkOptimalityReport> {
    let (n, na) = (p.num_states(), p.num_actions());
    let states = decision_states(p);
    if p.len() > MAX_MEMBERS || states.len() > 2 || na > 3 {
        return Err(Error::InvalidParameter(format!(
            "link optimality check supports at most {MAX_MEMBERS} members, 2 decision states and 3 actions"
        )));
    }
    if budget.steps == 0 {
        return Err(Error::InvalidParameter("optimizer needs at least one step".into()));
    }
    let prob = Problem { p, link, alpha, n, na };
    let k = p.len();
    let size = n * na;

    let mut starts = vec![vec![0.0; size]];
    starts.extend(corner_starts(&states, n, na));
    let mut g = rng(budget.seed);
    for _ in 0..budget.random_starts {
        starts.push((0..size).map(|_| g.gen_range(-2.0..2.0)).collect());
    }
    let mut tied_best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (theta, v) = ascend(
            start,
            budget.steps,
            |t| {
                let pi = SoftmaxTabularPolicy::from_logits(n, na, t.to_vec())?.policy();
                epistemic_return(p, &pi)
            },
            |t| tied_gradient(p, n, na, t),
        )?;
        if tied_best.as_ref().is_none_or(|b| v > b.1) {
            tied_best = Some((theta, v));
        }
    }
    let tied = tied_best.expect("at least the uniform start").0;

    // Untied starts: the tied optimum replicated, and each member at its own
    // sample's optimal policy.
    let mut joint_starts = vec![tied.repeat(k)];
    let mut own = Vec::with_capacity(k * size);
    for m in p.mdps() {
        let opt = optimal_deterministic_policy(m);
        for s in 0..n {
            for a in 0..na {
                own.push(if opt.actions[s] == a { CORNER_LOGIT } else { 0.0 });
            }
        }
    }
    joint_starts.push(own);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in joint_starts {
        let (theta, v) = ascend(start, budget.steps, |t| prob.exact(t), |t| prob.fd_gradient(t))?;
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((theta, v));
        }
    }
    let (theta, objective) = best.expect("two joint starts");
    let members = prob.policies(&theta);
    let combined = link.apply(&members)?;
    let ensemble_value = epistemic_return(p, &combined)?;
    let grid_value = grid_search_memoryless(p, GRID_RESOLUTION)?.value;
    Ok(LinkOptimalityReport {
        objective,
        ensemble_value,
        grid_value,
        members,
        combined,
    })
}

#[derive(Debug, Clone)]
pub struct LinkCase {
    pub id: String,
    pub posterior: Posterior,
}

/// Ten tiny uniform posteriors: a point mass, the stay/switch pair at equal
/// weights, the disjoint-support pair and seven random ones.
pub fn link_suite(seed: u64) -> Result<Vec<LinkCase>> {
    let mut g = rng(seed);
    let mut out = vec![
        LinkCase {
            id: "point".into(),
            posterior: Posterior::point(random_mdp_with(&mut g, 2, 2, 0.9))?,
        },
        LinkCase {
            id: "stay-switch".into(),
            posterior: make_stay_switch(0.5, 20.0, 0.9)?,
        },
        LinkCase {
            id: "disjoint".into(),
            posterior: make_disjoint_support(0.9)?,
        },
    ];
    for k in 0..7 {
        let members = g.gen_range(2..=MAX_MEMBERS);
        let na = g.gen_range(2..=3);
        let gamma = if g.gen_bool(0.5) { 0.5 } else { 0.9 };
        let mdps = (0..members).map(|_| random_mdp_with(&mut g, 2, na, gamma)).collect();
        out.push(LinkCase {
            id: format!("random-{k}"),
            posterior: Posterior::uniform(mdps)?,
        });
    }
    Ok(out)
}
