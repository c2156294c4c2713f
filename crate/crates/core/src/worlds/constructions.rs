//! Small posteriors where Bayes-optimal memoryless behavior departs from
//! every member's optimal behavior.

use crate::epistemic::Posterior;
use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, MemorylessPolicy, TabularMdp};

const STAY: usize = 0;

fn check_discount(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("discount {gamma} must lie in (0, 1)")));
    }
    Ok(())
}

fn two_state(num_actions: usize, gamma: f64, rewards: &[f64]) -> Result<TabularMdp> {
    let mut b = MdpBuilder::new(2, num_actions, gamma);
    b.initial(0, 1.0);
    for s in 0..2 {
        b.deterministic(s, STAY, s);
        for a in 1..num_actions {
            b.deterministic(s, a, 1 - s).reward(s, a, rewards[a]);
        }
    }
    b.build()
}

/// Two states, actions stay (0) and switch (1). Switching pays +1 in `M_A`
/// and `-c` in `M_B`; the posterior is `(1 - ε, ε)`.
pub fn make_stay_switch(epsilon: f64, c: f64, gamma: f64) -> Result<Posterior> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("penalty {c} must be positive")));
    }
    check_discount(gamma)?;
    let a = two_state(2, gamma, &[0.0, 1.0])?;
    let b = two_state(2, gamma, &[0.0, -c])?;
    Posterior::new(vec![a, b], vec![1.0 - epsilon, epsilon])
}

/// Two states, actions stay, switch 1 and switch 2, equally weighted members
/// with switch rewards `(+1, -2)` and `(-2, +1)`.
pub fn make_disjoint_support(gamma: f64) -> Result<Posterior> {
    check_discount(gamma)?;
    let a = two_state(3, gamma, &[0.0, 1.0, -2.0])?;
    let b = two_state(3, gamma, &[0.0, -2.0, 1.0])?;
    Posterior::uniform(vec![a, b])
}

pub const MAX_TREE_DEPTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalSide {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeSpec {
    pub depth: usize,
    pub discount: f64,
    pub goal_side: GoalSide,
}

impl TreeSpec {
    pub fn new(depth: usize, discount: f64) -> Self {
        TreeSpec {
            depth,
            discount,
            goal_side: GoalSide::Left,
        }
    }

    fn check(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_TREE_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "tree depth {} outside 1..={MAX_TREE_DEPTH}",
                self.depth
            )));
        }
        check_discount(self.discount)
    }

    /// Heap-ordered nodes `0..2^{n+1}-1` followed by one terminal state.
    pub fn num_states(&self) -> usize {
        (1 << (self.depth + 1)) - 1 + 1
    }

    pub fn terminal(&self) -> usize {
        self.num_states() - 1
    }

    pub fn goal_leaf(&self, side: GoalSide) -> usize {
        let first_leaf = (1 << self.depth) - 1;
        match side {
            GoalSide::Left => first_leaf,
            GoalSide::Right => 2 * first_leaf,
        }
    }

    /// `γ̄ = γ^n`, the discount over one descent.
    pub fn gamma_bar(&self) -> f64 {
        self.discount.powi(self.depth as i32)
    }
}

/// A depth-`n` binary tree: action 0 descends left, 1 descends right. A step
/// into the goal leaf enters it, and any action there pays 1 and ends the
/// episode; a step into any other leaf returns to the root.
pub fn make_tree_mdp(spec: &TreeSpec) -> Result<TabularMdp> {
    spec.check()?;
    let n = spec.num_states();
    let terminal = spec.terminal();
    let goal = spec.goal_leaf(spec.goal_side);
    let first_leaf = (1 << spec.depth) - 1;
    let mut b = MdpBuilder::new(n, 2, spec.discount);
    b.initial(0, 1.0).terminal(terminal);
    for k in 0..first_leaf {
        for a in 0..2 {
            let child = 2 * k + 1 + a;
            let next = if child < first_leaf || child == goal { child } else { 0 };
            b.deterministic(k, a, next);
        }
    }
    for leaf in first_leaf..terminal {
        for a in 0..2 {
            if leaf == goal {
                b.deterministic(leaf, a, terminal).reward(leaf, a, 1.0);
            } else {
                b.deterministic(leaf, a, 0);
            }
        }
    }
    b.build()
}

/// Equal-weight posterior over the left-goal and right-goal trees.
pub fn make_binary_tree(spec: &TreeSpec) -> Result<Posterior> {
    let left = make_tree_mdp(&TreeSpec {
        goal_side: GoalSide::Left,
        ..*spec
    })?;
    let right = make_tree_mdp(&TreeSpec {
        goal_side: GoalSide::Right,
        ..*spec
    })?;
    Posterior::uniform(vec![left, right])
}

/// Uniform at the root, then straight down the chosen side.
pub fn tree_reference_policy(spec: &TreeSpec) -> Result<MemorylessPolicy> {
    spec.check()?;
    let n = spec.num_states();
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        if k == 0 || k >= spec.terminal() {
            rows.push(vec![0.5, 0.5]);
            continue;
        }
        // The root's child on the path to `k` decides which side it is on.
        let mut top = k;
        while top > 2 {
            top = (top - 1) / 2;
        }
        rows.push(if top == 1 { vec![1.0, 0.0] } else { vec![0.0, 1.0] });
    }
    MemorylessPolicy::from_rows(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeReference {
    /// Bayes-optimal memoryless value `1 / (1 + 2(1 - γ̄)/γ̄)`.
    pub j_opt: f64,
    /// Uniform policy `1 / (1 + 2^n (1 - γ̄)/γ̄)`.
    pub j_unif: f64,
    /// Upper bound for policies with at least `β` mass on every action.
    pub j_stoch_bound: f64,
    /// `(1 - β)^{n-1}`.
    pub ratio_asymptote: f64,
    /// Best deterministic policy, `γ̄ / 2`: it solves one member and loops forever in the other.
    pub j_det: f64,
}

/// Closed forms only, so any depth is accepted.
pub fn binary_tree_reference(spec: &TreeSpec, beta: f64) -> Result<TreeReference> {
    if spec.depth == 0 {
        return Err(Error::InvalidParameter("tree depth must be at least 1".into()));
    }
    check_discount(spec.discount)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta {beta} must lie in (0, 1)")));
    }
    let g = spec.gamma_bar();
    let n = spec.depth as i32;
    let odds = (1.0 - g) / g;
    Ok(TreeReference {
        j_opt: 1.0 / (1.0 + 2.0 * odds),
        j_unif: 1.0 / (1.0 + 2f64.powi(n) * odds),
        j_stoch_bound: 1.0 / (1.0 + 2.0 * (1.0 / (1.0 - beta)).powi(n - 1) * odds),
        ratio_asymptote: (1.0 - beta).powi(n - 1),
        j_det: g / 2.0,
    })
}

/// `exp(x_k) / Σ_j exp(x_j)`, shifted for stability.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// The one-step bandit paying `r_k` for arm `k`, and the posterior over
/// goal-action MDPs `M_k` weighted by `softmax(2r)`. In `M_k`, arm `k` pays 0
/// and ends the episode while every other arm pays -1 and repeats.
pub fn make_maxent_bandit(rewards: &[f64], gamma: f64) -> Result<(TabularMdp, Posterior)> {
    let k = rewards.len();
    if k == 0 {
        return Err(Error::Empty("bandit needs at least one arm"));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidParameter("rewards must be finite".into()));
    }
    check_discount(gamma)?;
    let mut b = MdpBuilder::new(2, k, gamma);
    b.initial(0, 1.0).terminal(1);
    for (a, &r) in rewards.iter().enumerate() {
        b.deterministic(0, a, 1).reward(0, a, r);
    }
    let surrogate = b.build()?;
    let mdps = (0..k)
        .map(|goal| {
            let mut b = MdpBuilder::new(2, k, gamma);
            b.initial(0, 1.0).terminal(1);
            for a in 0..k {
                if a == goal {
                    b.deterministic(0, a, 1);
                } else {
                    b.deterministic(0, a, 0).reward(0, a, -1.0);
                }
            }
            b.build()
        })
        .collect::<Result<Vec<_>>>()?;
    let doubled: Vec<f64> = rewards.iter().map(|r| 2.0 * r).collect();
    Ok((surrogate, Posterior::new(mdps, softmax(&doubled))?))
}
