//! Belief-state planning for the epistemic POMDP.
//!
//! The agent observes the member's state and the reward, so its sufficient
//! statistic is the posterior over members given the history. Planning runs
//! finite-horizon value iteration over the belief tree reachable from the
//! prior, merging nodes whose beliefs agree to 1e-9.

use std::collections::HashMap;

use super::Posterior;
use crate::error::{Error, Result};

pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;

const BELIEF_QUANTUM: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNode {
    pub belief: Vec<f64>,
    pub obs_state: usize,
    pub depth: usize,
}

impl BeliefNode {
    fn key(&self) -> NodeKey {
        NodeKey {
            belief: self.belief.iter().map(|b| (b * BELIEF_QUANTUM).round() as i64).collect(),
            obs_state: self.obs_state,
            depth: self.depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct NodeKey {
    belief: Vec<i64>,
    obs_state: usize,
    depth: usize,
}

/// Bayes rule on `(action, reward, next_state)`. Rewards are matched exactly
/// against each member's reward table.
pub fn belief_update(
    node: &BeliefNode,
    p: &Posterior,
    action: usize,
    reward: f64,
    next_state: usize,
) -> Result<BeliefNode> {
    if node.belief.len() != p.len() {
        return Err(Error::ShapeMismatch(format!(
            "belief over {} members, posterior has {}",
            node.belief.len(),
            p.len()
        )));
    }
    if action >= p.num_actions() || next_state >= p.num_states() || node.obs_state >= p.num_states() {
        return Err(Error::ShapeMismatch("action or state index out of range".into()));
    }
    let s = node.obs_state;
    let mut post: Vec<f64> = node
        .belief
        .iter()
        .zip(p.mdps())
        .map(|(&b, m)| {
            if b == 0.0 || m.reward(s, action) != reward {
                0.0
            } else {
                b * m.transition_prob(s, action, next_state)
            }
        })
        .collect();
    let total: f64 = post.iter().sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation {
            action,
            reward,
            next_state,
        });
    }
    post.iter_mut().for_each(|b| *b /= total);
    Ok(BeliefNode {
        belief: post,
        obs_state: next_state,
        depth: node.depth + 1,
    })
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub node: BeliefNode,
    /// Optimal expected discounted reward over the remaining horizon.
    pub value: f64,
    /// `None` when no decision matters (every supported member is terminal).
    pub action: Option<usize>,
}

/// Optimal history-dependent behavior up to a fixed horizon.
#[derive(Debug, Clone)]
pub struct BeliefTreePolicy {
    nodes: Vec<TreeNode>,
    index: HashMap<NodeKey, usize>,
    /// `(initial observation, probability, node index)`.
    roots: Vec<(usize, f64, usize)>,
    pub horizon: usize,
    /// Bayes-optimal expected return over the horizon.
    pub value: f64,
    /// `γ^H r_max / (1 - γ)`: how far the infinite-horizon optimum can exceed `value`.
    pub truncation_bias: f64,
}

impl BeliefTreePolicy {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.roots.iter().map(move |&(_, _, i)| &self.nodes[i])
    }

    pub fn lookup(&self, node: &BeliefNode) -> Option<&TreeNode> {
        self.index.get(&node.key()).map(|&i| &self.nodes[i])
    }

    pub fn action(&self, node: &BeliefNode) -> Option<usize> {
        self.lookup(node).and_then(|n| n.action)
    }

    /// Root node reached after observing `state` at time 0.
    pub fn root(&self, state: usize) -> Option<&TreeNode> {
        self.roots
            .iter()
            .find(|&&(s, _, _)| s == state)
            .map(|&(_, _, i)| &self.nodes[i])
    }
}

struct Planner<'a> {
    posterior: &'a Posterior,
    horizon: usize,
    budget: usize,
    nodes: Vec<TreeNode>,
    index: HashMap<NodeKey, usize>,
}

struct Outcome {
    reward_bits: u64,
    next_state: usize,
    prob: f64,
    belief: Vec<f64>,
}

impl Planner<'_> {
    fn solve(&mut self, node: BeliefNode) -> Result<f64> {
        let key = node.key();
        if let Some(&i) = self.index.get(&key) {
            return Ok(self.nodes[i].value);
        }
        if self.nodes.len() >= self.budget {
            return Err(Error::NodeBudgetExceeded { budget: self.budget });
        }
        let p = self.posterior;
        let s = node.obs_state;
        let support_terminal = node
            .belief
            .iter()
            .zip(p.mdps())
            .all(|(&b, m)| b == 0.0 || m.is_terminal(s));
        let (value, action) = if support_terminal {
            (0.0, None)
        } else {
            let gamma = p.discount();
            let mut best = f64::NEG_INFINITY;
            let mut best_action = 0;
            for a in 0..p.num_actions() {
                let mut q = 0.0;
                let mut outcomes: Vec<Outcome> = Vec::new();
                for (i, (&b, m)) in node.belief.iter().zip(p.mdps()).enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let r = m.reward(s, a);
                    q += b * r;
                    for (next, &t) in m.transition_row(s, a).iter().enumerate() {
                        if t == 0.0 {
                            continue;
                        }
                        let bits = r.to_bits();
                        let o = match outcomes
                            .iter_mut()
                            .position(|o| o.reward_bits == bits && o.next_state == next)
                        {
                            Some(k) => &mut outcomes[k],
                            None => {
                                outcomes.push(Outcome {
                                    reward_bits: bits,
                                    next_state: next,
                                    prob: 0.0,
                                    belief: vec![0.0; p.len()],
                                });
                                outcomes.last_mut().unwrap()
                            }
                        };
                        o.prob += b * t;
                        o.belief[i] += b * t;
                    }
                }
                if node.depth + 1 < self.horizon {
                    for o in outcomes {
                        let belief = o.belief.iter().map(|x| x / o.prob).collect();
                        let child = BeliefNode {
                            belief,
                            obs_state: o.next_state,
                            depth: node.depth + 1,
                        };
                        q += gamma * o.prob * self.solve(child)?;
                    }
                }
                if q > best + 1e-12 {
                    best = q;
                    best_action = a;
                }
            }
            (best, Some(best_action))
        };
        self.index.insert(key, self.nodes.len());
        self.nodes.push(TreeNode {
            node,
            value,
            action,
        });
        Ok(value)
    }
}

/// Exact finite-horizon Bayes-optimal planning in the epistemic POMDP.
pub fn bayes_optimal_memory_policy(
    p: &Posterior,
    horizon: usize,
    node_budget: usize,
) -> Result<BeliefTreePolicy> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut planner = Planner {
        posterior: p,
        horizon,
        budget: node_budget,
        nodes: Vec::new(),
        index: HashMap::new(),
    };
    let mut roots = Vec::new();
    let mut value = 0.0;
    for s in 0..p.num_states() {
        let joint: Vec<f64> = p
            .mdps()
            .iter()
            .zip(p.weights())
            .map(|(m, w)| w * m.initial()[s])
            .collect();
        let prob: f64 = joint.iter().sum();
        if prob <= 0.0 {
            continue;
        }
        let node = BeliefNode {
            belief: joint.iter().map(|x| x / prob).collect(),
            obs_state: s,
            depth: 0,
        };
        let key = node.key();
        value += prob * planner.solve(node)?;
        roots.push((s, prob, planner.index[&key]));
    }
    let gamma = p.discount();
    Ok(BeliefTreePolicy {
        truncation_bias: gamma.powi(horizon as i32) * p.r_max() / (1.0 - gamma),
        nodes: planner.nodes,
        index: planner.index,
        roots,
        horizon,
        value,
    })
}
