//! Finite posteriors over MDPs and the epistemic POMDP they induce.
//!
//! A [`Posterior`] is a weighted list of MDPs over a shared state and action
//! space. Each episode of the epistemic POMDP draws one member, keeps it fixed
//! for the whole episode, and shows the agent only the member's state.

mod belief;
mod context;
mod memoryless;

pub use belief::{
    bayes_optimal_memory_policy, belief_update, BeliefNode, BeliefTreePolicy, TreeNode,
    DEFAULT_NODE_BUDGET,
};
pub use context::{
    bootstrap_posterior, BootstrapSample, ContextEpisode, ContextId, ContextSet, ContextualMdp,
};
pub use memoryless::{
    decision_states, epistemic_gradient, grid_search_memoryless, optimal_memoryless_policy,
    project_to_simplex, MemorylessSolution, GRID_MAX_ACTIONS, GRID_MAX_STATES,
};

use crate::error::{Error, Result};
use crate::mdp::{check_distribution, policy_return, validate_mdp, MemorylessPolicy, MdpBuilder, TabularMdp};

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    mdps: Vec<TabularMdp>,
    weights: Vec<f64>,
}

impl Posterior {
    pub fn new(mdps: Vec<TabularMdp>, weights: Vec<f64>) -> Result<Self> {
        let first = mdps.first().ok_or(Error::Empty("posterior has no members"))?;
        if mdps.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} members but {} weights",
                mdps.len(),
                weights.len()
            )));
        }
        check_distribution(&weights)?;
        for (i, m) in mdps.iter().enumerate() {
            if !m.same_shape(first) {
                return Err(Error::ShapeMismatch(format!("member {i} has a different shape")));
            }
            if m.discount() != first.discount() {
                return Err(Error::InvalidParameter(format!("member {i} has a different discount")));
            }
            let report = validate_mdp(m);
            if !report.is_valid() {
                return Err(Error::InvalidMdp(report.violations));
            }
        }
        Ok(Posterior { mdps, weights })
    }

    pub fn uniform(mdps: Vec<TabularMdp>) -> Result<Self> {
        let n = mdps.len();
        Self::new(mdps, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn point(mdp: TabularMdp) -> Result<Self> {
        Self::new(vec![mdp], vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.mdps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mdps.is_empty()
    }

    pub fn mdps(&self) -> &[TabularMdp] {
        &self.mdps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_states(&self) -> usize {
        self.mdps[0].num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.mdps[0].num_actions()
    }

    pub fn discount(&self) -> f64 {
        self.mdps[0].discount()
    }

    /// `max_{i,s,a} |r_i(s, a)|`.
    pub fn r_max(&self) -> f64 {
        self.mdps.iter().map(TabularMdp::r_max).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= 1e-12)
    }

    /// The mixture `λ·self + (1-λ)·other`, as a posterior over both member lists.
    pub fn mix(&self, other: &Posterior, lambda: f64) -> Result<Posterior> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixing weight {lambda}")));
        }
        let mdps = self.mdps.iter().chain(&other.mdps).cloned().collect();
        let weights = self
            .weights
            .iter()
            .map(|w| lambda * w)
            .chain(other.weights.iter().map(|w| (1.0 - lambda) * w))
            .collect();
        Posterior::new(mdps, weights)
    }
}

/// Expected return when the MDP is drawn from the posterior at the start of
/// each episode: `Σ_i w_i J_{M_i}(π)`.
pub fn epistemic_return(p: &Posterior, pi: &MemorylessPolicy) -> Result<f64> {
    let mut total = 0.0;
    for (m, w) in p.mdps.iter().zip(&p.weights) {
        total += w * policy_return(m, pi)?;
    }
    Ok(total)
}

/// The epistemic POMDP as an explicit model: hidden state `(member, state)`,
/// observation `state`, and dynamics that never change the member.
#[derive(Debug, Clone)]
pub struct EpistemicPomdp {
    posterior: Posterior,
}

impl EpistemicPomdp {
    pub fn new(posterior: Posterior) -> Self {
        EpistemicPomdp { posterior }
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn num_hidden_states(&self) -> usize {
        self.posterior.len() * self.posterior.num_states()
    }

    pub fn hidden_state(&self, member: usize, state: usize) -> usize {
        member * self.posterior.num_states() + state
    }

    /// `(member, state)` of a hidden index.
    pub fn split(&self, hidden: usize) -> (usize, usize) {
        let n = self.posterior.num_states();
        (hidden / n, hidden % n)
    }

    pub fn observation(&self, hidden: usize) -> usize {
        self.split(hidden).1
    }

    /// `ρ^po((M, s)) = P(M | D) ρ_M(s)`.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let p = &self.posterior;
        p.mdps
            .iter()
            .zip(&p.weights)
            .flat_map(|(m, w)| m.initial().iter().map(move |r| w * r))
            .collect()
    }

    pub fn transition(&self, hidden: usize, action: usize, next_hidden: usize) -> f64 {
        let (i, s) = self.split(hidden);
        let (j, next) = self.split(next_hidden);
        if i != j {
            0.0
        } else {
            self.posterior.mdps[i].transition_prob(s, action, next)
        }
    }

    pub fn reward(&self, hidden: usize, action: usize) -> f64 {
        let (i, s) = self.split(hidden);
        self.posterior.mdps[i].reward(s, action)
    }

    /// The fully observed MDP over hidden states.
    pub fn underlying_mdp(&self) -> Result<TabularMdp> {
        let p = &self.posterior;
        let na = p.num_actions();
        let total = self.num_hidden_states();
        let mut b = MdpBuilder::new(total, na, p.discount());
        for (i, m) in p.mdps.iter().enumerate() {
            for s in 0..m.num_states() {
                let h = self.hidden_state(i, s);
                if m.is_terminal(s) {
                    b.terminal(h);
                }
                for a in 0..na {
                    b.reward(h, a, m.reward(s, a));
                    for (next, &t) in m.transition_row(s, a).iter().enumerate() {
                        if t != 0.0 {
                            b.transition(h, a, self.hidden_state(i, next), t);
                        }
                    }
                }
            }
        }
        for (h, r) in self.initial_distribution().into_iter().enumerate() {
            b.initial(h, r);
        }
        b.build()
    }

    /// Memoryless observation policy as a policy on hidden states.
    pub fn lift_policy(&self, pi: &MemorylessPolicy) -> MemorylessPolicy {
        let na = pi.num_actions();
        let probs = (0..self.num_hidden_states())
            .flat_map(|h| pi.row(self.observation(h)).to_vec())
            .collect();
        MemorylessPolicy::from_probs_unchecked(self.num_hidden_states(), na, probs)
    }
}
