//! Contextual MDPs: a family of per-context MDPs whose states are mapped onto
//! a shared observation space, so one observation policy acts in every context.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use super::Posterior;
use crate::error::{Error, Result};
use crate::mdp::{evaluate, MemorylessPolicy, PolicyEvaluation, TabularMdp};
use crate::random::rng;

pub type ContextId = usize;

/// A set of distinct context identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSet {
    ids: Vec<ContextId>,
}

impl ContextSet {
    pub fn new(ids: Vec<ContextId>) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::InvalidParameter(format!("context {dup} listed twice")));
        }
        Ok(ContextSet { ids })
    }

    pub fn range(start: ContextId, end: ContextId) -> Self {
        ContextSet {
            ids: (start..end).collect(),
        }
    }

    pub fn ids(&self) -> &[ContextId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: ContextId) -> bool {
        self.ids.contains(&id)
    }
}

/// One bootstrap resample: a multiset of training contexts, kept in draw order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapSample {
    pub draws: Vec<ContextId>,
}

impl BootstrapSample {
    /// `(context, multiplicity)` in increasing context order.
    pub fn counts(&self) -> Vec<(ContextId, usize)> {
        let mut map = BTreeMap::new();
        for &id in &self.draws {
            *map.entry(id).or_insert(0usize) += 1;
        }
        map.into_iter().collect()
    }

    pub fn unique_fraction(&self) -> f64 {
        self.counts().len() as f64 / self.draws.len() as f64
    }

    /// Context weights of the mixture this sample defines.
    pub fn weights(&self) -> Vec<(ContextId, f64)> {
        let n = self.draws.len() as f64;
        self.counts().into_iter().map(|(id, k)| (id, k as f64 / n)).collect()
    }
}

/// `n` resamples of `train`, each of size `|train|`, drawn with replacement.
pub fn bootstrap_posterior(train: &ContextSet, n: usize, seed: u64) -> Result<Vec<BootstrapSample>> {
    if train.is_empty() {
        return Err(Error::Empty("bootstrap needs at least one training context"));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("bootstrap count must be at least 1".into()));
    }
    let mut g = rng(seed);
    let k = train.len();
    Ok((0..n)
        .map(|_| BootstrapSample {
            draws: (0..k).map(|_| train.ids[g.gen_range(0..k)]).collect(),
        })
        .collect())
}

/// A single context: its MDP and the observation seen in each state.
/// States mapped to `None` are terminal and carry no decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextEpisode {
    pub mdp: TabularMdp,
    pub observation: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct ContextualMdp {
    contexts: Vec<ContextEpisode>,
    num_observations: usize,
    num_actions: usize,
    discount: f64,
}

impl ContextualMdp {
    pub fn new(contexts: Vec<ContextEpisode>, num_observations: usize) -> Result<Self> {
        let first = contexts.first().ok_or(Error::Empty("contextual MDP has no contexts"))?;
        let (na, gamma) = (first.mdp.num_actions(), first.mdp.discount());
        for (c, ep) in contexts.iter().enumerate() {
            if ep.mdp.num_actions() != na || ep.mdp.discount() != gamma {
                return Err(Error::ShapeMismatch(format!("context {c} differs in actions or discount")));
            }
            if ep.observation.len() != ep.mdp.num_states() {
                return Err(Error::ShapeMismatch(format!("context {c} observation map length")));
            }
            for (s, o) in ep.observation.iter().enumerate() {
                match o {
                    Some(o) if *o >= num_observations => {
                        return Err(Error::ShapeMismatch(format!("context {c} state {s} observation {o}")))
                    }
                    None if !ep.mdp.is_terminal(s) => {
                        return Err(Error::InvalidParameter(format!(
                            "context {c} state {s} is unobserved but not terminal"
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(ContextualMdp {
            contexts,
            num_observations,
            num_actions: na,
            discount: gamma,
        })
    }

    /// Each member becomes a context observed through its own state index.
    pub fn from_posterior(p: &Posterior) -> Self {
        let contexts = p
            .mdps()
            .iter()
            .map(|m| ContextEpisode {
                observation: (0..m.num_states()).map(|s| (!m.is_terminal(s)).then_some(s)).collect(),
                mdp: m.clone(),
            })
            .collect();
        ContextualMdp {
            contexts,
            num_observations: p.num_states(),
            num_actions: p.num_actions(),
            discount: p.discount(),
        }
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn context(&self, id: ContextId) -> &ContextEpisode {
        &self.contexts[id]
    }

    pub fn contexts(&self) -> &[ContextEpisode] {
        &self.contexts
    }

    pub fn all(&self) -> ContextSet {
        ContextSet::range(0, self.len())
    }

    /// First `k` contexts and the rest.
    pub fn split(&self, k: usize) -> Result<(ContextSet, ContextSet)> {
        if k == 0 || k >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "train split {k} must leave both sides of {} contexts nonempty",
                self.len()
            )));
        }
        Ok((ContextSet::range(0, k), ContextSet::range(k, self.len())))
    }

    fn check_policy(&self, pi: &MemorylessPolicy) -> Result<()> {
        if pi.num_states() != self.num_observations || pi.num_actions() != self.num_actions {
            return Err(Error::ShapeMismatch(format!(
                "observation policy is {}x{}, contextual MDP is {}x{}",
                pi.num_states(),
                pi.num_actions(),
                self.num_observations,
                self.num_actions
            )));
        }
        Ok(())
    }

    fn check_id(&self, id: ContextId) -> Result<()> {
        if id >= self.len() {
            return Err(Error::InvalidParameter(format!("unknown context {id}")));
        }
        Ok(())
    }

    /// The observation policy pulled back to the states of one context.
    pub fn state_policy(&self, id: ContextId, pi: &MemorylessPolicy) -> Result<MemorylessPolicy> {
        self.check_policy(pi)?;
        self.check_id(id)?;
        let na = self.num_actions;
        let uniform = vec![1.0 / na as f64; na];
        let probs = self.contexts[id]
            .observation
            .iter()
            .flat_map(|o| match o {
                Some(o) => pi.row(*o).to_vec(),
                None => uniform.clone(),
            })
            .collect();
        Ok(MemorylessPolicy::from_probs_unchecked(
            self.contexts[id].mdp.num_states(),
            na,
            probs,
        ))
    }

    pub fn evaluate_context(&self, id: ContextId, pi: &MemorylessPolicy) -> Result<PolicyEvaluation> {
        let local = self.state_policy(id, pi)?;
        evaluate(&self.contexts[id].mdp, &local)
    }

    pub fn context_return(&self, id: ContextId, pi: &MemorylessPolicy) -> Result<f64> {
        Ok(self.evaluate_context(id, pi)?.ret)
    }

    /// Average return over a list of contexts; repeated ids count repeatedly.
    pub fn mean_return(&self, ids: &[ContextId], pi: &MemorylessPolicy) -> Result<f64> {
        if ids.is_empty() {
            return Err(Error::Empty("no contexts to evaluate"));
        }
        let mut total = 0.0;
        for &id in ids {
            total += self.context_return(id, pi)?;
        }
        Ok(total / ids.len() as f64)
    }

    /// One posterior-sample MDP: the mixture of contexts in a bootstrap draw.
    pub fn sample_return(&self, sample: &BootstrapSample, pi: &MemorylessPolicy) -> Result<f64> {
        let mut total = 0.0;
        for (id, w) in sample.weights() {
            total += w * self.context_return(id, pi)?;
        }
        Ok(total)
    }
}
