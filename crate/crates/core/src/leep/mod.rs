//! Linked ensembles for the epistemic POMDP.
//!
//! Each member is a softmax-tabular policy trained on one bootstrap resample
//! of the training contexts, with a penalty on its divergence from the link
//! of all members. The link of the trained members is the deployed policy.

mod config;
mod gradient;
mod train;

pub use config::ConfigMap;
pub use gradient::{
    entropy_gradient, leep_gradient, regularized_gradient, regularized_objective, GradientResult,
    Regularizer,
};
pub use train::{
    generalization_report, train_baseline_pg, train_ensemble_noreg, train_leep, GeneralizationReport,
    LogRow, TrainConfig, TrainLog, TrainResult,
};

use crate::epistemic::BootstrapSample;
use crate::error::{Error, Result};
use crate::mdp::MemorylessPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxTabularPolicy {
    num_states: usize,
    num_actions: usize,
    logits: Vec<f64>,
}

impl SoftmaxTabularPolicy {
    /// All-zero logits: the uniform policy.
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        SoftmaxTabularPolicy {
            num_states,
            num_actions,
            logits: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_logits(num_states: usize, num_actions: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != num_states * num_actions {
            return Err(Error::ShapeMismatch(format!(
                "{} logits for a {num_states}x{num_actions} table",
                logits.len()
            )));
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("logits must be finite".into()));
        }
        Ok(SoftmaxTabularPolicy {
            num_states,
            num_actions,
            logits,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// `θ += step · direction`.
    pub fn ascend(&mut self, direction: &[f64], step: f64) {
        debug_assert_eq!(direction.len(), self.logits.len());
        self.logits.iter_mut().zip(direction).for_each(|(t, g)| *t += step * g);
    }

    pub fn policy(&self) -> MemorylessPolicy {
        let na = self.num_actions;
        let mut probs = Vec::with_capacity(self.logits.len());
        for row in self.logits.chunks_exact(na) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let start = probs.len();
            probs.extend(row.iter().map(|x| (x - m).exp()));
            let sum: f64 = probs[start..].iter().sum();
            probs[start..].iter_mut().for_each(|p| *p /= sum);
        }
        MemorylessPolicy::from_probs_unchecked(self.num_states, na, probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// Normalized pointwise maximum.
    Max,
    /// Pointwise mean.
    Avg,
}

impl Link {
    pub fn apply(self, members: &[MemorylessPolicy]) -> Result<MemorylessPolicy> {
        match self {
            Link::Max => link_max(members),
            Link::Avg => link_avg(members),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Max => "max",
            Link::Avg => "avg",
        }
    }
}

impl std::str::FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Link::Max),
            "avg" => Ok(Link::Avg),
            other => Err(Error::InvalidParameter(format!("unknown link '{other}'"))),
        }
    }
}

fn check_members(members: &[MemorylessPolicy]) -> Result<(usize, usize)> {
    let first = members.first().ok_or(Error::Empty("link needs at least one member"))?;
    let shape = (first.num_states(), first.num_actions());
    if members.iter().any(|m| (m.num_states(), m.num_actions()) != shape) {
        return Err(Error::ShapeMismatch("ensemble members differ in shape".into()));
    }
    Ok(shape)
}

/// Rows on which every member agrees are passed through untouched, so
/// `f(π, ..., π) = π` holds bit for bit.
fn agree(members: &[MemorylessPolicy], s: usize) -> bool {
    members[1..].iter().all(|m| m.row(s) == members[0].row(s))
}

/// `f(a|s) = max_i π_i(a|s) / Σ_b max_i π_i(b|s)`.
pub fn link_max(members: &[MemorylessPolicy]) -> Result<MemorylessPolicy> {
    let (n, na) = check_members(members)?;
    let mut probs = members[0].probs().to_vec();
    for m in &members[1..] {
        probs.iter_mut().zip(m.probs()).for_each(|(p, q)| *p = p.max(*q));
    }
    for (s, row) in probs.chunks_exact_mut(na).enumerate() {
        if !agree(members, s) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    Ok(MemorylessPolicy::from_probs_unchecked(n, na, probs))
}

/// `f(a|s) = (1/n) Σ_i π_i(a|s)`.
pub fn link_avg(members: &[MemorylessPolicy]) -> Result<MemorylessPolicy> {
    let (n, na) = check_members(members)?;
    let k = members.len() as f64;
    let mut probs = members[0].probs().to_vec();
    for (s, row) in probs.chunks_exact_mut(na).enumerate() {
        if !agree(members, s) {
            for (a, p) in row.iter_mut().enumerate() {
                *p = members.iter().map(|m| m.prob(s, a)).sum::<f64>() / k;
            }
        }
    }
    Ok(MemorylessPolicy::from_probs_unchecked(n, na, probs))
}

/// Members, the bootstrap resample each trains on, and the link tying them.
#[derive(Debug, Clone)]
pub struct PolicyEnsemble {
    pub members: Vec<SoftmaxTabularPolicy>,
    pub bootstrap: Vec<BootstrapSample>,
    pub link: Link,
    pub alpha: f64,
}

impl PolicyEnsemble {
    pub fn new(
        members: Vec<SoftmaxTabularPolicy>,
        bootstrap: Vec<BootstrapSample>,
        link: Link,
        alpha: f64,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("ensemble needs at least one member"));
        }
        if members.len() != bootstrap.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} members but {} bootstrap samples",
                members.len(),
                bootstrap.len()
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must be nonnegative")));
        }
        check_members(&members.iter().map(SoftmaxTabularPolicy::policy).collect::<Vec<_>>())?;
        Ok(PolicyEnsemble {
            members,
            bootstrap,
            link,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn policies(&self) -> Vec<MemorylessPolicy> {
        self.members.iter().map(SoftmaxTabularPolicy::policy).collect()
    }

    pub fn combined(&self) -> MemorylessPolicy {
        self.link.apply(&self.policies()).expect("members validated at construction")
    }
}
