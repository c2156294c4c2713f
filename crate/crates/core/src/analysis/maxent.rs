//! The one-step bandit and its goal-action posterior: the softmax of the
//! bandit rewards is the optimal memoryless policy as `γ → 1`.

use rand::Rng;

use crate::epistemic::{epistemic_return, optimal_memoryless_policy};
use crate::error::{Error, Result};
use crate::mdp::MemorylessPolicy;
use crate::random::rng;
use crate::worlds::{classification_optimal_memoryless, make_maxent_bandit, softmax};

/// Close enough to 1 that the water-filling optimum is within `1e-6` of
/// the `√p` rule.
pub const MAXENT_DISCOUNT: f64 = 1.0 - 1e-6;
const MAX_ARMS: usize = 10;
const EQUALITY_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-4;
const RESTARTS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntReport {
    pub softmax: Vec<f64>,
    /// `√w_k / Σ_j √w_j` for the posterior weights `w`.
    pub sqrt_policy: Vec<f64>,
    pub max_abs_diff: f64,
    /// Epistemic return of the softmax policy at `MAXENT_DISCOUNT`.
    pub closed_form_value: f64,
    /// Best return found by the numeric memoryless optimizer, when run.
    pub optimizer_value: Option<f64>,
}

impl MaxEntReport {
    pub fn passes(&self) -> bool {
        self.max_abs_diff <= EQUALITY_TOL
            && self.optimizer_value.is_none_or(|v| v <= self.closed_form_value + OPTIMALITY_TOL)
    }
}

/// Compares `softmax(r)` with the `√p` rule on the posterior weighted by
/// `softmax(2r)`, optionally confirming optimality numerically.
pub fn maxent_equivalence_check(rewards: &[f64], run_optimizer: bool) -> Result<MaxEntReport> {
    if rewards.len() > MAX_ARMS {
        return Err(Error::InvalidParameter(format!("at most {MAX_ARMS} arms")));
    }
    let (_, posterior) = make_maxent_bandit(rewards, MAXENT_DISCOUNT)?;
    let soft = softmax(rewards);
    let sqrt_policy = classification_optimal_memoryless(posterior.weights(), 1.0)?;
    let max_abs_diff = soft.iter().zip(&sqrt_policy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let k = rewards.len();
    let mut probs = soft.clone();
    probs.extend(std::iter::repeat_n(1.0 / k as f64, k));
    let policy = MemorylessPolicy::new(2, k, probs)?;
    let closed_form_value = epistemic_return(&posterior, &policy)?;
    let optimizer_value = if run_optimizer {
        Some(optimal_memoryless_policy(&posterior, RESTARTS, 0)?.value)
    } else {
        None
    };
    Ok(MaxEntReport {
        softmax: soft,
        sqrt_policy,
        max_abs_diff,
        closed_form_value,
        optimizer_value,
    })
}

/// Random reward vectors with 2 to 10 arms and entries in `[-2, 2]`. The
/// optimizer check runs on the first `optimized` of them.
pub fn maxent_suite(count: usize, optimized: usize, seed: u64) -> Result<Vec<(Vec<f64>, MaxEntReport)>> {
    let mut g = rng(seed);
    (0..count)
        .map(|i| {
            let k = g.gen_range(2..=MAX_ARMS);
            let r: Vec<f64> = (0..k).map(|_| g.gen_range(-2.0..=2.0)).collect();
            let report = maxent_equivalence_check(&r, i < optimized)?;
            Ok((r, report))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rewards_give_uniform() {
        let r = maxent_equivalence_check(&[0.0; 4], true).unwrap();
        assert!(r.softmax.iter().chain(&r.sqrt_policy).all(|p| (p - 0.25).abs() < 1e-15));
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn log_two_gives_two_thirds() {
        let r = maxent_equivalence_check(&[2f64.ln(), 0.0], true).unwrap();
        for p in [&r.softmax, &r.sqrt_policy] {
            assert!((p[0] - 2.0 / 3.0).abs() < 1e-12 && (p[1] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn rejects_too_many_arms() {
        assert!(maxent_equivalence_check(&[0.0; 11], false).is_err());
        assert!(maxent_equivalence_check(&[], false).is_err());
    }
}
