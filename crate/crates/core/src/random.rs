//! Seeded random instance generators for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::{MemorylessPolicy, TabularMdp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet sample (normalized exponentials).
pub fn random_distribution<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Dense random MDP: Dirichlet rows, rewards uniform in `[-1, 1]`.
pub fn random_mdp_with<R: Rng>(rng: &mut R, n: usize, na: usize, gamma: f64) -> TabularMdp {
    let mut transition = Vec::with_capacity(n * na * n);
    for _ in 0..n * na {
        transition.extend(random_distribution(rng, n));
    }
    let reward = (0..n * na).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let initial = random_distribution(rng, n);
    TabularMdp::new(n, na, transition, reward, gamma, initial, vec![false; n])
        .expect("random MDP is valid by construction")
}

pub fn random_mdp(seed: u64, n: usize, na: usize, gamma: f64) -> TabularMdp {
    random_mdp_with(&mut rng(seed), n, na, gamma)
}

pub fn random_policy_with<R: Rng>(rng: &mut R, n: usize, na: usize) -> MemorylessPolicy {
    let probs = (0..n).flat_map(|_| random_distribution(rng, na)).collect();
    MemorylessPolicy::from_probs_unchecked(n, na, probs)
}

pub fn random_policy(seed: u64, n: usize, na: usize) -> MemorylessPolicy {
    random_policy_with(&mut rng(seed), n, na)
}

/// Random deterministic policy.
pub fn random_deterministic_with<R: Rng>(rng: &mut R, n: usize, na: usize) -> MemorylessPolicy {
    let actions: Vec<usize> = (0..n).map(|_| rng.gen_range(0..na)).collect();
    MemorylessPolicy::deterministic(&actions, na)
}
