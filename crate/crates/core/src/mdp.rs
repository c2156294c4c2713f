//! Finite tabular MDPs, memoryless policies and exact evaluation.
//!
//! Everything here is a dense representation: transition tensors are stored
//! as `(state, action, next_state)` row-major and evaluation goes through a
//! direct LU solve of `(I - γ P_π) V = r_π`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Lu;

/// Tolerance used for every "sums to one" check.
pub const PROB_TOL: f64 = 1e-9;

/// Residual at which value iteration stops.
pub const VALUE_ITERATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Discount(f64),
    NonFinite { what: &'static str, index: usize },
    NegativeProbability { state: usize, action: usize, next_state: usize, value: f64 },
    RowSum { state: usize, action: usize, sum: f64 },
    NegativeInitial { state: usize, value: f64 },
    InitialSum(f64),
    TerminalNotAbsorbing { state: usize, action: usize },
    TerminalReward { state: usize, action: usize, reward: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Discount(g) => write!(f, "discount {g} outside [0, 1)"),
            Violation::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Violation::NegativeProbability { state, action, next_state, value } => write!(
                f,
                "negative transition probability {value} at ({state}, {action}, {next_state})"
            ),
            Violation::RowSum { state, action, sum } => {
                write!(f, "transition row ({state}, {action}) sums to {sum}")
            }
            Violation::NegativeInitial { state, value } => {
                write!(f, "negative initial probability {value} at state {state}")
            }
            Violation::InitialSum(s) => write!(f, "initial distribution sums to {s}"),
            Violation::TerminalNotAbsorbing { state, action } => {
                write!(f, "terminal state {state} does not self-loop under action {action}")
            }
            Violation::TerminalReward { state, action, reward } => {
                write!(f, "terminal state {state} pays reward {reward} under action {action}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
    initial: Vec<f64>,
    terminal: Vec<bool>,
}

impl TabularMdp {
    /// Assembles an MDP after checking only that the tables have the right
    /// lengths. Use [`validate_mdp`] (or [`TabularMdp::new`]) for the
    /// probabilistic invariants.
    pub fn from_parts(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        initial: Vec<f64>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Empty("MDP needs at least one state and one action"));
        }
        let expect = |what: &str, got: usize, want: usize| {
            if got != want {
                Err(Error::ShapeMismatch(format!("{what} has length {got}, expected {want}")))
            } else {
                Ok(())
            }
        };
        expect("transition", transition.len(), num_states * num_actions * num_states)?;
        expect("reward", reward.len(), num_states * num_actions)?;
        expect("initial", initial.len(), num_states)?;
        expect("terminal", terminal.len(), num_states)?;
        Ok(TabularMdp {
            num_states,
            num_actions,
            transition,
            reward,
            discount,
            initial,
            terminal,
        })
    }

    /// Like [`TabularMdp::from_parts`] but rejects any invariant violation.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        initial: Vec<f64>,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let m = Self::from_parts(
            num_states,
            num_actions,
            transition,
            reward,
            discount,
            initial,
            terminal,
        )?;
        let report = validate_mdp(&m);
        if report.is_valid() {
            Ok(m)
        } else {
            Err(Error::InvalidMdp(report.violations))
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn terminal(&self) -> &[bool] {
        &self.terminal
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    /// Next-state distribution of `(s, a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.num_states;
        let start = (s * self.num_actions + a) * n;
        &self.transition[start..start + n]
    }

    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition_row(s, a)[next]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    /// Largest absolute one-step reward.
    pub fn r_max(&self) -> f64 {
        self.reward.iter().fold(0.0, |acc: f64, r| acc.max(r.abs()))
    }

    /// Same dynamics with a different reward table.
    pub fn with_rewards(&self, reward: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            self.num_states,
            self.num_actions,
            self.transition.clone(),
            reward,
            self.discount,
            self.initial.clone(),
            self.terminal.clone(),
        )
    }

    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.num_states == other.num_states && self.num_actions == other.num_actions
    }
}

/// Incremental constructor for [`TabularMdp`]. Terminal states are turned
/// into zero-reward self-loops when the MDP is built.
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    num_states: usize,
    num_actions: usize,
    discount: f64,
    transition: Vec<f64>,
    reward: Vec<f64>,
    initial: Vec<f64>,
    terminal: Vec<bool>,
}

impl MdpBuilder {
    pub fn new(num_states: usize, num_actions: usize, discount: f64) -> Self {
        MdpBuilder {
            num_states,
            num_actions,
            discount,
            transition: vec![0.0; num_states * num_actions * num_states],
            reward: vec![0.0; num_states * num_actions],
            initial: vec![0.0; num_states],
            terminal: vec![false; num_states],
        }
    }

    pub fn transition(&mut self, s: usize, a: usize, next: usize, p: f64) -> &mut Self {
        let n = self.num_states;
        self.transition[(s * self.num_actions + a) * n + next] = p;
        self
    }

    /// Sets a deterministic transition `(s, a) -> next`, clearing the row.
    pub fn deterministic(&mut self, s: usize, a: usize, next: usize) -> &mut Self {
        let n = self.num_states;
        let start = (s * self.num_actions + a) * n;
        self.transition[start..start + n].iter_mut().for_each(|p| *p = 0.0);
        self.transition[start + next] = 1.0;
        self
    }

    pub fn reward(&mut self, s: usize, a: usize, r: f64) -> &mut Self {
        self.reward[s * self.num_actions + a] = r;
        self
    }

    pub fn initial(&mut self, s: usize, p: f64) -> &mut Self {
        self.initial[s] = p;
        self
    }

    pub fn terminal(&mut self, s: usize) -> &mut Self {
        self.terminal[s] = true;
        self
    }

    pub fn build(&self) -> Result<TabularMdp> {
        let mut transition = self.transition.clone();
        let mut reward = self.reward.clone();
        let (n, na) = (self.num_states, self.num_actions);
        for s in (0..n).filter(|&s| self.terminal[s]) {
            for a in 0..na {
                let start = (s * na + a) * n;
                transition[start..start + n].iter_mut().for_each(|p| *p = 0.0);
                transition[start + s] = 1.0;
                reward[s * na + a] = 0.0;
            }
        }
        TabularMdp::new(
            n,
            na,
            transition,
            reward,
            self.discount,
            self.initial.clone(),
            self.terminal.clone(),
        )
    }
}

/// Lists every violated invariant of `m`; an empty report means valid.
pub fn validate_mdp(m: &TabularMdp) -> ValidationReport {
    let mut violations = Vec::new();
    let (n, na) = (m.num_states, m.num_actions);
    if !(0.0..1.0).contains(&m.discount) {
        violations.push(Violation::Discount(m.discount));
    }
    for (index, r) in m.reward.iter().enumerate() {
        if !r.is_finite() {
            violations.push(Violation::NonFinite { what: "reward", index });
        }
    }
    for s in 0..n {
        for a in 0..na {
            let row = m.transition_row(s, a);
            let mut sum = 0.0;
            for (next, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    violations.push(Violation::NonFinite {
                        what: "transition",
                        index: (s * na + a) * n + next,
                    });
                } else if p < 0.0 {
                    violations.push(Violation::NegativeProbability {
                        state: s,
                        action: a,
                        next_state: next,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                violations.push(Violation::RowSum { state: s, action: a, sum });
            }
            if m.terminal[s] {
                if (row[s] - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::TerminalNotAbsorbing { state: s, action: a });
                }
                let r = m.reward(s, a);
                if r != 0.0 {
                    violations.push(Violation::TerminalReward { state: s, action: a, reward: r });
                }
            }
        }
    }
    let mut sum = 0.0;
    for (s, &p) in m.initial.iter().enumerate() {
        if p < 0.0 {
            violations.push(Violation::NegativeInitial { state: s, value: p });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        violations.push(Violation::InitialSum(sum));
    }
    ValidationReport { violations }
}

/// Per-state action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorylessPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl MemorylessPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy table has {} entries, expected {}",
                probs.len(),
                num_states * num_actions
            )));
        }
        for (s, row) in probs.chunks_exact(num_actions).enumerate() {
            check_distribution(row).map_err(|e| {
                Error::InvalidDistribution(format!("policy row {s}: {e}"))
            })?;
        }
        Ok(MemorylessPolicy {
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        MemorylessPolicy {
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * num_actions + a] = 1.0;
        }
        MemorylessPolicy {
            num_states: actions.len(),
            num_actions,
            probs,
        }
    }

    /// Builds a policy from rows, one per state.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let na = rows.first().map(Vec::len).ok_or(Error::Empty("policy rows"))?;
        if rows.iter().any(|r| r.len() != na) {
            return Err(Error::ShapeMismatch("policy rows differ in length".into()));
        }
        Self::new(rows.len(), na, rows.concat())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn from_probs_unchecked(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), num_states * num_actions);
        MemorylessPolicy {
            num_states,
            num_actions,
            probs,
        }
    }
}

/// Checks that `p` is a probability vector within [`PROB_TOL`].
pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Empty("distribution"));
    }
    if let Some(i) = p.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {i} is {}", p[i])));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

fn check_shapes(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<()> {
    if m.num_states != pi.num_states || m.num_actions != pi.num_actions {
        return Err(Error::ShapeMismatch(format!(
            "MDP is {}x{}, policy is {}x{}",
            m.num_states, m.num_actions, pi.num_states, pi.num_actions
        )));
    }
    Ok(())
}

/// `r_π(s) = Σ_a π(a|s) r(s, a)` for an arbitrary state-action reward table.
pub(crate) fn policy_reward(m: &TabularMdp, pi: &MemorylessPolicy, reward: &[f64]) -> Vec<f64> {
    let na = m.num_actions;
    (0..m.num_states)
        .map(|s| {
            pi.row(s)
                .iter()
                .zip(&reward[s * na..(s + 1) * na])
                .map(|(p, r)| p * r)
                .sum()
        })
        .collect()
}

/// Factorizes `I - γ P_π`.
pub(crate) fn factor_policy_system(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<Lu> {
    let (n, na) = (m.num_states, m.num_actions);
    let g = m.discount;
    let mut a = vec![0.0; n * n];
    for s in 0..n {
        let row = &mut a[s * n..(s + 1) * n];
        for act in 0..na {
            let p = pi.prob(s, act);
            if p == 0.0 {
                continue;
            }
            let w = g * p;
            for (dst, t) in row.iter_mut().zip(m.transition_row(s, act)) {
                *dst -= w * t;
            }
        }
        row[s] += 1.0;
    }
    Lu::factor(a, n)
}

/// `Q(s, a) = r(s, a) + γ Σ_s' T(s'|s, a) V(s')`.
pub(crate) fn q_from_values(m: &TabularMdp, reward: &[f64], values: &[f64]) -> Vec<f64> {
    let (n, na) = (m.num_states, m.num_actions);
    let g = m.discount;
    let mut q = vec![0.0; n * na];
    for s in 0..n {
        for a in 0..na {
            let next: f64 = m
                .transition_row(s, a)
                .iter()
                .zip(values)
                .map(|(t, v)| t * v)
                .sum();
            q[s * na + a] = reward[s * na + a] + g * next;
        }
    }
    q
}

/// Values and discounted occupancy of one policy, from a single factorization.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub state_values: Vec<f64>,
    pub occupancy: Vec<f64>,
    pub ret: f64,
}

/// Exact evaluation under an alternative reward table of the same shape.
pub fn evaluate_with_reward(
    m: &TabularMdp,
    pi: &MemorylessPolicy,
    reward: &[f64],
) -> Result<PolicyEvaluation> {
    check_shapes(m, pi)?;
    if reward.len() != m.num_states * m.num_actions {
        return Err(Error::ShapeMismatch("reward table".into()));
    }
    let lu = factor_policy_system(m, pi)?;
    let state_values = lu.solve(&policy_reward(m, pi, reward));
    let scaled: Vec<f64> = m.initial.iter().map(|p| (1.0 - m.discount) * p).collect();
    let occupancy = lu.solve_transpose(&scaled);
    let ret = dot(&m.initial, &state_values);
    Ok(PolicyEvaluation {
        state_values,
        occupancy,
        ret,
    })
}

pub fn evaluate(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<PolicyEvaluation> {
    evaluate_with_reward(m, pi, &m.reward)
}

pub fn state_values(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<Vec<f64>> {
    check_shapes(m, pi)?;
    let lu = factor_policy_system(m, pi)?;
    Ok(lu.solve(&policy_reward(m, pi, &m.reward)))
}

/// `J_M(π) = ρ · (I - γ P_π)⁻¹ r_π`.
pub fn policy_return(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<f64> {
    Ok(dot(&m.initial, &state_values(m, pi)?))
}

/// Normalized discounted state distribution `d^π = (1-γ) ρᵀ (I - γ P_π)⁻¹`.
pub fn occupancy_measure(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<Vec<f64>> {
    check_shapes(m, pi)?;
    let lu = factor_policy_system(m, pi)?;
    let scaled: Vec<f64> = m.initial.iter().map(|p| (1.0 - m.discount) * p).collect();
    Ok(lu.solve_transpose(&scaled))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueBundle {
    pub state_values: Vec<f64>,
    /// Row-major `(state, action)`.
    pub q_values: Vec<f64>,
    /// `A(s, a) = Q(s, a) - V(s)`.
    pub advantages: Vec<f64>,
    num_actions: usize,
}

impl ValueBundle {
    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.q_values[s * self.num_actions + a]
    }

    pub fn advantage(&self, s: usize, a: usize) -> f64 {
        self.advantages[s * self.num_actions + a]
    }
}

pub fn value_bundle(m: &TabularMdp, pi: &MemorylessPolicy) -> Result<ValueBundle> {
    let state_values = state_values(m, pi)?;
    Ok(bundle_from_values(m, pi, &m.reward, state_values))
}

pub(crate) fn bundle_from_values(
    m: &TabularMdp,
    pi: &MemorylessPolicy,
    reward: &[f64],
    state_values: Vec<f64>,
) -> ValueBundle {
    let na = m.num_actions;
    let q_values = q_from_values(m, reward, &state_values);
    // V is recomputed from Q so that Σ_a π(a|s) A(s, a) = 0 holds to rounding.
    let mut advantages = q_values.clone();
    for s in 0..m.num_states {
        let v: f64 = pi.row(s).iter().zip(&q_values[s * na..(s + 1) * na]).map(|(p, q)| p * q).sum();
        advantages[s * na..(s + 1) * na].iter_mut().for_each(|x| *x -= v);
    }
    ValueBundle {
        state_values,
        q_values,
        advantages,
        num_actions: na,
    }
}

#[derive(Debug, Clone)]
pub struct OptimalPolicy {
    pub actions: Vec<usize>,
    pub policy: MemorylessPolicy,
    pub state_values: Vec<f64>,
    pub value: f64,
}

/// Value iteration to a Bellman residual of [`VALUE_ITERATION_TOL`], then a
/// policy-iteration polish on exact values. Ties go to the lowest action.
pub fn optimal_deterministic_policy(m: &TabularMdp) -> OptimalPolicy {
    let (n, na) = (m.num_states, m.num_actions);
    let mut v = vec![0.0; n];
    let max_sweeps = 1_000_000;
    for _ in 0..max_sweeps {
        let q = q_from_values(m, &m.reward, &v);
        let mut residual: f64 = 0.0;
        for s in 0..n {
            let best = q[s * na..(s + 1) * na].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual <= VALUE_ITERATION_TOL {
            break;
        }
    }
    let mut actions = greedy_actions(m, &v, 1e-9);
    let mut policy = MemorylessPolicy::deterministic(&actions, na);
    let mut values = state_values(m, &policy).expect("γ < 1 keeps the system nonsingular");
    for _ in 0..100 {
        let improved = greedy_actions(m, &values, 1e-12);
        // Only switch where the exact improvement is strict.
        let q = q_from_values(m, &m.reward, &values);
        let mut changed = false;
        for s in 0..n {
            let current = q[s * na + actions[s]];
            let cand = q[s * na + improved[s]];
            if cand > current + 1e-12 {
                actions[s] = improved[s];
                changed = true;
            }
        }
        if !changed {
            break;
        }
        policy = MemorylessPolicy::deterministic(&actions, na);
        values = state_values(m, &policy).expect("γ < 1 keeps the system nonsingular");
    }
    let value = dot(&m.initial, &values);
    OptimalPolicy {
        actions,
        policy,
        state_values: values,
        value,
    }
}

fn greedy_actions(m: &TabularMdp, v: &[f64], tie_tol: f64) -> Vec<usize> {
    let na = m.num_actions;
    let q = q_from_values(m, &m.reward, v);
    (0..m.num_states)
        .map(|s| {
            let row = &q[s * na..(s + 1) * na];
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&x| x >= best - tie_tol).unwrap_or(0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
    pub horizon: usize,
    /// Upper bound on `|J - E[truncated return]|`: `γ^H r_max / (1 - γ)`.
    pub truncation_bias: f64,
}

/// Smallest horizon whose truncation bias is at most `bias`.
pub fn horizon_for_bias(m: &TabularMdp, bias: f64) -> usize {
    let scale = m.r_max() / (1.0 - m.discount);
    if scale <= bias || m.discount == 0.0 {
        return 1;
    }
    ((bias / scale).ln() / m.discount.ln()).ceil().max(1.0) as usize
}

/// Samples an index from a discrete distribution.
pub(crate) fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Truncated discounted returns averaged over `episodes` rollouts.
pub fn monte_carlo_return(
    m: &TabularMdp,
    pi: &MemorylessPolicy,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_shapes(m, pi)?;
    if episodes == 0 {
        return Err(Error::Empty("monte carlo needs at least one episode"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = m.discount;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..episodes {
        let mut s = sample_index(&mut rng, &m.initial);
        let mut ret = 0.0;
        let mut disc = 1.0;
        for _ in 0..horizon {
            if m.terminal[s] {
                break;
            }
            let a = sample_index(&mut rng, pi.row(s));
            ret += disc * m.reward(s, a);
            disc *= g;
            s = sample_index(&mut rng, m.transition_row(s, a));
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let k = episodes as f64;
    let mean = sum / k;
    let var = if episodes > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / k).sqrt(),
        episodes,
        horizon,
        truncation_bias: g.powi(horizon as i32) * m.r_max() / (1.0 - g),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
