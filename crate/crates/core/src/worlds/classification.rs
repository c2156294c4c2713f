//! Sequential classification as an RL problem: the agent guesses a label,
//! receives 0 and stops when right, or -1 and guesses again when wrong.
//!
//! With a label posterior `p(y | x)`, each image is a posterior over
//! label-assignment MDPs. Memory lets the agent eliminate labels it already
//! tried; a memoryless agent can only randomize.

use std::fmt::Write as _;

use rand::Rng;

use crate::epistemic::Posterior;
use crate::error::{Error, Result};
use crate::mdp::{check_distribution, MdpBuilder, MemorylessPolicy};
use crate::random::{random_distribution, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDataset {
    /// `(item id, p(y | x))`.
    pub items: Vec<(String, Vec<f64>)>,
    pub discount: f64,
    pub time_limit: usize,
}

impl LabelDataset {
    pub fn new(items: Vec<(String, Vec<f64>)>, discount: f64, time_limit: usize) -> Result<Self> {
        let d = items.first().map(|(_, p)| p.len()).ok_or(Error::Empty("dataset has no items"))?;
        if d < 2 {
            return Err(Error::InvalidParameter("need at least two labels".into()));
        }
        if !(0.0..=1.0).contains(&discount) {
            return Err(Error::InvalidParameter(format!("discount {discount} outside [0, 1]")));
        }
        if time_limit == 0 {
            return Err(Error::InvalidParameter("time limit must be at least 1".into()));
        }
        for (id, p) in &items {
            if p.len() != d {
                return Err(Error::ShapeMismatch(format!("item {id} has {} labels, expected {d}", p.len())));
            }
            check_distribution(p).map_err(|e| Error::InvalidDistribution(format!("item {id}: {e}")))?;
        }
        Ok(LabelDataset {
            items,
            discount,
            time_limit,
        })
    }

    /// One item per line: `id p1 p2 ... pd`.
    pub fn parse(text: &str, discount: f64, time_limit: usize) -> Result<Self> {
        let mut items = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("");
            let mut toks = content.split_whitespace();
            let Some(id) = toks.next() else { continue };
            let probs = toks
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(i + 1, format!("cannot parse '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            items.push((id.to_string(), probs));
        }
        Self::new(items, discount, time_limit)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, p) in &self.items {
            let _ = write!(out, "{id}");
            for x in p {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Items whose label distribution mixes a random one-hot label with a
    /// flat Dirichlet draw: `(1 - noise) e_y + noise · Dir(1)`.
    pub fn synthetic(
        num_items: usize,
        num_labels: usize,
        noise: f64,
        discount: f64,
        time_limit: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::InvalidParameter(format!("noise {noise} outside [0, 1]")));
        }
        if num_labels < 2 {
            return Err(Error::InvalidParameter("need at least two labels".into()));
        }
        let mut g = rng(seed);
        let items = (0..num_items)
            .map(|i| {
                let y = g.gen_range(0..num_labels);
                let mut p = random_distribution(&mut g, num_labels);
                p.iter_mut().for_each(|x| *x *= noise);
                p[y] += 1.0 - noise;
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= s);
                (format!("item{i}"), p)
            })
            .collect();
        Self::new(items, discount, time_limit)
    }

    pub fn num_labels(&self) -> usize {
        self.items[0].1.len()
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationItem {
    pub id: String,
    pub label_dist: Vec<f64>,
    /// One member per label with positive probability.
    pub posterior: Posterior,
    /// Label of each posterior member.
    pub labels: Vec<usize>,
    /// `None` for the single-state environment without a time limit.
    pub time_limit: Option<usize>,
}

impl ClassificationItem {
    pub fn num_states(&self) -> usize {
        self.posterior.num_states()
    }

    /// The same guessing distribution in every non-terminal state: a policy
    /// that sees only the image.
    pub fn tied_policy(&self, row: &[f64]) -> Result<MemorylessPolicy> {
        let d = self.label_dist.len();
        if row.len() != d {
            return Err(Error::ShapeMismatch(format!("policy row has {} labels, expected {d}", row.len())));
        }
        let rows: Vec<Vec<f64>> = (0..self.num_states()).map(|_| row.to_vec()).collect();
        MemorylessPolicy::from_rows(&rows)
    }

    /// A guess schedule as a policy over attempt states. Only the
    /// time-limited environment can express schedules that change over time.
    pub fn guess_policy(&self, g: &GuessPolicy) -> Result<MemorylessPolicy> {
        let d = self.label_dist.len();
        let decision = match self.time_limit {
            Some(t) => t,
            None => match g {
                GuessPolicy::DeterministicRepeat | GuessPolicy::Memoryless(_) => 1,
                _ => {
                    return Err(Error::InvalidParameter(
                        "time-varying guess schedules need the time-limited environment".into(),
                    ))
                }
            },
        };
        let order = descending_order(&self.label_dist);
        let mut rows = Vec::with_capacity(decision + 1);
        for t in 0..decision {
            rows.push(match g {
                GuessPolicy::Memoryless(row) => row.clone(),
                _ => (0..d).map(|y| guess_probability(g, &order, y, t)).collect(),
            });
        }
        rows.push(vec![1.0 / d as f64; d]);
        MemorylessPolicy::from_rows(&rows)
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationEnv {
    pub items: Vec<ClassificationItem>,
}

fn build_env(ds: &LabelDataset, time_limit: Option<usize>) -> Result<ClassificationEnv> {
    let d = ds.num_labels();
    let items = ds
        .items
        .iter()
        .map(|(id, p)| {
            let labels: Vec<usize> = (0..d).filter(|&y| p[y] > 0.0).collect();
            let mdps = labels
                .iter()
                .map(|&y| label_mdp(d, y, ds.discount, time_limit))
                .collect::<Result<Vec<_>>>()?;
            let weights: Vec<f64> = labels.iter().map(|&y| p[y]).collect();
            let total: f64 = weights.iter().sum();
            let posterior = Posterior::new(mdps, weights.iter().map(|w| w / total).collect())?;
            Ok(ClassificationItem {
                id: id.clone(),
                label_dist: p.clone(),
                posterior,
                labels,
                time_limit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationEnv { items })
}

fn label_mdp(d: usize, label: usize, gamma: f64, time_limit: Option<usize>) -> Result<crate::mdp::TabularMdp> {
    let attempts = time_limit.unwrap_or(1);
    let terminal = attempts;
    let mut b = MdpBuilder::new(attempts + 1, d, gamma);
    b.initial(0, 1.0).terminal(terminal);
    for t in 0..attempts {
        for a in 0..d {
            if a == label {
                b.deterministic(t, a, terminal);
            } else {
                let next = match time_limit {
                    Some(_) if t + 1 < attempts => t + 1,
                    Some(_) => terminal,
                    None => t,
                };
                b.deterministic(t, a, next).reward(t, a, -1.0);
            }
        }
    }
    b.build()
}

/// Attempt states `0..time_limit` plus a terminal state; running out of
/// attempts ends the episode.
pub fn make_classification_env(ds: &LabelDataset) -> Result<ClassificationEnv> {
    build_env(ds, Some(ds.time_limit))
}

/// One guessing state plus a terminal state, with no time limit.
pub fn make_classification_env_unbounded(ds: &LabelDataset) -> Result<ClassificationEnv> {
    build_env(ds, None)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("discount {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// `Σ_y p_y (π_y - 1) / (1 - γ(1 - π_y))`; `-∞` when `γ = 1` and a possible
/// label is never guessed.
pub fn classification_memoryless_return(p: &[f64], row: &[f64], gamma: f64) -> Result<f64> {
    check_distribution(p)?;
    check_distribution(row)?;
    check_gamma(gamma)?;
    if p.len() != row.len() {
        return Err(Error::ShapeMismatch("label and policy lengths differ".into()));
    }
    let mut total = 0.0;
    for (&py, &q) in p.iter().zip(row) {
        if py == 0.0 {
            continue;
        }
        let den = 1.0 - gamma * (1.0 - q);
        if den <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += py * (q - 1.0) / den;
    }
    Ok(total)
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > p[best] {
            best = i;
        }
    }
    best
}

fn descending_order(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    order
}

/// Best guessing distribution for an agent without memory.
///
/// The objective separates across labels with marginal value
/// `p_y / (1 - γ + γπ_y)²`, so the optimum equalizes it over the support:
/// `π_y = max(0, (μ√p_y - (1 - γ)) / γ)` with `μ` fixed by normalization.
/// This gives `√p` normalized at `γ = 1` and the argmax at `γ = 0`.
pub fn classification_optimal_memoryless(p: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_distribution(p)?;
    check_gamma(gamma)?;
    let d = p.len();
    if gamma == 0.0 {
        let mut row = vec![0.0; d];
        row[argmax(p)] = 1.0;
        return Ok(row);
    }
    let roots: Vec<f64> = p.iter().map(|x| x.sqrt()).collect();
    let order = descending_order(p);
    let slack = 1.0 - gamma;
    let mut mu = 0.0;
    let mut sum = 0.0;
    for (k, &y) in order.iter().enumerate() {
        sum += roots[y];
        let candidate = (gamma + (k + 1) as f64 * slack) / sum;
        if k == 0 || candidate * roots[y] > slack {
            mu = candidate;
        } else {
            break;
        }
    }
    let mut row: Vec<f64> = roots.iter().map(|r| ((mu * r - slack) / gamma).max(0.0)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    Ok(row)
}

/// Return of guessing labels in a fixed order, each at most once.
pub fn ordering_return(p: &[f64], order: &[usize], gamma: f64) -> Result<f64> {
    check_distribution(p)?;
    check_gamma(gamma)?;
    let mut seen = vec![false; p.len()];
    if order.len() != p.len() || order.iter().any(|&y| y >= p.len() || std::mem::replace(&mut seen[y], true)) {
        return Err(Error::InvalidParameter("ordering must be a permutation of the labels".into()));
    }
    // Label at position t costs t wrong guesses: -Σ_{k<t} γ^k.
    let mut cost = 0.0;
    let mut disc = 1.0;
    let mut total = 0.0;
    for &y in order {
        total -= p[y] * cost;
        cost += disc;
        disc *= gamma;
    }
    Ok(total)
}

/// Process of elimination in decreasing probability, which is optimal among
/// orderings, with its value `(Σ_y p_y γ^{T_y} - 1) / (1 - γ)`.
pub fn classification_ordering_return(p: &[f64], gamma: f64) -> Result<(f64, Vec<usize>)> {
    let order = descending_order(p);
    Ok((ordering_return(p, &order, gamma)?, order))
}

/// Best deterministic memoryless value: always guess the most likely label.
pub fn deterministic_guess_return(p: &[f64], gamma: f64) -> Result<f64> {
    let mut row = vec![0.0; p.len()];
    row[argmax(p)] = 1.0;
    classification_memoryless_return(p, &row, gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GuessPolicy {
    /// Always the most likely label.
    DeterministicRepeat,
    /// The most likely label first, then uniformly over all labels.
    UniformAfterFirst,
    /// Labels in decreasing probability, never repeating a failed one.
    Adaptive,
    /// The same distribution at every step.
    Memoryless(Vec<f64>),
}

fn guess_probability(g: &GuessPolicy, order: &[usize], y: usize, t: usize) -> f64 {
    let d = order.len();
    let hit = |label: usize| (label == y) as u8 as f64;
    match g {
        GuessPolicy::DeterministicRepeat => hit(order[0]),
        GuessPolicy::UniformAfterFirst if t == 0 => hit(order[0]),
        GuessPolicy::UniformAfterFirst => 1.0 / d as f64,
        GuessPolicy::Adaptive => hit(order[t.min(d - 1)]),
        GuessPolicy::Memoryless(row) => row[y],
    }
}

/// Exact expected return of a guess schedule, optionally with a time limit.
pub fn guess_policy_return(p: &[f64], g: &GuessPolicy, gamma: f64, time_limit: Option<usize>) -> Result<f64> {
    check_distribution(p)?;
    check_gamma(gamma)?;
    if let GuessPolicy::Memoryless(row) = g {
        check_distribution(row)?;
        if row.len() != p.len() {
            return Err(Error::ShapeMismatch("label and policy lengths differ".into()));
        }
    }
    let d = p.len();
    let order = descending_order(p);
    // Every schedule is stationary from step d on.
    let steps = time_limit.unwrap_or(d + 1);
    let mut total = 0.0;
    for (y, &py) in p.iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        let mut alive = 1.0;
        let mut disc = 1.0;
        let mut value = 0.0;
        for t in 0..steps {
            let q = guess_probability(g, &order, y, t);
            value -= disc * alive * (1.0 - q);
            alive *= 1.0 - q;
            disc *= gamma;
            if alive == 0.0 {
                break;
            }
        }
        if time_limit.is_none() && alive > 0.0 {
            let q = guess_probability(g, &order, y, steps);
            let den = 1.0 - gamma * (1.0 - q);
            if den <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            value -= disc * alive * (1.0 - q) / den;
        }
        total += py * value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic::{epistemic_return, optimal_memoryless_policy};

    fn dataset(p: Vec<f64>, gamma: f64, limit: usize) -> LabelDataset {
        LabelDataset::new(vec![("x".into(), p)], gamma, limit).unwrap()
    }

    #[test]
    fn point_label_has_zero_optimum() {
        let env = make_classification_env(&dataset(vec![1.0, 0.0], 0.9, 20)).unwrap();
        let item = &env.items[0];
        assert_eq!(item.posterior.len(), 1);
        let sol = optimal_memoryless_policy(&item.posterior, 2, 0).unwrap();
        assert!(sol.value.abs() < 1e-9);
    }

    #[test]
    fn myopic_even_split() {
        let env = make_classification_env_unbounded(&dataset(vec![0.5, 0.5], 0.0, 1)).unwrap();
        let sol = optimal_memoryless_policy(&env.items[0].posterior, 2, 0).unwrap();
        assert!((sol.value + 0.5).abs() < 1e-9);
    }

    #[test]
    fn closed_form_examples() {
        let v = classification_memoryless_return(&[0.7, 0.3], &[1.0, 0.0], 0.0).unwrap();
        assert!((v + 0.3).abs() < 1e-15);
        assert_eq!(classification_memoryless_return(&[0.0, 1.0], &[0.0, 1.0], 0.9).unwrap(), 0.0);
        assert_eq!(
            classification_memoryless_return(&[0.5, 0.5], &[1.0, 0.0], 1.0).unwrap(),
            f64::NEG_INFINITY
        );
        let row = classification_optimal_memoryless(&[0.64, 0.36], 1.0).unwrap();
        assert!((row[0] - 4.0 / 7.0).abs() < 1e-15 && (row[1] - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(classification_optimal_memoryless(&[0.7, 0.3], 0.0).unwrap(), vec![1.0, 0.0]);
        let uniform = classification_optimal_memoryless(&[0.25; 4], 0.7).unwrap();
        assert!(uniform.iter().all(|x| (x - 0.25).abs() < 1e-15));
        let (v, order) = classification_ordering_return(&[0.5, 0.3, 0.2], 0.9).unwrap();
        assert_eq!(order, vec![0, 1, 2]);
        assert!((v + 0.68).abs() < 1e-12);
        assert_eq!(classification_ordering_return(&[0.0, 1.0, 0.0], 0.9).unwrap().0, 0.0);
    }

    #[test]
    fn interior_optimum_satisfies_stationarity() {
        let p = [0.55, 0.3, 0.1, 0.05];
        let gamma = 0.8;
        let row = classification_optimal_memoryless(&p, gamma).unwrap();
        let marginal: Vec<f64> = p.iter().zip(&row).map(|(py, q)| py / (1.0 - gamma + gamma * q).powi(2)).collect();
        let active: Vec<usize> = (0..4).filter(|&y| row[y] > 0.0).collect();
        let lambda = marginal[active[0]];
        for &y in &active {
            assert!((marginal[y] - lambda).abs() < 1e-9 * lambda);
        }
        for y in (0..4).filter(|y| row[*y] == 0.0) {
            assert!(marginal[y] <= lambda + 1e-12);
        }
    }

    #[test]
    fn environments_match_closed_forms() {
        let p = vec![0.5, 0.3, 0.15, 0.05];
        let gamma = 0.9;
        let unbounded = make_classification_env_unbounded(&dataset(p.clone(), gamma, 1)).unwrap();
        let limited = make_classification_env(&dataset(p.clone(), gamma, 6)).unwrap();
        let row = vec![0.4, 0.3, 0.2, 0.1];
        let item = &unbounded.items[0];
        let exact = epistemic_return(&item.posterior, &item.tied_policy(&row).unwrap()).unwrap();
        let closed = classification_memoryless_return(&p, &row, gamma).unwrap();
        assert!((exact - closed).abs() < 1e-10);
        let schedules = [
            GuessPolicy::DeterministicRepeat,
            GuessPolicy::UniformAfterFirst,
            GuessPolicy::Adaptive,
            GuessPolicy::Memoryless(row),
        ];
        for g in &schedules {
            let item = &limited.items[0];
            let exact = epistemic_return(&item.posterior, &item.guess_policy(g).unwrap()).unwrap();
            let closed = guess_policy_return(&p, g, gamma, Some(6)).unwrap();
            assert!((exact - closed).abs() < 1e-10, "{g:?}: {exact} vs {closed}");
        }
        let adaptive = guess_policy_return(&p, &GuessPolicy::Adaptive, gamma, None).unwrap();
        assert!((adaptive - classification_ordering_return(&p, gamma).unwrap().0).abs() < 1e-12);
    }

    #[test]
    fn dataset_text_round_trip() {
        let ds = LabelDataset::new(
            vec![("a".into(), vec![0.25, 0.75]), ("b".into(), vec![1.0, 0.0])],
            0.9,
            20,
        )
        .unwrap();
        assert_eq!(LabelDataset::parse(&ds.to_text(), 0.9, 20).unwrap(), ds);
        assert!(matches!(
            LabelDataset::parse("a 0.5 0.5\nb 0.5 zz\n", 0.9, 20),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(LabelDataset::parse("a 0.5 0.6\n", 0.9, 20).is_err());
        assert!(LabelDataset::parse("a 1\n", 0.9, 20).is_err());
    }
}
