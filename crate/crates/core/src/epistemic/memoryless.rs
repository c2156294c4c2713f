//! Memoryless policies in the epistemic POMDP.
//!
//! The objective `π ↦ Σ_i w_i J_{M_i}(π)` is smooth but not concave, so the
//! search combines projected gradient ascent from many starts with an
//! exhaustive simplex grid on instances small enough to enumerate.

use super::{epistemic_return, Posterior};
use crate::error::{Error, Result};
use crate::mdp::{evaluate, q_from_values, MemorylessPolicy};
use crate::random::{random_distribution, rng};

pub const GRID_MAX_STATES: usize = 2;
pub const GRID_MAX_ACTIONS: usize = 3;
const GRID_RESOLUTION: usize = 100;
const MAX_DETERMINISTIC_STARTS: usize = 64;
const MAX_ASCENT_STEPS: usize = 20_000;
const MAX_HALVINGS: usize = 200;
const MAX_STEP: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct MemorylessSolution {
    pub policy: MemorylessPolicy,
    /// Exact epistemic return of `policy`; a lower bound on the optimum.
    pub value: f64,
    /// Best value on the simplex grid, when the instance was small enough.
    pub grid_value: Option<f64>,
}

/// States that are non-terminal in at least one member.
pub fn decision_states(p: &Posterior) -> Vec<usize> {
    (0..p.num_states())
        .filter(|&s| p.mdps().iter().any(|m| !m.is_terminal(s)))
        .collect()
}

/// `∂J/∂π(a|s) = Σ_i w_i d_i(s) Q_i(s, a) / (1 - γ)`, row-major.
pub fn epistemic_gradient(p: &Posterior, pi: &MemorylessPolicy) -> Result<Vec<f64>> {
    let (n, na) = (p.num_states(), p.num_actions());
    let scale = 1.0 / (1.0 - p.discount());
    let mut grad = vec![0.0; n * na];
    for (m, &w) in p.mdps().iter().zip(p.weights()) {
        let eval = evaluate(m, pi)?;
        let q = q_from_values(m, m.rewards(), &eval.state_values);
        for s in 0..n {
            let c = w * eval.occupancy[s] * scale;
            if c != 0.0 {
                for a in 0..na {
                    grad[s * na + a] += c * q[s * na + a];
                }
            }
        }
    }
    Ok(grad)
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn ascend(p: &Posterior, states: &[usize], start: MemorylessPolicy) -> Result<(MemorylessPolicy, f64)> {
    let na = p.num_actions();
    let mut pi = start;
    let mut value = epistemic_return(p, &pi)?;
    let mut eta = f64::NAN;
    'outer: for _ in 0..MAX_ASCENT_STEPS {
        let grad = epistemic_gradient(p, &pi)?;
        if eta.is_nan() {
            let gmax = states
                .iter()
                .flat_map(|&s| grad[s * na..(s + 1) * na].iter())
                .fold(0.0f64, |acc, g| acc.max(g.abs()));
            if gmax == 0.0 {
                break;
            }
            eta = (1.0 / gmax).min(MAX_STEP);
        }
        for _ in 0..MAX_HALVINGS {
            let mut probs = pi.probs().to_vec();
            let mut moved = 0.0f64;
            for &s in states {
                let row = &probs[s * na..(s + 1) * na];
                let stepped: Vec<f64> = row.iter().zip(&grad[s * na..]).map(|(x, g)| x + eta * g).collect();
                let projected = project_to_simplex(&stepped);
                for (a, x) in projected.into_iter().enumerate() {
                    moved = moved.max((x - probs[s * na + a]).abs());
                    probs[s * na + a] = x;
                }
            }
            if moved < 1e-15 {
                break 'outer;
            }
            let cand = MemorylessPolicy::from_probs_unchecked(p.num_states(), na, probs);
            let v = epistemic_return(p, &cand)?;
            if v > value {
                pi = cand;
                value = v;
                eta = (eta * 1.5).min(MAX_STEP);
                continue 'outer;
            }
            eta *= 0.5;
        }
        break;
    }
    Ok((pi, value))
}

fn deterministic_starts(states: &[usize], n: usize, na: usize) -> Vec<MemorylessPolicy> {
    let count = (na as f64).powi(states.len() as i32);
    if count > MAX_DETERMINISTIC_STARTS as f64 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut code in 0..count as usize {
        let mut probs = MemorylessPolicy::uniform(n, na).probs().to_vec();
        for &s in states {
            let a = code % na;
            code /= na;
            probs[s * na..(s + 1) * na].iter_mut().enumerate().for_each(|(b, x)| *x = (a == b) as u8 as f64);
        }
        out.push(MemorylessPolicy::from_probs_unchecked(n, na, probs));
    }
    out
}

/// Best memoryless policy found by projected gradient ascent from the
/// uniform policy, every deterministic policy (when few), and `restarts`
/// random interior points. Small instances are also checked on the grid.
pub fn optimal_memoryless_policy(p: &Posterior, restarts: usize, seed: u64) -> Result<MemorylessSolution> {
    let (n, na) = (p.num_states(), p.num_actions());
    let states = decision_states(p);
    let mut starts = vec![MemorylessPolicy::uniform(n, na)];
    starts.extend(deterministic_starts(&states, n, na));
    let mut g = rng(seed);
    for _ in 0..restarts {
        let mut probs = MemorylessPolicy::uniform(n, na).probs().to_vec();
        for &s in &states {
            probs[s * na..(s + 1) * na].copy_from_slice(&random_distribution(&mut g, na));
        }
        starts.push(MemorylessPolicy::from_probs_unchecked(n, na, probs));
    }
    let mut best: Option<(MemorylessPolicy, f64)> = None;
    for start in starts {
        let (pi, v) = ascend(p, &states, start)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((pi, v));
        }
    }
    let (mut policy, mut value) = best.expect("at least the uniform start");
    let mut grid_value = None;
    if states.len() <= GRID_MAX_STATES && na <= GRID_MAX_ACTIONS {
        let grid = grid_search_memoryless(p, GRID_RESOLUTION)?;
        grid_value = Some(grid.value);
        if grid.value > value {
            policy = grid.policy;
            value = grid.value;
        }
    }
    Ok(MemorylessSolution {
        policy,
        value,
        grid_value,
    })
}

fn simplex_grid(na: usize, resolution: usize) -> Vec<Vec<f64>> {
    let r = resolution as f64;
    match na {
        1 => vec![vec![1.0]],
        2 => (0..=resolution).map(|i| vec![i as f64 / r, (resolution - i) as f64 / r]).collect(),
        3 => {
            let mut out = Vec::new();
            for i in 0..=resolution {
                for j in 0..=resolution - i {
                    out.push(vec![i as f64 / r, j as f64 / r, (resolution - i - j) as f64 / r]);
                }
            }
            out
        }
        _ => unreachable!("grid limited to {GRID_MAX_ACTIONS} actions"),
    }
}

/// Per-member, per-grid-point reward and transition into the decision states.
struct RowTables {
    reward: Vec<f64>,
    /// `[point][decision state]`.
    into: Vec<[f64; 2]>,
}

/// Exhaustive search over memoryless policies whose decision-state rows lie
/// on the simplex grid with spacing `1 / resolution`.
pub fn grid_search_memoryless(p: &Posterior, resolution: usize) -> Result<MemorylessSolution> {
    let (n, na) = (p.num_states(), p.num_actions());
    let states = decision_states(p);
    if states.len() > GRID_MAX_STATES || na > GRID_MAX_ACTIONS {
        return Err(Error::InvalidParameter(format!(
            "grid search supports at most {GRID_MAX_STATES} decision states and {GRID_MAX_ACTIONS} actions"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    if states.is_empty() {
        let policy = MemorylessPolicy::uniform(n, na);
        let value = epistemic_return(p, &policy)?;
        return Ok(MemorylessSolution {
            policy,
            value,
            grid_value: Some(value),
        });
    }
    let points = simplex_grid(na, resolution);
    let gamma = p.discount();
    // tables[member][k] for k-th decision state.
    let tables: Vec<Vec<RowTables>> = p
        .mdps()
        .iter()
        .map(|m| {
            states
                .iter()
                .map(|&s| {
                    let mut reward = Vec::with_capacity(points.len());
                    let mut into = Vec::with_capacity(points.len());
                    for row in &points {
                        reward.push((0..na).map(|a| row[a] * m.reward(s, a)).sum());
                        let mut t = [0.0; 2];
                        for (k, &target) in states.iter().enumerate() {
                            t[k] = (0..na).map(|a| row[a] * m.transition_prob(s, a, target)).sum();
                        }
                        into.push(t);
                    }
                    RowTables { reward, into }
                })
                .collect()
        })
        .collect();
    let rho: Vec<Vec<f64>> = p
        .mdps()
        .iter()
        .map(|m| states.iter().map(|&s| m.initial()[s]).collect())
        .collect();
    let weights = p.weights();
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    if states.len() == 1 {
        for k in 0..points.len() {
            let mut j = 0.0;
            for (i, t) in tables.iter().enumerate() {
                let v = t[0].reward[k] / (1.0 - gamma * t[0].into[k][0]);
                j += weights[i] * rho[i][0] * v;
            }
            if j > best.0 {
                best = (j, k, 0);
            }
        }
    } else {
        for k1 in 0..points.len() {
            for k2 in 0..points.len() {
                let mut j = 0.0;
                for (i, t) in tables.iter().enumerate() {
                    let (r1, r2) = (t[0].reward[k1], t[1].reward[k2]);
                    let (a, b) = (1.0 - gamma * t[0].into[k1][0], -gamma * t[0].into[k1][1]);
                    let (c, d) = (-gamma * t[1].into[k2][0], 1.0 - gamma * t[1].into[k2][1]);
                    let det = a * d - b * c;
                    let v1 = (r1 * d - b * r2) / det;
                    let v2 = (a * r2 - c * r1) / det;
                    j += weights[i] * (rho[i][0] * v1 + rho[i][1] * v2);
                }
                if j > best.0 {
                    best = (j, k1, k2);
                }
            }
        }
    }
    let mut probs = MemorylessPolicy::uniform(n, na).probs().to_vec();
    for (k, &s) in states.iter().enumerate() {
        let idx = if k == 0 { best.1 } else { best.2 };
        probs[s * na..(s + 1) * na].copy_from_slice(&points[idx]);
    }
    let policy = MemorylessPolicy::from_probs_unchecked(n, na, probs);
    let value = epistemic_return(p, &policy)?;
    Ok(MemorylessSolution {
        policy,
        value,
        grid_value: Some(value),
    })
}
