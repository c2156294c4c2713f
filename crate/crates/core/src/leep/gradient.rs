//! Exact gradients of regularized returns for softmax-tabular observation
//! policies.
//!
//! For a state regularizer `ψ(s)`, the objective `J(π) + E_{s∼d^π}[ψ(s)]`
//! equals the return under the shaped reward `r + (1 - γ)ψ`. Its gradient is
//! the policy gradient under the shaped reward plus `Σ_s d(s) ∇ψ(s)` for the
//! explicit dependence of `ψ` on `θ`.

use super::{PolicyEnsemble, SoftmaxTabularPolicy};
use crate::epistemic::{ContextId, ContextualMdp};
use crate::error::{Error, Result};
use crate::mdp::{evaluate_with_reward, q_from_values, MemorylessPolicy};

/// `-α E_{s∼d}[KL(π(·|s) ‖ f(·|s))] + β E_{s∼d}[H(π(·|s))]`, with the link
/// `f` held fixed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Regularizer<'a> {
    pub kl: Option<(&'a MemorylessPolicy, f64)>,
    pub entropy: f64,
}

impl<'a> Regularizer<'a> {
    pub fn none() -> Self {
        Regularizer::default()
    }

    pub fn kl(link: &'a MemorylessPolicy, alpha: f64) -> Self {
        Regularizer {
            kl: Some((link, alpha)),
            entropy: 0.0,
        }
    }

    pub fn entropy(coef: f64) -> Self {
        Regularizer { kl: None, entropy: coef }
    }

    pub fn with_entropy(self, coef: f64) -> Self {
        Regularizer { entropy: coef, ..self }
    }
}

#[derive(Debug, Clone)]
pub struct GradientResult {
    /// Regularized objective.
    pub objective: f64,
    /// Unregularized return.
    pub ret: f64,
    /// `E_{s∼d}[KL(π ‖ f)]`, 0 without a link.
    pub kl: f64,
    /// `E_{s∼d}[H(π)]`.
    pub entropy: f64,
    /// With respect to the logits, row-major `(observation, action)`.
    pub grad: Vec<f64>,
}

struct Terms {
    /// Per observation: combined regularizer, KL and entropy.
    psi: Vec<f64>,
    kl: Vec<f64>,
    entropy: Vec<f64>,
    /// `∇_θ psi`, row-major.
    dpsi: Vec<f64>,
}

fn regularizer_terms(pi: &MemorylessPolicy, reg: Regularizer) -> Result<Terms> {
    let (no, na) = (pi.num_states(), pi.num_actions());
    let mut t = Terms {
        psi: vec![0.0; no],
        kl: vec![0.0; no],
        entropy: vec![0.0; no],
        dpsi: vec![0.0; no * na],
    };
    if let Some((link, _)) = reg.kl {
        if (link.num_states(), link.num_actions()) != (no, na) {
            return Err(Error::ShapeMismatch("link and member shapes differ".into()));
        }
    }
    for o in 0..no {
        let p = pi.row(o);
        let logs: Vec<f64> = p.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();
        let h = -p.iter().zip(&logs).map(|(x, l)| x * l).sum::<f64>();
        t.entropy[o] = h;
        t.psi[o] += reg.entropy * h;
        for b in 0..na {
            t.dpsi[o * na + b] -= reg.entropy * p[b] * (logs[b] + h);
        }
        if let Some((link, alpha)) = reg.kl {
            let f = link.row(o);
            let ratio: Vec<f64> = (0..na).map(|a| if p[a] > 0.0 { logs[a] - f[a].ln() } else { 0.0 }).collect();
            let kl: f64 = p.iter().zip(&ratio).map(|(x, r)| x * r).sum();
            t.kl[o] = kl;
            t.psi[o] -= alpha * kl;
            for b in 0..na {
                t.dpsi[o * na + b] -= alpha * p[b] * (ratio[b] - kl);
            }
        }
    }
    Ok(t)
}

/// Objective and exact logit gradient of `Σ_c w_c [J_c(π) + E_{d_c}[ψ]]`
/// where `ψ` is the regularizer.
pub fn regularized_gradient(
    cm: &ContextualMdp,
    weights: &[(ContextId, f64)],
    policy: &SoftmaxTabularPolicy,
    reg: Regularizer,
) -> Result<GradientResult> {
    let (no, na) = (cm.num_observations(), cm.num_actions());
    if (policy.num_states(), policy.num_actions()) != (no, na) {
        return Err(Error::ShapeMismatch(format!(
            "policy is {}x{}, observations are {no}x{na}",
            policy.num_states(),
            policy.num_actions()
        )));
    }
    let pi = policy.policy();
    let t = regularizer_terms(&pi, reg)?;
    let active = reg.kl.is_some() || reg.entropy != 0.0;
    let gamma = cm.discount();
    let scale = 1.0 / (1.0 - gamma);
    let mut out = GradientResult {
        objective: 0.0,
        ret: 0.0,
        kl: 0.0,
        entropy: 0.0,
        grad: vec![0.0; no * na],
    };
    for &(id, w) in weights {
        let ep = cm.context(id);
        let m = &ep.mdp;
        let mut reward = m.rewards().to_vec();
        if active {
            for (s, o) in ep.observation.iter().enumerate() {
                if let Some(o) = *o {
                    let bonus = (1.0 - gamma) * t.psi[o];
                    reward[s * na..(s + 1) * na].iter_mut().for_each(|r| *r += bonus);
                }
            }
        }
        let local = cm.state_policy(id, &pi)?;
        let ev = evaluate_with_reward(m, &local, &reward)?;
        let q = q_from_values(m, &reward, &ev.state_values);
        let (mut psi, mut kl, mut h) = (0.0, 0.0, 0.0);
        for (s, o) in ep.observation.iter().enumerate() {
            let Some(o) = *o else { continue };
            let d = ev.occupancy[s];
            if d == 0.0 {
                continue;
            }
            psi += d * t.psi[o];
            kl += d * t.kl[o];
            h += d * t.entropy[o];
            let row = pi.row(o);
            let v: f64 = row.iter().zip(&q[s * na..]).map(|(p, q)| p * q).sum();
            for b in 0..na {
                let pg = scale * d * row[b] * (q[s * na + b] - v);
                let direct = if active { d * t.dpsi[o * na + b] } else { 0.0 };
                out.grad[o * na + b] += w * (pg + direct);
            }
        }
        out.objective += w * ev.ret;
        out.ret += w * (ev.ret - psi);
        out.kl += w * kl;
        out.entropy += w * h;
    }
    Ok(out)
}

pub fn regularized_objective(
    cm: &ContextualMdp,
    weights: &[(ContextId, f64)],
    policy: &SoftmaxTabularPolicy,
    reg: Regularizer,
) -> Result<f64> {
    Ok(regularized_gradient(cm, weights, policy, reg)?.objective)
}

/// Gradient for member `i`: its return on its bootstrap resample minus
/// `α` times its expected KL divergence from the current link.
pub fn leep_gradient(member: usize, ensemble: &PolicyEnsemble, cm: &ContextualMdp) -> Result<GradientResult> {
    if member >= ensemble.len() {
        return Err(Error::InvalidParameter(format!("no member {member}")));
    }
    let link = ensemble.combined();
    let reg = Regularizer::kl(&link, ensemble.alpha);
    regularized_gradient(cm, &ensemble.bootstrap[member].weights(), &ensemble.members[member], reg)
}

pub fn entropy_gradient(
    cm: &ContextualMdp,
    weights: &[(ContextId, f64)],
    policy: &SoftmaxTabularPolicy,
    coef: f64,
) -> Result<GradientResult> {
    regularized_gradient(cm, weights, policy, Regularizer::entropy(coef))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic::{BootstrapSample, Posterior};
    use crate::leep::Link;
    use crate::mdp::MdpBuilder;
    use crate::random::{random_mdp, rng};
    use rand::Rng;

    fn bandit() -> ContextualMdp {
        let mut b = MdpBuilder::new(2, 2, 0.9);
        b.deterministic(0, 0, 1).deterministic(0, 1, 1).reward(0, 0, 1.0).reward(0, 1, -2.0);
        b.initial(0, 1.0).terminal(1);
        ContextualMdp::from_posterior(&Posterior::point(b.build().unwrap()).unwrap())
    }

    #[test]
    fn bandit_gradient_follows_advantages() {
        let cm = bandit();
        let g = regularized_gradient(&cm, &[(0, 1.0)], &SoftmaxTabularPolicy::new(2, 2), Regularizer::none()).unwrap();
        // d(0) = 1 - γ, so the gradient is π(b) A(b) = 0.5 · (1.5, -1.5).
        assert!((g.grad[0] - 0.75).abs() < 1e-12 && (g.grad[1] + 0.75).abs() < 1e-12);
        assert_eq!(&g.grad[2..], &[0.0, 0.0]);
        assert!((g.ret + 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_members_have_no_kl_gradient() {
        let cm = bandit();
        let member = SoftmaxTabularPolicy::from_logits(2, 2, vec![0.3, -0.4, 0.0, 0.0]).unwrap();
        let sample = BootstrapSample { draws: vec![0] };
        let plain = regularized_gradient(&cm, &[(0, 1.0)], &member, Regularizer::none()).unwrap();
        for link in [Link::Max, Link::Avg] {
            let e = PolicyEnsemble::new(vec![member.clone(); 3], vec![sample.clone(); 3], link, 5.0).unwrap();
            let g = leep_gradient(1, &e, &cm).unwrap();
            assert!(g.kl.abs() < 1e-15);
            for (a, b) in g.grad.iter().zip(&plain.grad) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn check_fd(cm: &ContextualMdp, weights: &[(ContextId, f64)], theta: &SoftmaxTabularPolicy, reg: Regularizer) {
        let g = regularized_gradient(cm, weights, theta, reg).unwrap();
        let h = 1e-5;
        for k in 0..theta.logits().len() {
            let mut up = theta.clone();
            let mut e = vec![0.0; theta.logits().len()];
            e[k] = 1.0;
            up.ascend(&e, h);
            let mut down = theta.clone();
            down.ascend(&e, -h);
            let fd = (regularized_objective(cm, weights, &up, reg).unwrap()
                - regularized_objective(cm, weights, &down, reg).unwrap())
                / (2.0 * h);
            let err = (fd - g.grad[k]).abs() / g.grad[k].abs().max(1e-3);
            assert!(err < 1e-5, "logit {k}: fd {fd} vs {}", g.grad[k]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut g = rng(8);
        let ms: Vec<_> = (0..3).map(|i| random_mdp(200 + i, 3, 2, 0.8)).collect();
        let cm = ContextualMdp::from_posterior(&Posterior::uniform(ms).unwrap());
        let weights = [(0, 0.5), (2, 0.5)];
        let logits: Vec<f64> = (0..6).map(|_| g.gen_range(-1.0..1.0)).collect();
        let theta = SoftmaxTabularPolicy::from_logits(3, 2, logits).unwrap();
        let link = SoftmaxTabularPolicy::from_logits(3, 2, (0..6).map(|_| g.gen_range(-1.0..1.0)).collect())
            .unwrap()
            .policy();
        check_fd(&cm, &weights, &theta, Regularizer::none());
        check_fd(&cm, &weights, &theta, Regularizer::kl(&link, 0.7));
        check_fd(&cm, &weights, &theta, Regularizer::entropy(0.3));
        check_fd(&cm, &weights, &theta, Regularizer::kl(&link, 0.4).with_entropy(0.2));
    }
}
