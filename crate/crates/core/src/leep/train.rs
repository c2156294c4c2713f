//! Training loops: LEEP, an entropy-regularized single policy, and an
//! unregularized ensemble evaluated as a mixture.

use std::fmt::Write as _;

use super::config::ConfigMap;
use super::gradient::{regularized_gradient, Regularizer};
use super::{Link, SoftmaxTabularPolicy};
use crate::epistemic::{bootstrap_posterior, BootstrapSample, ContextSet, ContextualMdp};
use crate::error::{Error, Result};
use crate::mdp::MemorylessPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n: usize,
    pub alpha: f64,
    pub iterations: usize,
    pub step_size: f64,
    pub entropy_coef: f64,
    pub seed: u64,
    /// Evaluate train and test returns every this many iterations.
    pub eval_every: usize,
    pub link: Link,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n: 4,
            alpha: 1.0,
            iterations: 2000,
            step_size: 0.1,
            entropy_coef: 0.01,
            seed: 0,
            eval_every: 1,
            link: Link::Max,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| Error::InvalidParameter(msg))
    }

    /// First invalid field, as `(config key, message)`.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.n == 0 {
            return Err(("n", "ensemble size n must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(("iterations", "iterations must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(("step_size", format!("step_size {} must be positive", self.step_size)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(("alpha", format!("alpha {} must be nonnegative", self.alpha)));
        }
        if !(self.entropy_coef >= 0.0 && self.entropy_coef.is_finite()) {
            return Err(("entropy_coef", format!("entropy_coef {} must be nonnegative", self.entropy_coef)));
        }
        if self.eval_every == 0 {
            return Err(("eval_every", "eval_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Reads the training keys, falling back to defaults. Other keys are
    /// left for the caller. Range errors report the key's line.
    pub fn from_config(c: &ConfigMap) -> Result<Self> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            n: c.get_or("n", d.n)?,
            alpha: c.get_or("alpha", d.alpha)?,
            iterations: c.get_or("iterations", d.iterations)?,
            step_size: c.get_or("step_size", d.step_size)?,
            entropy_coef: c.get_or("entropy_coef", d.entropy_coef)?,
            seed: c.get_or("seed", d.seed)?,
            eval_every: c.get_or("eval_every", d.eval_every)?,
            link: c.get_or("link", d.link)?,
        };
        cfg.check().map_err(|(key, msg)| Error::parse(c.line(key), msg))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    /// Combined policy after this iteration; NaN when not evaluated.
    pub train_return: f64,
    pub test_return: f64,
    /// Mean over members of `E_{s∼d_i}[KL(π_i ‖ f)]` before the update.
    pub kl: f64,
    /// Norm of the concatenated member gradients.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,train_return,test_return,kl,grad_norm\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iter, r.train_return, r.test_return, r.kl, r.grad_norm
            );
        }
        out
    }

    /// The last row with evaluated returns.
    pub fn last_evaluated(&self) -> Option<&LogRow> {
        self.rows.iter().rev().find(|r| !r.train_return.is_nan())
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    /// The deployed policy: the link (or mixture) of the trained members.
    pub policy: MemorylessPolicy,
    pub members: Vec<SoftmaxTabularPolicy>,
    pub bootstrap: Vec<BootstrapSample>,
    pub log: TrainLog,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Leep { alpha: f64, link: Link },
    Entropy,
    Mixture,
}

fn mean_or_nan(cm: &ContextualMdp, set: &ContextSet, pi: &MemorylessPolicy) -> Result<f64> {
    if set.is_empty() {
        Ok(f64::NAN)
    } else {
        cm.mean_return(set.ids(), pi)
    }
}

/// With a single member the resample is skipped and the member trains on
/// the training set itself.
fn resample(train: &ContextSet, n: usize, seed: u64) -> Result<Vec<BootstrapSample>> {
    if n == 1 {
        if train.is_empty() {
            return Err(Error::Empty("no training contexts"));
        }
        return Ok(vec![BootstrapSample {
            draws: train.ids().to_vec(),
        }]);
    }
    bootstrap_posterior(train, n, seed)
}

fn run(
    cm: &ContextualMdp,
    train: &ContextSet,
    test: &ContextSet,
    cfg: &TrainConfig,
    n: usize,
    mode: Mode,
) -> Result<TrainResult> {
    cfg.validate()?;
    let bootstrap = resample(train, n, cfg.seed)?;
    let weights: Vec<_> = bootstrap.iter().map(BootstrapSample::weights).collect();
    let (no, na) = (cm.num_observations(), cm.num_actions());
    let mut members = vec![SoftmaxTabularPolicy::new(no, na); n];
    let link = match mode {
        Mode::Leep { link, .. } => link,
        Mode::Entropy | Mode::Mixture => Link::Avg,
    };
    let mut log = TrainLog::default();
    for iter in 1..=cfg.iterations {
        let policies: Vec<_> = members.iter().map(SoftmaxTabularPolicy::policy).collect();
        let combined = link.apply(&policies)?;
        let reg = match mode {
            Mode::Leep { alpha, .. } => Regularizer::kl(&combined, alpha),
            // α = 0 keeps the objective unpenalized while still measuring disagreement.
            Mode::Mixture => Regularizer::kl(&combined, 0.0),
            Mode::Entropy => Regularizer::none(),
        }
        .with_entropy(cfg.entropy_coef);
        let mut sq = 0.0;
        let mut kl = 0.0;
        let mut grads = Vec::with_capacity(n);
        for (member, w) in members.iter().zip(&weights) {
            let g = regularized_gradient(cm, w, member, reg)?;
            sq += g.grad.iter().map(|x| x * x).sum::<f64>();
            kl += g.kl / n as f64;
            grads.push(g.grad);
        }
        for (member, g) in members.iter_mut().zip(&grads) {
            member.ascend(g, cfg.step_size);
        }
        let (train_return, test_return) = if iter % cfg.eval_every == 0 || iter == cfg.iterations {
            let policies: Vec<_> = members.iter().map(SoftmaxTabularPolicy::policy).collect();
            let combined = link.apply(&policies)?;
            (mean_or_nan(cm, train, &combined)?, mean_or_nan(cm, test, &combined)?)
        } else {
            (f64::NAN, f64::NAN)
        };
        log.rows.push(LogRow {
            iter,
            train_return,
            test_return,
            kl,
            grad_norm: sq.sqrt(),
        });
    }
    let policies: Vec<_> = members.iter().map(SoftmaxTabularPolicy::policy).collect();
    Ok(TrainResult {
        policy: link.apply(&policies)?,
        members,
        bootstrap,
        log,
    })
}

/// Each member ascends its entropy-regularized bootstrap return minus `α`
/// times its expected KL divergence from the link of the current members,
/// which is held fixed within an iteration.
pub fn train_leep(cm: &ContextualMdp, train: &ContextSet, test: &ContextSet, cfg: &TrainConfig) -> Result<TrainResult> {
    let mode = Mode::Leep {
        alpha: cfg.alpha,
        link: cfg.link,
    };
    run(cm, train, test, cfg, cfg.n, mode)
}

/// One policy on all training contexts with an entropy bonus.
pub fn train_baseline_pg(
    cm: &ContextualMdp,
    train: &ContextSet,
    test: &ContextSet,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    run(cm, train, test, cfg, 1, Mode::Entropy)
}

/// Independent members on bootstrap resamples with the entropy bonus but no
/// KL penalty, deployed as their uniform mixture.
pub fn train_ensemble_noreg(
    cm: &ContextualMdp,
    train: &ContextSet,
    test: &ContextSet,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    run(cm, train, test, cfg, cfg.n, Mode::Mixture)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizationReport {
    pub train_return: f64,
    pub test_return: f64,
    /// `train - test`.
    pub gap: f64,
}

pub fn generalization_report(
    cm: &ContextualMdp,
    policy: &MemorylessPolicy,
    train: &ContextSet,
    test: &ContextSet,
) -> Result<GeneralizationReport> {
    let train_return = cm.mean_return(train.ids(), policy)?;
    let test_return = cm.mean_return(test.ids(), policy)?;
    Ok(GeneralizationReport {
        train_return,
        test_return,
        gap: train_return - test_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic::Posterior;
    use crate::mdp::MdpBuilder;
    use crate::worlds::make_stay_switch;

    fn bandit_contexts() -> ContextualMdp {
        let mut b = MdpBuilder::new(2, 3, 0.5);
        b.deterministic(0, 0, 1).deterministic(0, 1, 1).deterministic(0, 2, 1);
        b.reward(0, 0, 0.2).reward(0, 1, 1.0).reward(0, 2, -1.0).initial(0, 1.0).terminal(1);
        ContextualMdp::from_posterior(&Posterior::point(b.build().unwrap()).unwrap())
    }

    fn cfg(iterations: usize) -> TrainConfig {
        TrainConfig {
            iterations,
            step_size: 1.0,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn unregularized_bandit_converges_to_greedy() {
        let cm = bandit_contexts();
        let c = TrainConfig {
            entropy_coef: 0.0,
            ..cfg(3000)
        };
        let r = train_baseline_pg(&cm, &cm.all(), &ContextSet::range(0, 0), &c).unwrap();
        assert!(r.policy.prob(0, 1) > 0.99);
        assert_eq!(r.log.len(), 3000);
        assert!(r.log.rows[0].test_return.is_nan());
    }

    #[test]
    fn large_entropy_bonus_keeps_policy_uniform() {
        let cm = bandit_contexts();
        let c = TrainConfig {
            entropy_coef: 1000.0,
            step_size: 0.001,
            ..cfg(500)
        };
        let r = train_baseline_pg(&cm, &cm.all(), &cm.all(), &c).unwrap();
        assert!(r.policy.row(0).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-3));
    }

    #[test]
    fn single_member_leep_is_plain_policy_gradient() {
        let cm = bandit_contexts();
        let c = TrainConfig {
            n: 1,
            alpha: 0.0,
            entropy_coef: 0.0,
            ..cfg(50)
        };
        let a = train_leep(&cm, &cm.all(), &cm.all(), &c).unwrap();
        let b = train_baseline_pg(&cm, &cm.all(), &cm.all(), &c).unwrap();
        let n = train_ensemble_noreg(&cm, &cm.all(), &cm.all(), &c).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(n.policy, b.policy);
    }

    #[test]
    fn training_is_deterministic_and_logs_every_iteration() {
        let p = make_stay_switch(0.1, 20.0, 0.9).unwrap();
        let cm = ContextualMdp::from_posterior(&p);
        let c = TrainConfig {
            eval_every: 4,
            ..cfg(10)
        };
        let a = train_leep(&cm, &cm.all(), &cm.all(), &c).unwrap();
        let b = train_leep(&cm, &cm.all(), &cm.all(), &c).unwrap();
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.log.len(), 10);
        assert!(a.log.rows[0].train_return.is_nan());
        assert!(!a.log.rows[3].train_return.is_nan() && !a.log.rows[9].train_return.is_nan());
        assert_eq!(a.log.to_csv().lines().next(), Some("iter,train_return,test_return,kl,grad_norm"));
        assert_eq!(a.log.to_csv().lines().count(), 11);
    }

    #[test]
    fn report_gap_vanishes_on_identical_splits() {
        let p = make_stay_switch(0.3, 2.0, 0.9).unwrap();
        let cm = ContextualMdp::from_posterior(&p);
        let pi = MemorylessPolicy::uniform(2, 2);
        let r = generalization_report(&cm, &pi, &cm.all(), &cm.all()).unwrap();
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn config_keys_and_validation() {
        let c = ConfigMap::parse("n = 2\nalpha = 0.5\nlink = avg\niterations = 7\n").unwrap();
        let t = TrainConfig::from_config(&c).unwrap();
        assert_eq!((t.n, t.alpha, t.link, t.iterations), (2, 0.5, Link::Avg, 7));
        assert_eq!(t.step_size, 0.1);
        let bad = ConfigMap::parse("n = 0\n").unwrap();
        assert!(TrainConfig::from_config(&bad).is_err());
        let typo = ConfigMap::parse("link = min\n").unwrap();
        assert!(matches!(TrainConfig::from_config(&typo), Err(Error::Parse { line: 1, .. })));
    }
}
