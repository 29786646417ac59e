//! Discrete soft actor-critic.
//!
//! The actor maps a state to one logit per device. Two critics map a state to
//! one action value per device; each has a Polyak-averaged target copy. The
//! entropy temperature is learned in log space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::ReplayBuffer;
use super::mlp::{Activations, Mlp};
use super::optim::{Optimizer, OptimizerKind};
use crate::env::{Action, StateVector, Transition};
use crate::{Error, Result, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    /// Hidden layer widths shared by actor and critics.
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Target entropy as a fraction of `ln N`.
    pub target_entropy_ratio: f64,
    pub initial_alpha: f64,
    pub optimizer: OptimizerKind,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            alpha_lr: 3e-4,
            batch_size: 128,
            buffer_capacity: 50_000,
            target_entropy_ratio: 0.6,
            initial_alpha: 1.0,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::config("sac.hidden", "layer widths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("sac.gamma", "must be in [0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("sac.tau", "must be in (0, 1]"));
        }
        for (key, lr) in [
            ("sac.actor_lr", self.actor_lr),
            ("sac.critic_lr", self.critic_lr),
            ("sac.alpha_lr", self.alpha_lr),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::config(key, "must be positive and finite"));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::config("sac.batch_size", "must be positive"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::config("sac.buffer_capacity", "must be at least batch_size"));
        }
        if !(self.target_entropy_ratio >= 0.0 && self.target_entropy_ratio <= 1.0) {
            return Err(Error::config("sac.target_entropy_ratio", "must be in [0, 1]"));
        }
        if !(self.initial_alpha > 0.0 && self.initial_alpha.is_finite()) {
            return Err(Error::config("sac.initial_alpha", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, state_dim: usize, num_actions: usize) -> Vec<usize> {
        std::iter::once(state_dim)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(num_actions))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        [self.critic1_loss, self.critic2_loss, self.actor_loss, self.alpha_loss, self.alpha]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMode {
    Sample,
    Greedy,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `logit - max - ln(sum exp(logit - max))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - max - log_sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `sum_a pi(a) * (q(a) - alpha * ln pi(a))`.
pub fn soft_value(probs: &[f64], log_probs: &[f64], min_q: &[f64], alpha: f64) -> f64 {
    probs
        .iter()
        .zip(log_probs)
        .zip(min_q)
        .map(|((p, lp), q)| p * (q - alpha * lp))
        .sum()
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub(crate) config: SacConfig,
    pub(crate) state_dim: usize,
    pub(crate) num_actions: usize,
    pub(crate) actor: Mlp,
    pub(crate) critic1: Mlp,
    pub(crate) critic2: Mlp,
    pub(crate) target1: Mlp,
    pub(crate) target2: Mlp,
    pub(crate) log_alpha: f64,
    actor_opt: Optimizer,
    critic1_opt: Optimizer,
    critic2_opt: Optimizer,
    alpha_opt: Optimizer,
}

fn flatten<'a>(states: impl Iterator<Item = &'a StateVector>, dim: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for s in states {
        debug_assert_eq!(s.len(), dim);
        out.extend_from_slice(s.as_slice());
    }
    out
}

impl SacAgent {
    pub fn new(state_dim: usize, num_actions: usize, config: SacConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        if num_actions == 0 {
            return Err(Error::config("scenario.num_devices", "need at least one action"));
        }
        let sizes = config.layer_sizes(state_dim, num_actions);
        let actor = Mlp::new(&sizes, rng)?;
        let critic1 = Mlp::new(&sizes, rng)?;
        let critic2 = Mlp::new(&sizes, rng)?;
        let log_alpha = config.initial_alpha.ln();
        Ok(Self::assemble(
            config,
            state_dim,
            num_actions,
            [actor, critic1.clone(), critic2.clone(), critic1, critic2],
            log_alpha,
        ))
    }

    /// Builds an agent from explicit networks: actor, critic1, critic2, target1, target2.
    pub(crate) fn assemble(config: SacConfig, state_dim: usize, num_actions: usize, nets: [Mlp; 5], log_alpha: f64) -> Self {
        let [actor, critic1, critic2, target1, target2] = nets;
        let kind = config.optimizer;
        Self {
            actor_opt: Optimizer::new(kind, config.actor_lr),
            critic1_opt: Optimizer::new(kind, config.critic_lr),
            critic2_opt: Optimizer::new(kind, config.critic_lr),
            alpha_opt: Optimizer::new(kind, config.alpha_lr),
            config,
            state_dim,
            num_actions,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            log_alpha,
        }
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, log_alpha: f64) {
        self.log_alpha = log_alpha;
    }

    pub fn target_entropy(&self) -> f64 {
        self.config.target_entropy_ratio * (self.num_actions as f64).ln()
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut Mlp {
        &mut self.actor
    }

    pub fn critics(&self) -> [&Mlp; 2] {
        [&self.critic1, &self.critic2]
    }

    pub fn critics_mut(&mut self) -> [&mut Mlp; 2] {
        [&mut self.critic1, &mut self.critic2]
    }

    pub fn targets(&self) -> [&Mlp; 2] {
        [&self.target1, &self.target2]
    }

    pub fn targets_mut(&mut self) -> [&mut Mlp; 2] {
        [&mut self.target1, &mut self.target2]
    }

    pub fn is_finite(&self) -> bool {
        self.log_alpha.is_finite()
            && [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2]
                .iter()
                .all(|n| n.is_finite())
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::Shape {
                expected: self.state_dim,
                actual: state.len(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.check_state(state)?;
        self.actor.forward(state.as_slice())
    }

    pub fn policy(&self, state: &StateVector) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(state)?))
    }

    pub fn select_action(&self, state: &StateVector, mode: SelectMode, rng: &mut SeededRng) -> Result<Action> {
        let probs = self.policy(state)?;
        Ok(Action(match mode {
            SelectMode::Greedy => argmax(&probs),
            SelectMode::Sample => sample_categorical(&probs, rng),
        }))
    }

    /// Soft Bellman targets from the current actor and the target critics.
    pub fn critic_target(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let mut targets: Vec<f64> = batch.iter().map(|t| t.reward).collect();
        let live: Vec<usize> = (0..batch.len()).filter(|&i| !batch[i].done).collect();
        if live.is_empty() {
            return Ok(targets);
        }
        let next = flatten(live.iter().map(|&i| &batch[i].next_state), self.state_dim);
        let n = live.len();
        let logits = self.actor.forward_batch(&next, n)?;
        let q1 = self.target1.forward_batch(&next, n)?;
        let q2 = self.target2.forward_batch(&next, n)?;
        let alpha = self.alpha();
        let a = self.num_actions;
        for (row, &i) in live.iter().enumerate() {
            let span = row * a..(row + 1) * a;
            let log_probs = log_softmax(&logits.output()[span.clone()]);
            let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
            let min_q: Vec<f64> = q1.output()[span.clone()]
                .iter()
                .zip(&q2.output()[span])
                .map(|(x, y)| x.min(*y))
                .collect();
            targets[i] += self.config.gamma * soft_value(&probs, &log_probs, &min_q, alpha);
        }
        Ok(targets)
    }

    /// One gradient step on both critics, the actor and the temperature,
    /// followed by a Polyak update of the targets.
    pub fn update(&mut self, buffer: &ReplayBuffer, rng: &mut SeededRng) -> Result<LossReport> {
        let batch = buffer.sample(rng, self.config.batch_size)?;
        self.update_on(&batch)
    }

    pub fn update_on(&mut self, batch: &[&Transition]) -> Result<LossReport> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::NotEnoughData { needed: 1, available: 0 });
        }
        let a = self.num_actions;
        for t in batch {
            self.check_state(&t.state)?;
            if t.action.0 >= a {
                return Err(Error::InvalidAction {
                    action: t.action.0,
                    num_devices: a,
                });
            }
        }
        let targets = self.critic_target(batch)?;
        let states = flatten(batch.iter().map(|t| &t.state), self.state_dim);

        let critic1_loss = critic_step(&mut self.critic1, &mut self.critic1_opt, &states, batch, &targets, a)?;
        let critic2_loss = critic_step(&mut self.critic2, &mut self.critic2_opt, &states, batch, &targets, a)?;

        // Actor step against the freshly updated critics, held fixed.
        let acts = self.actor.forward_batch(&states, b)?;
        let q1 = self.critic1.forward_batch(&states, b)?;
        let q2 = self.critic2.forward_batch(&states, b)?;
        let alpha = self.alpha();
        let target_entropy = self.target_entropy();
        let mut upstream = vec![0.0; b * a];
        let mut actor_loss = 0.0;
        let mut entropy_gap = 0.0;
        for row in 0..b {
            let span = row * a..(row + 1) * a;
            let log_probs = log_softmax(&acts.output()[span.clone()]);
            let probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
            let g: Vec<f64> = q1.output()[span.clone()]
                .iter()
                .zip(&q2.output()[span.clone()])
                .zip(&log_probs)
                .map(|((x, y), lp)| alpha * lp - x.min(*y))
                .collect();
            let expected: f64 = probs.iter().zip(&g).map(|(p, gi)| p * gi).sum();
            actor_loss += expected;
            for (j, d) in upstream[span].iter_mut().enumerate() {
                *d = probs[j] * (g[j] - expected) / b as f64;
            }
            // sum_a pi ln pi + H*
            entropy_gap += probs.iter().zip(&log_probs).map(|(p, lp)| p * lp).sum::<f64>() + target_entropy;
        }
        actor_loss /= b as f64;
        entropy_gap /= b as f64;
        apply(&mut self.actor, &mut self.actor_opt, &acts, &upstream)?;

        let alpha_loss = -self.log_alpha * entropy_gap;
        let mut log_alpha = [self.log_alpha];
        self.alpha_opt.step(vec![&mut log_alpha[..]], &[&[-entropy_gap]]);
        self.log_alpha = log_alpha[0];

        self.polyak_update(self.config.tau);

        let report = LossReport {
            critic1_loss,
            critic2_loss,
            actor_loss,
            alpha_loss,
            alpha: self.alpha(),
        };
        if !report.is_finite() {
            return Err(Error::NonFinite("SAC update".into()));
        }
        Ok(report)
    }

    /// `target <- tau * online + (1 - tau) * target`, elementwise.
    pub fn polyak_update(&mut self, tau: f64) {
        for (online, target) in [(&self.critic1, &mut self.target1), (&self.critic2, &mut self.target2)] {
            for (src, dst) in online.params().into_iter().zip(target.params_mut()) {
                for (s, d) in src.iter().zip(dst.iter_mut()) {
                    *d = tau * s + (1.0 - tau) * *d;
                }
            }
        }
    }

    /// Mean squared critic error on a batch, without updating.
    pub fn critic_losses(&self, batch: &[&Transition]) -> Result<(f64, f64)> {
        let targets = self.critic_target(batch)?;
        let states = flatten(batch.iter().map(|t| &t.state), self.state_dim);
        let mse = |net: &Mlp| -> Result<f64> {
            let out = net.forward_batch(&states, batch.len())?;
            Ok(batch
                .iter()
                .enumerate()
                .map(|(i, t)| (out.output()[i * self.num_actions + t.action.0] - targets[i]).powi(2))
                .sum::<f64>()
                / batch.len() as f64)
        };
        Ok((mse(&self.critic1)?, mse(&self.critic2)?))
    }
}

fn apply(net: &mut Mlp, opt: &mut Optimizer, acts: &Activations, upstream: &[f64]) -> Result<()> {
    let grads = net.backward_batch(acts, upstream)?;
    opt.step(net.params_mut(), &grads.slices());
    Ok(())
}

fn critic_step(
    net: &mut Mlp,
    opt: &mut Optimizer,
    states: &[f64],
    batch: &[&Transition],
    targets: &[f64],
    num_actions: usize,
) -> Result<f64> {
    let b = batch.len();
    let acts = net.forward_batch(states, b)?;
    let mut upstream = vec![0.0; b * num_actions];
    let mut loss = 0.0;
    for (i, t) in batch.iter().enumerate() {
        let col = i * num_actions + t.action.0;
        let err = acts.output()[col] - targets[i];
        loss += err * err;
        upstream[col] = 2.0 * err / b as f64;
    }
    apply(net, opt, &acts, &upstream)?;
    Ok(loss / b as f64)
}

/// Inverse-CDF draw; falls back to the last positive entry on rounding.
pub fn sample_categorical(probs: &[f64], rng: &mut SeededRng) -> usize {
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
