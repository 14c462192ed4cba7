//! Twin-delayed deep deterministic policy gradient (TD3).
//!
//! The actor maps a one-hot day to `tanh` output in `(-1, 1)`, scaled to the
//! action bounds. Critics see the one-hot day concatenated with the action
//! rescaled to `[-1, 1]`. Per update:
//!
//! 1. targets `y = r + γ · min(Q'_1, Q'_2)(s', a')` where `a'` is the target
//!    actor's action plus clipped Gaussian smoothing noise;
//! 2. one Adam step on each critic's mean squared error against `y`;
//! 3. every `policy_delay`-th update, one ascent step of the actor on the
//!    mean of `Q_1(s, μ(s))` and a polyak step on all three target networks.
//!
//! The environment's `done` flag marks a time limit, so targets always
//! bootstrap.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{Day, Transition};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Mlp};
use crate::replay::ReplayBuffer;
use crate::DAYS;

/// TD3 hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Td3Hyper {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub exploration_noise_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub action_low: f64,
    pub action_high: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Td3Hyper {
    pub const NOISE_STD_RATIO: f64 = 1.0 / 30.0;

    /// Reference settings for an action range: γ 0.99, τ 0.005, delay 2,
    /// batch 256, lr 1e-3, hidden layers 64×32×16, exploration and smoothing
    /// noise at 1/30 of the range, smoothing clip at twice that.
    pub fn defaults_for(action_low: f64, action_high: f64) -> Self {
        let noise = (action_high - action_low) * Self::NOISE_STD_RATIO;
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            exploration_noise_std: noise,
            target_noise_std: noise,
            target_noise_clip: 2.0 * noise,
            batch_size: 256,
            lr: 1e-3,
            action_low,
            action_high,
            actor_hidden: vec![64, 32, 16],
            critic_hidden: vec![64, 32, 16],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be >= 1");
        }
        if !(self.exploration_noise_std >= 0.0
            && self.target_noise_std >= 0.0
            && self.target_noise_clip >= 0.0)
        {
            return bad("noise parameters must be >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if !(self.action_low < self.action_high) {
            return bad("action_low must be < action_high");
        }
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }

    pub fn actor_layers(&self) -> Vec<usize> {
        [&[DAYS][..], &self.actor_hidden, &[1]].concat()
    }

    pub fn critic_layers(&self) -> Vec<usize> {
        [&[DAYS + 1][..], &self.critic_hidden, &[1]].concat()
    }

    fn half_range(&self) -> f64 {
        0.5 * (self.action_high - self.action_low)
    }

    /// Action in bound units to the critic's `[-1, 1]` input coordinate.
    fn normalize(&self, action: f64) -> f64 {
        (action - self.action_low) / self.half_range() - 1.0
    }

    fn clip(&self, action: f64) -> f64 {
        action.clamp(self.action_low, self.action_high)
    }
}

/// Maps a `tanh` output in `(-1, 1)` linearly onto `(low, high)`.
pub fn scale_action(raw: f64, low: f64, high: f64) -> f64 {
    low + (raw + 1.0) * 0.5 * (high - low)
}

/// Per-update diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrainDiagnostics {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Mean critic-1 value of the actor's actions, when the actor was updated.
    pub actor_objective: Option<f64>,
    pub update_counter: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Td3Agent {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target_actor: Mlp,
    pub target_critic1: Mlp,
    pub target_critic2: Mlp,
    actor_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    update_counter: u64,
    critic_updates: u64,
    actor_updates: u64,
    hyper: Td3Hyper,
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(hyper: Td3Hyper, rng: &mut R) -> Result<Self> {
        hyper.validate()?;
        let actor = Mlp::new(
            &hyper.actor_layers(),
            Activation::Relu,
            Activation::Tanh,
            rng,
        )?;
        let critic1 = Mlp::new(
            &hyper.critic_layers(),
            Activation::Relu,
            Activation::Linear,
            rng,
        )?;
        let critic2 = Mlp::new(
            &hyper.critic_layers(),
            Activation::Relu,
            Activation::Linear,
            rng,
        )?;
        Self::from_networks(hyper, actor, critic1, critic2)
    }

    /// Agent built around given main networks; targets start as copies.
    pub fn from_networks(hyper: Td3Hyper, actor: Mlp, critic1: Mlp, critic2: Mlp) -> Result<Self> {
        hyper.validate()?;
        if actor.input_size() != DAYS || actor.output_size() != 1 {
            return Err(Error::Config(format!(
                "actor must map {DAYS} inputs to 1 output"
            )));
        }
        for c in [&critic1, &critic2] {
            if c.input_size() != DAYS + 1 || c.output_size() != 1 {
                return Err(Error::Config(format!(
                    "critics must map {} inputs to 1 output",
                    DAYS + 1
                )));
            }
        }
        Ok(Self {
            actor_opt: AdamState::new(&actor),
            critic1_opt: AdamState::new(&critic1),
            critic2_opt: AdamState::new(&critic2),
            target_actor: actor.clone(),
            target_critic1: critic1.clone(),
            target_critic2: critic2.clone(),
            actor,
            critic1,
            critic2,
            update_counter: 0,
            critic_updates: 0,
            actor_updates: 0,
            hyper,
        })
    }

    pub fn hyper(&self) -> &Td3Hyper {
        &self.hyper
    }

    pub fn update_counter(&self) -> u64 {
        self.update_counter
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    /// Deterministic policy action.
    pub fn policy_action(&self, state: Day) -> f64 {
        let raw = self
            .actor
            .predict(&state.one_hot())
            .expect("actor input width is DAYS")[0];
        self.hyper.clip(scale_action(
            raw,
            self.hyper.action_low,
            self.hyper.action_high,
        ))
    }

    /// Policy action plus `N(0, noise_std)` exploration noise, clipped to the bounds.
    pub fn select_action<R: Rng + ?Sized>(&self, state: Day, noise_std: f64, rng: &mut R) -> f64 {
        let a = self.policy_action(state);
        if noise_std > 0.0 {
            let eps: f64 = StandardNormal.sample(rng);
            self.hyper.clip(a + noise_std * eps)
        } else {
            a
        }
    }

    fn critic_inputs(&self, states: impl Iterator<Item = (Day, f64)>, batch: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(batch * (DAYS + 1));
        for (s, a) in states {
            x.extend_from_slice(&s.one_hot());
            x.push(self.hyper.normalize(a));
        }
        x
    }

    fn one_hots(states: impl Iterator<Item = Day>, batch: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(batch * DAYS);
        states.for_each(|s| x.extend_from_slice(&s.one_hot()));
        x
    }

    /// Smoothed target actions `clip(μ'(s') + clip(ε, -c, c), low, high)`.
    pub fn target_actions<R: Rng + ?Sized>(
        &self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let h = &self.hyper;
        let x = Self::one_hots(batch.iter().map(|t| t.next_state), batch.len());
        let raw = self.target_actor.forward_batch(&x, batch.len())?;
        Ok(raw
            .output()
            .iter()
            .map(|&r| {
                let noise = if h.target_noise_std > 0.0 {
                    let eps: f64 = StandardNormal.sample(rng);
                    (h.target_noise_std * eps).clamp(-h.target_noise_clip, h.target_noise_clip)
                } else {
                    0.0
                };
                h.clip(scale_action(r, h.action_low, h.action_high) + noise)
            })
            .collect())
    }

    /// Bootstrap targets for a batch, from the target networks only.
    pub fn compute_targets<R: Rng + ?Sized>(
        &self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        let next_actions = self.target_actions(batch, rng)?;
        let x = self.critic_inputs(
            batch
                .iter()
                .zip(&next_actions)
                .map(|(t, &a)| (t.next_state, a)),
            batch.len(),
        );
        let q1 = self.target_critic1.forward_batch(&x, batch.len())?;
        let q2 = self.target_critic2.forward_batch(&x, batch.len())?;
        Ok(batch
            .iter()
            .zip(q1.output().iter().zip(q2.output()))
            .map(|(t, (&a, &b))| t.reward + self.hyper.gamma * a.min(b))
            .collect())
    }

    /// One Adam step on both critics against freshly computed targets;
    /// returns the pre-step mean squared errors.
    pub fn update_critics<R: Rng + ?Sized>(
        &mut self,
        batch: &[Transition],
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        let targets = self.compute_targets(batch, rng)?;
        self.update_critics_toward(batch, &targets)
    }

    /// Critic update against explicit targets.
    pub fn update_critics_toward(
        &mut self,
        batch: &[Transition],
        targets: &[f64],
    ) -> Result<(f64, f64)> {
        if batch.is_empty() || batch.len() != targets.len() {
            return Err(Error::Usage(
                "batch and targets must be nonempty and of equal length".into(),
            ));
        }
        let n = batch.len();
        let x = self.critic_inputs(batch.iter().map(|t| (t.state, t.action)), n);
        let lr = self.hyper.lr;
        let step = |critic: &mut Mlp, opt: &mut AdamState| -> Result<f64> {
            let cache = critic.forward_batch(&x, n)?;
            let resid: Vec<f64> = cache
                .output()
                .iter()
                .zip(targets)
                .map(|(q, y)| q - y)
                .collect();
            let loss = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("critic loss is {loss}")));
            }
            let upstream: Vec<f64> = resid.iter().map(|r| 2.0 * r / n as f64).collect();
            let (grads, _) = critic.backward(&cache, &upstream)?;
            opt.step(critic, &grads, lr)?;
            Ok(loss)
        };
        let l1 = step(&mut self.critic1, &mut self.critic1_opt)?;
        let l2 = step(&mut self.critic2, &mut self.critic2_opt)?;
        self.critic_updates += 1;
        Ok((l1, l2))
    }

    /// Mean `Q_1(s, μ(s))` over the batch states.
    pub fn actor_objective(&self, batch: &[Transition]) -> Result<f64> {
        let n = batch.len();
        let h = &self.hyper;
        let raw = self
            .actor
            .forward_batch(&Self::one_hots(batch.iter().map(|t| t.state), n), n)?;
        let actions = raw
            .output()
            .iter()
            .map(|&r| scale_action(r, h.action_low, h.action_high));
        let x = self.critic_inputs(batch.iter().map(|t| t.state).zip(actions), n);
        let q = self.critic1.forward_batch(&x, n)?;
        Ok(q.output().iter().sum::<f64>() / n as f64)
    }

    /// One ascent step of the actor on mean critic-1 value, then polyak
    /// updates of all targets. Returns the pre-step objective.
    pub fn update_actor_and_targets(&mut self, batch: &[Transition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Usage("empty batch".into()));
        }
        let n = batch.len();
        let (low, high) = (self.hyper.action_low, self.hyper.action_high);
        let actor_cache = self
            .actor
            .forward_batch(&Self::one_hots(batch.iter().map(|t| t.state), n), n)?;
        let actions: Vec<f64> = actor_cache
            .output()
            .iter()
            .map(|&r| scale_action(r, low, high))
            .collect();
        let x = self.critic_inputs(
            batch.iter().map(|t| t.state).zip(actions.iter().copied()),
            n,
        );
        let critic_cache = self.critic1.forward_batch(&x, n)?;
        let objective = critic_cache.output().iter().sum::<f64>() / n as f64;

        // Descend on -mean(Q): upstream -1/n per sample.
        let upstream = vec![-1.0 / n as f64; n];
        let dx = self.critic1.input_gradient(&critic_cache, &upstream)?;
        // d(normalized)/d(action) · d(action)/d(raw)
        let chain = (1.0 / self.hyper.half_range()) * (0.5 * (high - low));
        let d_raw: Vec<f64> = dx
            .chunks_exact(DAYS + 1)
            .map(|row| row[DAYS] * chain)
            .collect();
        let (grads, _) = self.actor.backward(&actor_cache, &d_raw)?;
        self.actor_opt
            .step(&mut self.actor, &grads, self.hyper.lr)?;
        self.actor_updates += 1;

        self.soft_update_targets()?;
        Ok(objective)
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        let tau = self.hyper.tau;
        self.target_actor.soft_update_from(&self.actor, tau)?;
        self.target_critic1.soft_update_from(&self.critic1, tau)?;
        self.target_critic2.soft_update_from(&self.critic2, tau)
    }

    /// One sampled batch: critics always, actor and targets every
    /// `policy_delay`-th call (starting with the first).
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        rng: &mut R,
    ) -> Result<TrainDiagnostics> {
        let batch = buffer.sample_batch(self.hyper.batch_size, rng)?;
        let (critic1_loss, critic2_loss) = self.update_critics(&batch, rng)?;
        let actor_objective = if self.update_counter % self.hyper.policy_delay as u64 == 0 {
            Some(self.update_actor_and_targets(&batch)?)
        } else {
            None
        };
        self.update_counter += 1;
        Ok(TrainDiagnostics {
            critic1_loss,
            critic2_loss,
            actor_objective,
            update_counter: self.update_counter,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let agent: Self = serde_json::from_str(s)?;
        agent.hyper.validate()?;
        Ok(agent)
    }
}
