//! Seven-day cyclic newsvendor environment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::EconomicParams;
use crate::distributions::DemandDistribution;
use crate::error::{domain, Error, Result};
use crate::DAYS;

/// Day of the week, `0..7`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Day(u8);

impl Day {
    pub fn new(index: usize) -> Result<Self> {
        if index < DAYS {
            Ok(Self(index as u8))
        } else {
            Err(domain(format!(
                "day index must be in 0..{DAYS}, got {index}"
            )))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn next(self) -> Self {
        Self((self.0 + 1) % DAYS as u8)
    }

    pub fn one_hot(self) -> [f64; DAYS] {
        let mut v = [0.0; DAYS];
        v[self.index()] = 1.0;
        v
    }

    pub fn all() -> impl Iterator<Item = Day> {
        (0..DAYS as u8).map(Day)
    }
}

/// One-hot encoding of a day index.
pub fn one_hot(day: usize) -> Result<[f64; DAYS]> {
    Day::new(day).map(Day::one_hot)
}

/// Single-day profit of stocking `action` units against `demand`.
///
/// `p * min(d, a) - c * max(a - d, 0)`: margin on sold units minus the cost
/// sunk in unsold ones.
pub fn reward(params: &EconomicParams, action: f64, demand: f64) -> Result<f64> {
    if !(action >= 0.0) || !(demand >= 0.0) {
        return Err(domain(format!(
            "action and demand must be >= 0, got ({action}, {demand})"
        )));
    }
    Ok(params.unit_profit() * demand.min(action) - params.unit_cost() * (action - demand).max(0.0))
}

/// Transform applied to the profit before it is handed to the learner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTransform {
    #[default]
    Identity,
    Cube,
}

impl RewardTransform {
    /// Divisor used when a config does not set `reward_scale`.
    pub fn default_scale(self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Cube => 100.0,
        }
    }

    pub fn apply(self, raw: f64, scale: f64) -> f64 {
        let x = raw / scale;
        match self {
            Self::Identity => x,
            Self::Cube => x * x * x,
        }
    }
}

/// Environment parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub distributions: [DemandDistribution; DAYS],
    pub params: EconomicParams,
    pub action_low: f64,
    pub action_high: f64,
    #[serde(default = "default_episode_length")]
    pub episode_length: usize,
    #[serde(default)]
    pub reward_transform: RewardTransform,
    /// Divisor applied before the transform; defaults per transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_scale: Option<f64>,
}

fn default_episode_length() -> usize {
    140
}

impl EnvConfig {
    /// Same law on every day, identity reward, bounds `(0, 100)`, 140-step episodes.
    pub fn uniform_week(dist: DemandDistribution, params: EconomicParams) -> Self {
        Self {
            distributions: [dist; DAYS],
            params,
            action_low: 0.0,
            action_high: 100.0,
            episode_length: default_episode_length(),
            reward_transform: RewardTransform::Identity,
            reward_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.action_low.is_finite()
            && self.action_high.is_finite()
            && self.action_low < self.action_high)
        {
            return Err(Error::Config(format!(
                "action_low must be < action_high, got ({}, {})",
                self.action_low, self.action_high
            )));
        }
        if self.action_low < 0.0 {
            return Err(Error::Config("action_low must be >= 0".into()));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be >= 1".into()));
        }
        if let Some(s) = self.reward_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("reward_scale must be > 0, got {s}")));
            }
        }
        Ok(())
    }

    pub fn effective_reward_scale(&self) -> f64 {
        self.reward_scale
            .unwrap_or_else(|| self.reward_transform.default_scale())
    }

    pub fn distribution(&self, day: Day) -> &DemandDistribution {
        &self.distributions[day.index()]
    }
}

/// What `step` hands back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// Transformed reward, the value the learner stores.
    pub reward: f64,
    /// Untransformed profit, for metrics.
    pub raw_reward: f64,
    pub demand: f64,
    /// The action after clipping to the bounds.
    pub action: f64,
    pub next_state: Day,
    /// Time limit reached. Not a terminal state.
    pub done: bool,
}

/// A stored experience.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Day,
    pub action: f64,
    pub reward: f64,
    pub next_state: Day,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct NewsvendorEnv {
    config: EnvConfig,
    reward_scale: f64,
    day: Day,
    steps: usize,
}

impl NewsvendorEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let reward_scale = config.effective_reward_scale();
        Ok(Self {
            config,
            reward_scale,
            day: Day::default(),
            steps: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn reset(&mut self) -> Day {
        self.day = Day::default();
        self.steps = 0;
        self.day
    }

    pub fn observe(&self) -> Day {
        self.day
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.config.episode_length
    }

    /// Stocks `action` units (clipped to the bounds) for the current day.
    pub fn step<R: Rng + ?Sized>(&mut self, action: f64, rng: &mut R) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::Usage(
                "step called after the episode finished; call reset first".into(),
            ));
        }
        if action.is_nan() {
            return Err(Error::Numeric("action is NaN".into()));
        }
        let action = action.clamp(self.config.action_low, self.config.action_high);
        let demand = self.config.distribution(self.day).sample(rng);
        let raw_reward = reward(&self.config.params, action, demand)?;
        let transformed = self
            .config
            .reward_transform
            .apply(raw_reward, self.reward_scale);
        self.day = self.day.next();
        self.steps += 1;
        Ok(StepOutcome {
            reward: transformed,
            raw_reward,
            demand,
            action,
            next_state: self.day,
            done: self.is_done(),
        })
    }
}
