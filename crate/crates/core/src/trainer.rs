//! Priming → training → evaluation schedule over global timesteps.
//!
//! - `t < priming_end`: uniform random actions, stored but not trained on.
//! - `priming_end <= t < eval_start`: noisy policy actions and one
//!   [`Td3Agent::train_step`] per environment step.
//! - `t >= eval_start`: deterministic policy, no storage, no training.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Td3Agent, Td3Hyper};
use crate::analytic::optimal_quantity;
use crate::env::{Day, EnvConfig, NewsvendorEnv, Transition};
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::{rng_stream, DAYS};

// Random stream ids derived from the run seed.
const STREAM_ENV: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_ACT: u64 = 3;
const STREAM_TRAIN: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_episodes: usize,
    pub priming_end: usize,
    pub eval_start: usize,
    pub seed: u64,
    pub buffer_capacity: usize,
    pub env: EnvConfig,
    pub hyper: Td3Hyper,
}

impl TrainConfig {
    /// Reference schedule: 300 episodes of 140 steps, training from step
    /// 10 000, evaluation from step 25 000, buffer of 100 000.
    pub fn reference_defaults(env: EnvConfig, seed: u64) -> Self {
        let hyper = Td3Hyper::defaults_for(env.action_low, env.action_high);
        Self {
            total_episodes: 300,
            priming_end: 10_000,
            eval_start: 25_000,
            seed,
            buffer_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            env,
            hyper,
        }
    }

    pub fn total_timesteps(&self) -> usize {
        self.total_episodes * self.env.episode_length
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.hyper.validate()?;
        if self.total_episodes == 0 {
            return Err(Error::Config("total_episodes must be >= 1".into()));
        }
        if !(0 < self.priming_end
            && self.priming_end < self.eval_start
            && self.eval_start <= self.total_timesteps())
        {
            return Err(Error::Config(format!(
                "need 0 < priming_end ({}) < eval_start ({}) <= total timesteps ({})",
                self.priming_end,
                self.eval_start,
                self.total_timesteps()
            )));
        }
        if self.hyper.action_low != self.env.action_low
            || self.hyper.action_high != self.env.action_high
        {
            return Err(Error::Config(
                "agent and environment action bounds differ".into(),
            ));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::Config("buffer_capacity must be >= 1".into()));
        }
        Ok(())
    }

    pub fn phase_at(&self, timestep: usize) -> Phase {
        if timestep < self.priming_end {
            Phase::Priming
        } else if timestep < self.eval_start {
            Phase::Training
        } else {
            Phase::Evaluation
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Priming,
    Training,
    Evaluation,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Priming, Phase::Training, Phase::Evaluation];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Priming => "priming",
            Phase::Training => "training",
            Phase::Evaluation => "evaluation",
        })
    }
}

/// One learning-curve point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_raw_reward: f64,
    /// Phase covering the whole episode, `None` when it straddles a boundary.
    pub phase: Option<Phase>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseStats {
    pub steps: usize,
    pub action_mean: f64,
    pub raw_reward_mean: f64,
}

/// Everything a run records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub learning_curve: Vec<EpisodeRecord>,
    /// Actions taken during evaluation, per day.
    pub eval_actions: Vec<Vec<f64>>,
    pub analytic_optimum: [f64; DAYS],
    pub priming_end: usize,
    pub eval_start: usize,
    pub total_timesteps: usize,
    pub phase_stats: [PhaseStats; 3],
    pub train_steps: u64,
    pub actor_updates: u64,
    pub buffer_len_at_priming_end: usize,
    /// Timesteps of the first and last `train_step` calls.
    pub train_window: Option<(usize, usize)>,
}

impl Metrics {
    /// Mean total raw reward over episodes lying entirely in `phase`.
    pub fn mean_episode_reward(&self, phase: Phase) -> Option<f64> {
        let xs: Vec<f64> = self
            .learning_curve
            .iter()
            .filter(|e| e.phase == Some(phase))
            .map(|e| e.total_raw_reward)
            .collect();
        (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Per-day evaluation summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DaySummary {
    pub day: usize,
    pub mean_action: f64,
    pub std_action: f64,
    pub analytic_optimum: f64,
    pub visits: usize,
}

/// Runs a full experiment.
pub fn run(config: &TrainConfig) -> Result<Metrics> {
    run_with_observer(config, |_| {})
}

/// [`run`], calling `observer` after every episode.
pub fn run_with_observer(
    config: &TrainConfig,
    mut observer: impl FnMut(&EpisodeRecord),
) -> Result<Metrics> {
    Ok(run_inner(config, &mut observer)?.0)
}

/// [`run`], also returning the trained agent.
pub fn run_returning_agent(config: &TrainConfig) -> Result<(Metrics, Td3Agent)> {
    run_inner(config, &mut |_| {})
}

fn run_inner(
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpisodeRecord),
) -> Result<(Metrics, Td3Agent)> {
    config.validate()?;
    let mut env = NewsvendorEnv::new(config.env.clone())?;
    let mut env_rng = rng_stream(config.seed, STREAM_ENV);
    let mut act_rng = rng_stream(config.seed, STREAM_ACT);
    let mut train_rng = rng_stream(config.seed, STREAM_TRAIN);
    let mut agent = Td3Agent::new(
        config.hyper.clone(),
        &mut rng_stream(config.seed, STREAM_INIT),
    )?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity)?;

    let (low, high) = (config.env.action_low, config.env.action_high);
    let noise = config.hyper.exploration_noise_std;
    let mut learning_curve = Vec::with_capacity(config.total_episodes);
    let mut eval_actions = vec![Vec::new(); DAYS];
    let mut sums = [(0usize, 0.0f64, 0.0f64); 3];
    let mut buffer_len_at_priming_end = 0;
    let mut train_window: Option<(usize, usize)> = None;
    let mut t = 0usize;

    for episode in 0..config.total_episodes {
        let mut state = env.reset();
        let mut total_raw = 0.0;
        let first_phase = config.phase_at(t);
        let mut uniform_phase = true;
        while !env.is_done() {
            let phase = config.phase_at(t);
            uniform_phase &= phase == first_phase;
            let action = match phase {
                Phase::Priming => low + (high - low) * act_rng.random::<f64>(),
                Phase::Training => agent.select_action(state, noise, &mut act_rng),
                Phase::Evaluation => agent.policy_action(state),
            };
            let out = env.step(action, &mut env_rng)?;
            total_raw += out.raw_reward;
            let s = &mut sums[phase.index()];
            s.0 += 1;
            s.1 += out.action;
            s.2 += out.raw_reward;

            match phase {
                Phase::Priming | Phase::Training => buffer.push(Transition {
                    state,
                    action: out.action,
                    reward: out.reward,
                    next_state: out.next_state,
                    done: out.done,
                }),
                Phase::Evaluation => eval_actions[state.index()].push(out.action),
            }
            if phase == Phase::Training {
                agent.train_step(&buffer, &mut train_rng)?;
                train_window = Some((train_window.map_or(t, |w| w.0), t));
            }
            t += 1;
            if t == config.priming_end {
                buffer_len_at_priming_end = buffer.len();
            }
            state = out.next_state;
        }
        let record = EpisodeRecord {
            episode,
            total_raw_reward: total_raw,
            phase: uniform_phase.then_some(first_phase),
        };
        observer(&record);
        learning_curve.push(record);
    }

    let mut analytic_optimum = [0.0; DAYS];
    for d in Day::all() {
        analytic_optimum[d.index()] =
            optimal_quantity(config.env.distribution(d), &config.env.params);
    }
    let phase_stats = sums.map(|(n, a, r)| PhaseStats {
        steps: n,
        action_mean: if n > 0 { a / n as f64 } else { 0.0 },
        raw_reward_mean: if n > 0 { r / n as f64 } else { 0.0 },
    });
    let metrics = Metrics {
        learning_curve,
        eval_actions,
        analytic_optimum,
        priming_end: config.priming_end,
        eval_start: config.eval_start,
        total_timesteps: t,
        phase_stats,
        train_steps: agent.critic_updates(),
        actor_updates: agent.actor_updates(),
        buffer_len_at_priming_end,
        train_window,
    };
    Ok((metrics, agent))
}

/// Per-day mean and standard deviation of evaluation actions.
pub fn evaluate(metrics: &Metrics) -> Result<Vec<DaySummary>> {
    metrics
        .eval_actions
        .iter()
        .enumerate()
        .map(|(day, xs)| {
            if xs.is_empty() {
                return Err(Error::Usage(format!(
                    "no evaluation actions recorded for day {day}"
                )));
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            Ok(DaySummary {
                day,
                mean_action: mean,
                std_action: var.sqrt(),
                analytic_optimum: metrics.analytic_optimum[day],
                visits: xs.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::EconomicParams;
    use crate::distributions::DemandDistribution;

    fn small_config(seed: u64) -> TrainConfig {
        let env = EnvConfig {
            episode_length: 14,
            ..EnvConfig::uniform_week(
                DemandDistribution::normal(50.0, 20.0).unwrap(),
                EconomicParams::new(2.0, 5.0).unwrap(),
            )
        };
        let mut cfg = TrainConfig::reference_defaults(env, seed);
        cfg.total_episodes = 40;
        cfg.priming_end = 200;
        cfg.eval_start = 420;
        cfg.hyper.batch_size = 32;
        cfg.hyper.actor_hidden = vec![16];
        cfg.hyper.critic_hidden = vec![16];
        cfg
    }

    #[test]
    fn reference_defaults_schedule() {
        let cfg = TrainConfig::reference_defaults(small_config(0).env.clone(), 0);
        let cfg = TrainConfig {
            env: EnvConfig {
                episode_length: 140,
                ..cfg.env.clone()
            },
            ..cfg
        };
        assert_eq!(cfg.total_timesteps(), 42_000);
        assert_eq!((cfg.priming_end, cfg.eval_start), (10_000, 25_000));
        assert_eq!(cfg.phase_at(9_999), Phase::Priming);
        assert_eq!(cfg.phase_at(10_000), Phase::Training);
        assert_eq!(cfg.phase_at(25_000), Phase::Evaluation);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config(0);
        cfg.eval_start = cfg.priming_end;
        assert!(run(&cfg).is_err());
        let mut cfg = small_config(0);
        cfg.eval_start = cfg.total_timesteps() + 1;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(0);
        cfg.priming_end = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(0);
        cfg.hyper.action_high = 90.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn phases_counts_and_buffer() {
        let cfg = small_config(1);
        let m = run(&cfg).unwrap();
        assert_eq!(m.total_timesteps, 560);
        assert_eq!(m.learning_curve.len(), 40);
        assert_eq!(m.train_steps, 220);
        assert_eq!(m.actor_updates, 110);
        assert_eq!(m.train_window, Some((200, 419)));
        assert_eq!(m.buffer_len_at_priming_end, 200);
        assert_eq!(m.phase_stats.map(|s| s.steps), [200, 220, 140]);
        assert!(m.eval_actions.iter().all(|xs| xs.len() == 20));
    }

    #[test]
    fn buffer_at_priming_end_is_capped() {
        let mut cfg = small_config(1);
        cfg.buffer_capacity = 150;
        assert_eq!(run(&cfg).unwrap().buffer_len_at_priming_end, 150);
    }

    #[test]
    fn priming_actions_are_uniform() {
        let mut cfg = small_config(2);
        cfg.priming_end = 10_000;
        cfg.eval_start = 10_001;
        cfg.total_episodes = 10_010 / 14 + 1;
        let m = run(&cfg).unwrap();
        assert!(
            (m.phase_stats[0].action_mean - 50.0).abs() < 1.0,
            "{}",
            m.phase_stats[0].action_mean
        );
        // Oracle: expected profit averaged over a ~ U(0, 100). The per-step
        // reward sd is about 107, so 10^4 steps give a standard error near 1.07.
        let n = 2000;
        let oracle = (0..n)
            .map(|k| {
                let a = 100.0 * (k as f64 + 0.5) / n as f64;
                crate::analytic::expected_profit(&cfg.env.distributions[0], a, &cfg.env.params)
                    .unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!(oracle < 0.0);
        let got = m.phase_stats[0].raw_reward_mean;
        assert!((got - oracle).abs() < 4.0 * 1.07, "{got} vs {oracle}");
    }

    #[test]
    fn evaluation_is_deterministic_per_day() {
        let m = run(&small_config(3)).unwrap();
        let summary = evaluate(&m).unwrap();
        assert_eq!(summary.len(), DAYS);
        for (s, xs) in summary.iter().zip(&m.eval_actions) {
            assert!(xs.iter().all(|&x| x == xs[0]));
            assert!(s.std_action < 1e-9, "{}", s.std_action);
            assert!((s.analytic_optimum - 38.68).abs() < 0.02);
        }
    }

    #[test]
    fn episode_phase_labels() {
        let m = run(&small_config(4)).unwrap();
        // 200 / 14 = 14.3: episode 14 straddles the priming boundary.
        assert_eq!(m.learning_curve[13].phase, Some(Phase::Priming));
        assert_eq!(m.learning_curve[14].phase, None);
        assert_eq!(m.learning_curve[15].phase, Some(Phase::Training));
        assert_eq!(m.learning_curve[30].phase, Some(Phase::Evaluation));
    }

    #[test]
    fn runs_are_reproducible() {
        assert_eq!(
            run(&small_config(5)).unwrap(),
            run(&small_config(5)).unwrap()
        );
        assert_ne!(
            run(&small_config(5)).unwrap(),
            run(&small_config(6)).unwrap()
        );
    }

    #[test]
    fn empty_evaluation_is_rejected() {
        let mut m = run(&small_config(7)).unwrap();
        m.eval_actions[2].clear();
        assert!(matches!(evaluate(&m), Err(Error::Usage(_))));
    }
}
