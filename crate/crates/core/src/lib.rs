//! Newsvendor inventory control solved two ways: the critical-fractile
//! formula and a twin-delayed deep deterministic policy gradient agent that
//! learns the same stocking levels from simulated demand.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: demand laws with sampling, CDF and quantile.
//! - [`analytic`]: critical fractile, optimal quantity, expected profit and a
//!   Monte Carlo profit-curve oracle.
//! - [`env`]: the seven-day cyclic environment (`reset` / `observe` / `step`).
//! - [`nn`]: a small feed-forward network with exact backprop and Adam.
//! - [`replay`]: fixed-capacity transition memory.
//! - [`agent`]: the TD3 learner.
//! - [`trainer`]: the priming / training / evaluation schedule.
//! - [`config`] and [`experiment`]: JSON experiment files, multi-seed runs and
//!   CSV/JSON outputs.

// Negated float comparisons are used deliberately so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod analytic;
pub mod config;
pub mod distributions;
pub mod env;
mod error;
pub mod experiment;
pub mod nn;
pub mod replay;
pub mod trainer;

pub use agent::{scale_action, Td3Agent, Td3Hyper, TrainDiagnostics};
pub use analytic::{
    critical_fractile, curve_argmax, expected_profit, linear_grid, mc_expected_profit,
    optimal_quantity, profit_curve, CurvePoint, EconomicParams, McEstimate,
};
pub use config::ExperimentConfigFile;
pub use distributions::DemandDistribution;
pub use env::{
    one_hot, reward, Day, EnvConfig, NewsvendorEnv, RewardTransform, StepOutcome, Transition,
};
pub use error::{Error, Result};
pub use experiment::{run_experiment, write_report, ExperimentReport, MedianRow, RunOutput};
pub use nn::{Activation, AdamState, Mlp};
pub use replay::ReplayBuffer;
pub use trainer::{DaySummary, Metrics, Phase, TrainConfig};

/// Number of distinct states (days of the week).
pub const DAYS: usize = 7;

/// Reproducible random stream used across the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds a [`Rng`] from a seed and a stream id; distinct streams from the
/// same seed are independent.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
