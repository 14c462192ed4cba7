//! Fixtures shared by the kernel benchmarks.

use newsvendor_core::{rng_stream, Day, ReplayBuffer, Td3Agent, Td3Hyper, Transition, DAYS};
use rand::Rng;

/// Agent with the reference topology and bounds `(0, 100)`.
pub fn reference_agent(seed: u64) -> Td3Agent {
    Td3Agent::new(Td3Hyper::defaults_for(0.0, 100.0), &mut rng_stream(seed, 0))
        .expect("reference hyperparameters are valid")
}

/// Buffer holding `n` random transitions.
pub fn filled_buffer(n: usize, seed: u64) -> ReplayBuffer {
    let mut rng = rng_stream(seed, 0);
    let mut buf = ReplayBuffer::new(n.max(1)).expect("capacity >= 1");
    for _ in 0..n {
        let s = Day::new(rng.random_range(0..DAYS)).expect("day in range");
        buf.push(Transition {
            state: s,
            action: rng.random_range(0.0..100.0),
            reward: rng.random_range(-1.0..1.0),
            next_state: s.next(),
            done: false,
        });
    }
    buf
}

/// Row-major batch of `batch` one-hot states with an action coordinate in `[-1, 1]`.
pub fn critic_batch(batch: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_stream(seed, 0);
    let mut out = Vec::with_capacity(batch * (DAYS + 1));
    for _ in 0..batch {
        let day = Day::new(rng.random_range(0..DAYS)).expect("day in range");
        out.extend_from_slice(&day.one_hot());
        out.push(rng.random_range(-1.0..1.0));
    }
    out
}
