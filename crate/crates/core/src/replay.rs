use rand::Rng;

use crate::env::Transition;
use crate::error::{domain, Error, Result};

/// Fixed-capacity FIFO transition memory with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub const DEFAULT_CAPACITY: usize = 100_000;

    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(domain("replay capacity must be >= 1"));
        }
        Ok(Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    /// Appends `t`, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    /// `n` uniform draws with replacement.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if self.storage.is_empty() {
            return Err(Error::Usage(
                "cannot sample from an empty replay buffer".into(),
            ));
        }
        let len = self.storage.len();
        Ok((0..n)
            .map(|_| self.storage[rng.random_range(0..len)])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Day;
    use crate::rng_stream;
    use proptest::prelude::*;

    fn t(k: usize) -> Transition {
        let d = Day::new(k % 7).unwrap();
        Transition {
            state: d,
            action: k as f64,
            reward: -(k as f64),
            next_state: d.next(),
            done: false,
        }
    }

    fn actions(buf: &ReplayBuffer) -> Vec<f64> {
        buf.iter().map(|t| t.action).collect()
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(3).unwrap();
        for k in 0..4 {
            buf.push(t(k));
        }
        assert_eq!(actions(&buf), vec![1.0, 2.0, 3.0]);
        assert_eq!(buf.len(), 3);
        for k in 4..10 {
            buf.push(t(k));
            assert_eq!(buf.len(), 3);
        }
        assert_eq!(actions(&buf), vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn single_push() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        buf.push(t(0));
        assert_eq!(buf.len(), 1);
        assert!(ReplayBuffer::new(0).is_err());
    }

    #[test]
    fn sampling_single_item_and_empty() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        assert!(matches!(
            buf.sample_batch(1, &mut rng_stream(0, 0)),
            Err(Error::Usage(_))
        ));
        buf.push(t(5));
        let batch = buf.sample_batch(256, &mut rng_stream(0, 0)).unwrap();
        assert_eq!(batch.len(), 256);
        assert!(batch.iter().all(|x| *x == t(5)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut buf = ReplayBuffer::new(100).unwrap();
        (0..100).for_each(|k| buf.push(t(k)));
        let a = buf.sample_batch(64, &mut rng_stream(3, 0)).unwrap();
        let b = buf.sample_batch(64, &mut rng_stream(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let n_items = 10_000;
        let mut buf = ReplayBuffer::new(n_items).unwrap();
        (0..n_items).for_each(|k| buf.push(t(k)));
        let mut counts = vec![0u32; n_items];
        let mut rng = rng_stream(4, 0);
        let batches = 1000;
        for _ in 0..batches {
            for x in buf.sample_batch(256, &mut rng).unwrap() {
                counts[x.action as usize] += 1;
            }
        }
        let draws = (batches * 256) as f64;
        let p = 1.0 / n_items as f64;
        let mean = draws * p;
        let sd = (draws * p * (1.0 - p)).sqrt();
        let worst = counts
            .iter()
            .map(|&c| (c as f64 - mean).abs() / sd)
            .fold(0.0, f64::max);
        assert!(worst < 5.0, "max deviation {worst} sigma");
    }

    #[test]
    fn never_samples_evicted() {
        let mut buf = ReplayBuffer::new(50).unwrap();
        (0..200).for_each(|k| buf.push(t(k)));
        let batch = buf.sample_batch(5000, &mut rng_stream(5, 0)).unwrap();
        assert!(batch.iter().all(|x| x.action >= 150.0));
    }

    proptest! {
        #[test]
        fn contents_are_the_last_pushes(cap in 1usize..40, pushes in 0usize..120) {
            let mut buf = ReplayBuffer::new(cap).unwrap();
            (0..pushes).for_each(|k| buf.push(t(k)));
            let start = pushes.saturating_sub(cap);
            let want: Vec<f64> = (start..pushes).map(|k| k as f64).collect();
            prop_assert_eq!(actions(&buf), want);
        }
    }
}
