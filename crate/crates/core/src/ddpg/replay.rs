use rand::Rng;
use serde::{Deserialize, Serialize};

/// One experience tuple `(s, a, r, s')` plus the terminal flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer; the oldest entry is overwritten first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayMemory<T> {
    capacity: usize,
    items: Vec<T>,
    cursor: usize,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, items: Vec::new(), cursor: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.cursor] = item;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Stored items from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &T> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    /// Uniform sample with replacement, or `None` while fewer than
    /// `batch_size` items are stored.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Option<Vec<&T>> {
        if batch_size == 0 || self.items.len() < batch_size {
            return None;
        }
        Some(
            (0..batch_size)
                .map(|_| &self.items[rng.random_range(0..self.items.len())])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_overwrites_oldest() {
        let mut m = ReplayMemory::new(3);
        for i in 1..=4 {
            m.push(i);
        }
        assert_eq!(m.len(), 3);
        assert_eq!(m.iter_oldest_first().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn underfilled_memory_is_not_ready() {
        let mut m = ReplayMemory::new(100);
        for i in 0..10 {
            m.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(m.sample(64, &mut rng).is_none());
        assert_eq!(m.sample(10, &mut rng).unwrap().len(), 10);
    }

    #[test]
    fn sampling_is_uniform() {
        let mut m = ReplayMemory::new(10);
        for i in 0..10usize {
            m.push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut counts = [0usize; 10];
        let n = 100_000;
        for _ in 0..(n / 10) {
            for &x in m.sample(10, &mut rng).unwrap() {
                counts[x] += 1;
            }
        }
        // binomial(n, 0.1): sd = sqrt(n * 0.1 * 0.9)
        let sd = (n as f64 * 0.09).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 10.0).abs() < 5.0 * sd, "{counts:?}");
        }
    }

    proptest::proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..100) {
            let mut m = ReplayMemory::new(cap);
            for i in 0..pushes {
                m.push(i);
            }
            proptest::prop_assert!(m.len() <= cap);
            let newest: Vec<usize> = m.iter_oldest_first().copied().collect();
            let expected: Vec<usize> = (pushes.saturating_sub(cap)..pushes).collect();
            proptest::prop_assert_eq!(newest, expected);
        }
    }
}
