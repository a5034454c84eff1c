use std::collections::VecDeque;

use rand::Rng;

/// One agent decision: `action` is the non-state part of the network input
/// (the chosen candidate's representation, plus the meta feature's for the
/// controller). `next_actions` snapshots the candidates available after the
/// step, over which the TD target maximizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: Vec<T>,
    pub reward: T,
    pub next_state: Vec<T>,
    pub next_actions: Vec<Vec<T>>,
}

/// Bounded FIFO of transitions; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayMemory<T> {
    buf: VecDeque<Transition<T>>,
    capacity: usize,
}

impl<T: Clone> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { buf: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, t: Transition<T>) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        self.buf.iter()
    }

    /// `batch` distinct transitions drawn uniformly, or `None` if too few are stored.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Option<Vec<&Transition<T>>> {
        if batch == 0 || self.buf.len() < batch {
            return None;
        }
        let picks = rand::seq::index::sample(rng, self.buf.len(), batch);
        Some(picks.iter().map(|i| &self.buf[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tr(r: f64) -> Transition<f64> {
        Transition { state: vec![], action: vec![], reward: r, next_state: vec![], next_actions: vec![] }
    }

    #[test]
    fn fifo_eviction() {
        let mut mem = ReplayMemory::new(40);
        for i in 0..41 {
            mem.push(tr(i as f64));
            assert!(mem.len() <= 40);
        }
        let rewards: Vec<f64> = mem.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, (1..41).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_is_without_replacement() {
        let mut mem = ReplayMemory::new(40);
        for i in 0..25 {
            mem.push(tr(i as f64));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(mem.sample(26, &mut rng).is_none());
        let batch = mem.sample(20, &mut rng).unwrap();
        let mut seen: Vec<i64> = batch.iter().map(|t| t.reward as i64).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 20);
    }
}
