//! Transitions and the uniform replay buffer used by the value-based learners.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

/// One environment step. Observations are shared between consecutive transitions.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Arc<[f32]>,
    pub mask: Arc<[bool]>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Arc<[f32]>,
    pub next_mask: Arc<[bool]>,
    pub done: bool,
}

/// Stacks observations into a `batch x features` matrix.
pub fn obs_matrix<'a, I>(rows: I, width: usize) -> Array2<f64>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let mut data = Vec::new();
    let mut n = 0;
    for r in rows {
        debug_assert_eq!(r.len(), width);
        data.extend(r.iter().map(|&v| f64::from(v)));
        n += 1;
    }
    Array2::from_shape_vec((n, width), data).expect("observations share one width")
}

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        (0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(reward: f64) -> Transition {
        let obs: Arc<[f32]> = Arc::from(vec![reward as f32]);
        let mask: Arc<[bool]> = Arc::from(vec![true]);
        Transition {
            obs: obs.clone(),
            mask: mask.clone(),
            action: 0,
            reward,
            next_obs: obs,
            next_mask: mask,
            done: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for r in 0..5 {
            buf.push(transition(r as f64));
        }
        assert_eq!(buf.len(), 3);
        let mut rewards: Vec<f64> = buf.items.iter().map(|t| t.reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn samples_come_from_the_buffer() {
        let mut buf = ReplayBuffer::new(10);
        for r in 0..4 {
            buf.push(transition(r as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = buf.sample(32, &mut rng);
        assert_eq!(batch.len(), 32);
        assert!(batch.iter().all(|t| (0.0..4.0).contains(&t.reward)));
        let m = obs_matrix(batch.iter().map(|t| &t.obs[..]), 1);
        assert_eq!(m.shape(), &[32, 1]);
    }
}
