use alloc::vec::Vec;

use rand::Rng;

use crate::nn::Matrix;
use crate::{Error, Result};

/// One `(s, a, r, s')` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f32>,
    pub action: Vec<f32>,
    pub reward: f32,
    pub next_state: Vec<f32>,
}

/// Column-stacked minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Matrix<f32>,
    pub actions: Matrix<f32>,
    pub rewards: Vec<f32>,
    pub next_states: Matrix<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(items: &[&Transition]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::invalid("batch", "needs at least one transition"))?;
        let (sd, ad) = (first.state.len(), first.action.len());
        let mut states = Vec::with_capacity(items.len() * sd);
        let mut actions = Vec::with_capacity(items.len() * ad);
        let mut next = Vec::with_capacity(items.len() * sd);
        let mut rewards = Vec::with_capacity(items.len());
        for t in items {
            states.extend_from_slice(&t.state);
            actions.extend_from_slice(&t.action);
            next.extend_from_slice(&t.next_state);
            rewards.push(t.reward);
        }
        let n = items.len();
        Ok(Self {
            states: Matrix::from_vec(n, sd, states)?,
            actions: Matrix::from_vec(n, ad, actions)?,
            rewards,
            next_states: Matrix::from_vec(n, sd, next)?,
        })
    }
}

/// Fixed-capacity FIFO experience replay with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    head: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("buffer_capacity", "must be >= 1"));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            head: 0,
            pushed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total pushes since creation, including evicted ones.
    pub fn total_pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
        self.pushed += 1;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer)
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if n == 0 || self.items.len() < n {
            return Err(Error::BufferUnderfilled {
                have: self.items.len(),
                need: n.max(1),
            });
        }
        Ok((0..n).map(|_| rng.random_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let picked: Vec<&Transition> = idx.iter().map(|&i| &self.items[i]).collect();
        Batch::from_transitions(&picked)
    }
}
