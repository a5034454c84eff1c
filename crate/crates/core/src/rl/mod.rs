//! Deep Q-learning over a variable candidate set.
//!
//! The action space grows with the feature set, so a fixed output head
//! cannot represent it. Instead each candidate is scored by one network call
//! on `state ++ candidate representation` and the policy takes the argmax.

mod adam;
mod network;
mod replay;

pub use adam::Adam;
pub use network::{BatchGrad, Checkpoint, NamedArray, QNetwork, HIDDEN_UNITS};
pub use replay::{ReplayMemory, Transition};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Decisions over which epsilon decays linearly from start to end.
    pub epsilon_decay_steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Training steps between target-network syncs.
    pub target_sync_every: u64,
    pub memory_capacity: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_steps: 200,
            batch_size: 20,
            learning_rate: 0.01,
            target_sync_every: 10,
            memory_capacity: 40,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::arg(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::arg(format!("epsilon {e} outside [0, 1]")));
            }
        }
        if self.batch_size == 0 || self.memory_capacity < self.batch_size {
            return Err(Error::arg("memory capacity must hold at least one batch"));
        }
        if self.target_sync_every == 0 {
            return Err(Error::arg("target_sync_every must be positive"));
        }
        Ok(())
    }

    /// Exploration rate after `decisions` prior decisions.
    pub fn epsilon_at(&self, decisions: u64) -> f64 {
        if decisions >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = decisions as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Epsilon-greedy choice among candidate actions for one state. Greedy ties
/// resolve to the lowest index; a single candidate is returned without
/// consulting the rng.
pub fn select_action<T: Scalar, R: Rng>(
    net: &QNetwork<T>,
    state: &[T],
    candidates: &[Vec<T>],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    match candidates.len() {
        0 => Err(Error::arg("no candidate actions")),
        1 => Ok(0),
        n => {
            if rng.gen::<f64>() < epsilon {
                Ok(rng.gen_range(0..n))
            } else {
                Ok(argmax(&net.q_values(state, candidates)?))
            }
        }
    }
}

fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// TD targets `r + gamma * max_a' Q_target(s', a')` for a batch; transitions
/// without next candidates use `r` alone.
pub fn td_targets<T: Scalar>(net: &QNetwork<T>, batch: &[&Transition<T>], gamma: T) -> Result<Vec<T>> {
    batch
        .iter()
        .map(|t| {
            if t.next_actions.is_empty() {
                return Ok(t.reward);
            }
            let q = net.target_q_values(&t.next_state, &t.next_actions)?;
            let best = q.into_iter().fold(T::neg_infinity(), T::max);
            Ok(t.reward + gamma * best)
        })
        .collect()
}

/// Squared TD loss of a batch and its gradient over the online parameters.
pub fn batch_loss_grad<T: Scalar>(net: &QNetwork<T>, batch: &[&Transition<T>], gamma: T) -> Result<BatchGrad<T>> {
    let targets = td_targets(net, batch, gamma)?;
    let inputs: Vec<(&[T], &[T])> = batch.iter().map(|t| (t.state.as_slice(), t.action.as_slice())).collect();
    net.squared_error_grad(&inputs, &targets)
}

/// A Q-network with its optimizer, replay memory and exploration schedule.
/// Single owner; nothing here is shared between agents.
#[derive(Debug, Clone)]
pub struct Agent<T> {
    net: QNetwork<T>,
    opt: Adam<T>,
    memory: ReplayMemory<T>,
    cfg: AgentConfig,
    rng: ChaCha8Rng,
    decisions: u64,
    train_steps: u64,
}

impl<T: Scalar> Agent<T> {
    pub fn new(input_dim: usize, cfg: AgentConfig, seed: u64) -> Result<Self> {
        Self::with_rng(input_dim, cfg, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Xavier-initialised agent drawing all of its randomness from `rng`.
    pub fn with_rng(input_dim: usize, cfg: AgentConfig, mut rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let net = QNetwork::xavier(input_dim, HIDDEN_UNITS, &mut rng);
        Ok(Self::with_network(net, cfg, rng))
    }

    pub fn with_network(net: QNetwork<T>, cfg: AgentConfig, rng: ChaCha8Rng) -> Self {
        let opt = Adam::new(net.params().len(), T::lit(cfg.learning_rate));
        Self { net, opt, memory: ReplayMemory::new(cfg.memory_capacity), cfg, rng, decisions: 0, train_steps: 0 }
    }

    pub fn network(&self) -> &QNetwork<T> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut QNetwork<T> {
        &mut self.net
    }

    pub fn memory(&self) -> &ReplayMemory<T> {
        &self.memory
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon_at(self.decisions)
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// Picks a candidate with the scheduled epsilon and advances the schedule.
    pub fn act(&mut self, state: &[T], candidates: &[Vec<T>]) -> Result<usize> {
        let eps = self.epsilon();
        let choice = select_action(&self.net, state, candidates, eps, &mut self.rng)?;
        self.decisions += 1;
        Ok(choice)
    }

    pub fn remember(&mut self, t: Transition<T>) {
        self.memory.push(t);
    }

    /// One Adam step on a uniformly sampled batch. Returns `None` without
    /// touching anything when the memory holds fewer than a batch.
    pub fn train_step(&mut self) -> Result<Option<T>> {
        let Some(batch) = self.memory.sample(self.cfg.batch_size, &mut self.rng) else {
            return Ok(None);
        };
        let BatchGrad { loss, grad } = batch_loss_grad(&self.net, &batch, T::lit(self.cfg.gamma))?;
        self.opt.step(self.net.params_mut(), &grad);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.cfg.target_sync_every) {
            self.net.sync_target();
        }
        Ok(Some(loss))
    }
}
