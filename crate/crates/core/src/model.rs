//! Model types: the tabular MDP, nonstationary policies and logged data.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result, PROB_TOLERANCE};

/// Law of the realized reward given its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RewardNoise {
    /// The realized reward equals the mean.
    #[default]
    Deterministic,
    /// The realized reward is 1 with probability equal to the mean, else 0.
    Bernoulli,
}

impl RewardNoise {
    /// Conditional variance of the realized reward given its mean.
    pub fn variance(self, mean: f64) -> f64 {
        match self {
            RewardNoise::Deterministic => 0.0,
            RewardNoise::Bernoulli => mean * (1.0 - mean),
        }
    }
}

pub(crate) fn check_distribution(p: &[f64], context: impl FnOnce() -> alloc::string::String) -> Result<()> {
    let mut sum = 0.0;
    for &x in p {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::NotAProbability { context: context(), sum: f64::NAN });
        }
        sum += x;
    }
    if (sum - 1.0).abs() > PROB_TOLERANCE {
        return Err(Error::NotAProbability { context: context(), sum });
    }
    Ok(())
}

/// A finite-horizon, nonstationary tabular MDP.
///
/// Layouts (row-major, 0-based steps):
/// - `transitions`: `[t][s][a][s']` for `t in 0..H-1`, the law of the state at
///   step `t + 1`. The transition out of the final step never influences a
///   reward and is not stored.
/// - `mean_rewards`: `[t][s][a]` for `t in 0..H`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    mean_rewards: Vec<f64>,
    noise: RewardNoise,
    reward_max: f64,
}

impl TabularMdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial: Vec<f64>,
        transitions: Vec<f64>,
        mean_rewards: Vec<f64>,
        noise: RewardNoise,
        reward_max: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::config("S, A and H must all be positive"));
        }
        if !(reward_max.is_finite() && reward_max > 0.0) {
            return Err(Error::config(format!("reward_max must be positive, got {reward_max}")));
        }
        let (s, a, h) = (num_states, num_actions, horizon);
        if initial.len() != s {
            return Err(Error::config(format!("initial distribution has {} entries, expected {s}", initial.len())));
        }
        if transitions.len() != (h - 1) * s * a * s {
            return Err(Error::config(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                (h - 1) * s * a * s
            )));
        }
        if mean_rewards.len() != h * s * a {
            return Err(Error::config(format!(
                "reward table has {} entries, expected {}",
                mean_rewards.len(),
                h * s * a
            )));
        }
        check_distribution(&initial, || "initial distribution".into())?;
        for (k, row) in transitions.chunks_exact(s).enumerate() {
            check_distribution(row, || {
                let (t, rest) = (k / (s * a), k % (s * a));
                format!("transition row (t={t}, s={}, a={})", rest / a, rest % a)
            })?;
        }
        for (k, &r) in mean_rewards.iter().enumerate() {
            if !(r.is_finite() && (0.0..=reward_max).contains(&r)) {
                return Err(Error::config(format!(
                    "mean reward {r} at flat index {k} outside [0, {reward_max}]"
                )));
            }
        }
        if noise == RewardNoise::Bernoulli && reward_max != 1.0 {
            return Err(Error::config("Bernoulli rewards require reward_max = 1"));
        }
        Ok(TabularMdp {
            num_states,
            num_actions,
            horizon,
            initial,
            transitions,
            mean_rewards,
            noise,
            reward_max,
        })
    }

    /// Builds a model from closures over `(t, s, a)`. `transition` is called
    /// for `t in 0..H-1` and must return a length-`S` distribution.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fns(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        initial: Vec<f64>,
        mut transition: impl FnMut(usize, usize, usize) -> Vec<f64>,
        mut reward: impl FnMut(usize, usize, usize) -> f64,
        noise: RewardNoise,
        reward_max: f64,
    ) -> Result<Self> {
        let mut transitions = Vec::with_capacity(horizon.saturating_sub(1) * num_states * num_actions * num_states);
        for t in 0..horizon.saturating_sub(1) {
            for s in 0..num_states {
                for a in 0..num_actions {
                    let row = transition(t, s, a);
                    if row.len() != num_states {
                        return Err(Error::config(format!(
                            "transition row (t={t}, s={s}, a={a}) has {} entries, expected {num_states}",
                            row.len()
                        )));
                    }
                    transitions.extend_from_slice(&row);
                }
            }
        }
        let mut mean_rewards = Vec::with_capacity(horizon * num_states * num_actions);
        for t in 0..horizon {
            for s in 0..num_states {
                for a in 0..num_actions {
                    mean_rewards.push(reward(t, s, a));
                }
            }
        }
        Self::new(num_states, num_actions, horizon, initial, transitions, mean_rewards, noise, reward_max)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn noise(&self) -> RewardNoise {
        self.noise
    }

    pub fn reward_max(&self) -> f64 {
        self.reward_max
    }

    /// Flat `[t][s][a][s']` transition table.
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// Flat `[t][s][a]` mean reward table.
    pub fn mean_rewards(&self) -> &[f64] {
        &self.mean_rewards
    }

    /// Law of the next state after `(s, a)` at step `t < H - 1`.
    #[inline]
    pub fn transition(&self, t: usize, s: usize, a: usize) -> &[f64] {
        let n = self.num_states;
        let start = ((t * n + s) * self.num_actions + a) * n;
        &self.transitions[start..start + n]
    }

    #[inline]
    pub fn mean_reward(&self, t: usize, s: usize, a: usize) -> f64 {
        self.mean_rewards[(t * self.num_states + s) * self.num_actions + a]
    }

    /// Conditional variance of the realized reward at `(t, s, a)`.
    pub fn reward_variance(&self, t: usize, s: usize, a: usize) -> f64 {
        self.noise.variance(self.mean_reward(t, s, a))
    }

    pub(crate) fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.dims() != (self.horizon, self.num_states, self.num_actions) {
            return Err(Error::config(format!(
                "policy dims (H, S, A) = {:?} do not match model {:?}",
                policy.dims(),
                (self.horizon, self.num_states, self.num_actions)
            )));
        }
        Ok(())
    }
}

/// A nonstationary stochastic policy, `[t][s][a]` row-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    table: Vec<f64>,
}

impl Policy {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize, table: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::config("S, A and H must all be positive"));
        }
        if table.len() != horizon * num_states * num_actions {
            return Err(Error::config(format!(
                "policy table has {} entries, expected {}",
                table.len(),
                horizon * num_states * num_actions
            )));
        }
        for (k, row) in table.chunks_exact(num_actions).enumerate() {
            check_distribution(row, || format!("policy row (t={}, s={})", k / num_states, k % num_states))?;
        }
        Ok(Policy { horizon, num_states, num_actions, table })
    }

    pub fn from_fn(
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        mut row: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(horizon * num_states * num_actions);
        for t in 0..horizon {
            for s in 0..num_states {
                let r = row(t, s);
                if r.len() != num_actions {
                    return Err(Error::config(format!(
                        "policy row (t={t}, s={s}) has {} entries, expected {num_actions}",
                        r.len()
                    )));
                }
                table.extend_from_slice(&r);
            }
        }
        Self::new(horizon, num_states, num_actions, table)
    }

    pub fn uniform(horizon: usize, num_states: usize, num_actions: usize) -> Result<Self> {
        let p = 1.0 / num_actions as f64;
        Self::from_fn(horizon, num_states, num_actions, |_, _| alloc::vec![p; num_actions])
    }

    /// Deterministic policy taking `choices[t * S + s]` at `(t, s)`.
    pub fn deterministic(horizon: usize, num_states: usize, num_actions: usize, choices: &[usize]) -> Result<Self> {
        if choices.len() != horizon * num_states {
            return Err(Error::config(format!(
                "deterministic policy needs {} choices, got {}",
                horizon * num_states,
                choices.len()
            )));
        }
        if let Some(&bad) = choices.iter().find(|&&c| c >= num_actions) {
            return Err(Error::config(format!("action {bad} out of range for A = {num_actions}")));
        }
        let mut table = alloc::vec![0.0; horizon * num_states * num_actions];
        for (k, &c) in choices.iter().enumerate() {
            table[k * num_actions + c] = 1.0;
        }
        Self::new(horizon, num_states, num_actions, table)
    }

    /// `(H, S, A)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.horizon, self.num_states, self.num_actions)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn row(&self, t: usize, s: usize) -> &[f64] {
        let start = (t * self.num_states + s) * self.num_actions;
        &self.table[start..start + self.num_actions]
    }

    #[inline]
    pub fn prob(&self, t: usize, s: usize, a: usize) -> f64 {
        self.table[(t * self.num_states + s) * self.num_actions + a]
    }
}

/// One logged transition: state, action and realized reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: u32,
    pub action: u32,
    pub reward: f64,
}

impl Step {
    pub fn new(state: usize, action: usize, reward: f64) -> Self {
        Step { state: state as u32, action: action as u32, reward }
    }
}

/// An `H`-step episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(steps: Vec<Step>) -> Self {
        Trajectory { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted return.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// `n >= 1` episodes sharing `(H, S, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    episodes: Vec<Trajectory>,
}

impl Dataset {
    /// Validates lengths, index bounds and that rewards are finite and
    /// nonnegative.
    pub fn new(num_states: usize, num_actions: usize, horizon: usize, episodes: Vec<Trajectory>) -> Result<Self> {
        if episodes.is_empty() {
            return Err(Error::config("a dataset needs at least one episode"));
        }
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::config("S, A and H must all be positive"));
        }
        for (i, ep) in episodes.iter().enumerate() {
            if ep.len() != horizon {
                return Err(Error::config(format!("episode {i} has {} steps, expected {horizon}", ep.len())));
            }
            for (t, st) in ep.steps.iter().enumerate() {
                if st.state as usize >= num_states || st.action as usize >= num_actions {
                    return Err(Error::config(format!(
                        "episode {i}, t={t}: (s, a) = ({}, {}) out of range",
                        st.state, st.action
                    )));
                }
                if !(st.reward.is_finite() && st.reward >= 0.0) {
                    return Err(Error::config(format!("episode {i}, t={t}: invalid reward {}", st.reward)));
                }
            }
        }
        Ok(Dataset { num_states, num_actions, horizon, episodes })
    }

    pub(crate) fn from_parts_unchecked(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        episodes: Vec<Trajectory>,
    ) -> Self {
        Dataset { num_states, num_actions, horizon, episodes }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn episodes(&self) -> &[Trajectory] {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Contiguous slice of episodes as a dataset of its own.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Result<Dataset> {
        if range.start >= range.end || range.end > self.episodes.len() {
            return Err(Error::config(format!("episode range {range:?} invalid for n = {}", self.len())));
        }
        Ok(Self::from_parts_unchecked(
            self.num_states,
            self.num_actions,
            self.horizon,
            self.episodes[range].to_vec(),
        ))
    }

    pub(crate) fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.dims() != (self.horizon, self.num_states, self.num_actions) {
            return Err(Error::config(format!(
                "policy dims (H, S, A) = {:?} do not match dataset {:?}",
                policy.dims(),
                (self.horizon, self.num_states, self.num_actions)
            )));
        }
        Ok(())
    }
}
