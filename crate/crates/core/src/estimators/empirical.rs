use alloc::vec;
use alloc::vec::Vec;

use crate::dp::ForwardModel;
use crate::model::{Dataset, Trajectory};

/// Count-based plug-in model of the logged data.
///
/// Unvisited `(t, s, a)` cells get an all-zero next-state row and a zero
/// reward, so a plug-in rollout simply loses the mass that reaches them.
/// Every estimator that goes through this type inherits that convention.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    n: usize,
    counts_sa: Vec<u64>,
    counts_s: Vec<u64>,
    p_hat: Vec<f64>,
    r_hat: Vec<f64>,
}

impl EmpiricalModel {
    pub fn from_dataset(data: &Dataset) -> Self {
        Self::from_episodes(data.num_states(), data.num_actions(), data.horizon(), data.episodes())
    }

    /// Builds the model from a slice of episodes that are already known to
    /// match `(S, A, H)`.
    pub(crate) fn from_episodes(ns: usize, na: usize, h: usize, episodes: &[Trajectory]) -> Self {
        let mut counts_sa = vec![0u64; h * ns * na];
        let mut counts_s = vec![0u64; h * ns];
        let mut next_counts = vec![0u64; h.saturating_sub(1) * ns * na * ns];
        let mut reward_sums = vec![0.0; h * ns * na];
        for ep in episodes {
            for (t, st) in ep.steps.iter().enumerate() {
                let (s, a) = (st.state as usize, st.action as usize);
                let cell = (t * ns + s) * na + a;
                counts_s[t * ns + s] += 1;
                counts_sa[cell] += 1;
                reward_sums[cell] += st.reward;
                if t + 1 < h {
                    next_counts[cell * ns + ep.steps[t + 1].state as usize] += 1;
                }
            }
        }
        let mut r_hat = reward_sums;
        for (r, &c) in r_hat.iter_mut().zip(&counts_sa) {
            *r = if c > 0 { *r / c as f64 } else { 0.0 };
        }
        let p_hat = next_counts
            .chunks_exact(ns)
            .zip(&counts_sa)
            .flat_map(|(row, &c)| {
                row.iter()
                    .map(move |&k| if c > 0 { k as f64 / c as f64 } else { 0.0 })
            })
            .collect();
        EmpiricalModel {
            num_states: ns,
            num_actions: na,
            horizon: h,
            n: episodes.len(),
            counts_sa,
            counts_s,
            p_hat,
            r_hat,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn count_sa(&self, t: usize, s: usize, a: usize) -> u64 {
        self.counts_sa[(t * self.num_states + s) * self.num_actions + a]
    }

    #[inline]
    pub fn count_s(&self, t: usize, s: usize) -> u64 {
        self.counts_s[t * self.num_states + s]
    }

    /// Estimated next-state law after `(s, a)` at step `t < H - 1`.
    #[inline]
    pub fn p_hat(&self, t: usize, s: usize, a: usize) -> &[f64] {
        let start = ((t * self.num_states + s) * self.num_actions + a) * self.num_states;
        &self.p_hat[start..start + self.num_states]
    }

    #[inline]
    pub fn r_hat(&self, t: usize, s: usize, a: usize) -> f64 {
        self.r_hat[(t * self.num_states + s) * self.num_actions + a]
    }

    /// `n_{s_t} / n`.
    pub fn d_mu_hat(&self, t: usize, s: usize) -> f64 {
        self.count_s(t, s) as f64 / self.n as f64
    }

    /// Empirical initial distribution `d_1_hat`.
    pub fn initial_hat(&self) -> Vec<f64> {
        (0..self.num_states).map(|s| self.d_mu_hat(0, s)).collect()
    }

    /// Number of `(t, s, a)` cells with no observations.
    pub fn empty_cells(&self) -> usize {
        self.counts_sa.iter().filter(|&&c| c == 0).count()
    }
}

impl ForwardModel for EmpiricalModel {
    fn dims(&self) -> (usize, usize, usize) {
        (self.horizon, self.num_states, self.num_actions)
    }

    fn reward(&self, t: usize, s: usize, a: usize) -> f64 {
        self.r_hat(t, s, a)
    }

    fn next(&self, t: usize, s: usize, a: usize) -> &[f64] {
        self.p_hat(t, s, a)
    }
}
