use alloc::vec::Vec;

use crate::model::{Dataset, Policy};
use crate::stats::mean;
use crate::{Error, Result};

/// Single-step ratio `pi(a|s) / mu(a|s)` at step `t`.
pub(crate) fn step_ratio(mu: &Policy, pi: &Policy, t: usize, s: usize, a: usize) -> Result<f64> {
    let m = mu.prob(t, s, a);
    if m == 0.0 {
        return Err(Error::InvalidLoggingPolicy { t, state: s, action: a });
    }
    Ok(pi.prob(t, s, a) / m)
}

pub(crate) fn check_pair(data: &Dataset, mu: &Policy, pi: &Policy) -> Result<()> {
    data.check_policy(mu)?;
    data.check_policy(pi)
}

/// Running products `rho_{1:t}` of single-step importance ratios, `[i][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeWeights {
    horizon: usize,
    rho: Vec<f64>,
}

impl CumulativeWeights {
    pub fn compute(data: &Dataset, mu: &Policy, pi: &Policy) -> Result<Self> {
        check_pair(data, mu, pi)?;
        let h = data.horizon();
        let mut rho = Vec::with_capacity(data.len() * h);
        for ep in data.episodes() {
            let mut acc = 1.0;
            for (t, st) in ep.steps.iter().enumerate() {
                acc *= step_ratio(mu, pi, t, st.state as usize, st.action as usize)?;
                rho.push(acc);
            }
        }
        Ok(CumulativeWeights { horizon: h, rho })
    }

    /// Weights of episode `i`, one per step.
    pub fn episode(&self, i: usize) -> &[f64] {
        &self.rho[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.rho[i * self.horizon + t]
    }
}

/// Trajectory-wise importance sampling: mean of `rho_{1:H} * sum_t r_t`.
pub fn estimate_is(data: &Dataset, mu: &Policy, pi: &Policy) -> Result<f64> {
    let w = CumulativeWeights::compute(data, mu, pi)?;
    let h = data.horizon();
    let per_episode: Vec<f64> = data
        .episodes()
        .iter()
        .enumerate()
        .map(|(i, ep)| w.get(i, h - 1) * ep.total_reward())
        .collect();
    Ok(mean(&per_episode))
}

/// Per-step importance sampling: mean of `sum_t rho_{1:t} r_t`.
pub fn estimate_step_is(data: &Dataset, mu: &Policy, pi: &Policy) -> Result<f64> {
    let w = CumulativeWeights::compute(data, mu, pi)?;
    let per_episode: Vec<f64> = data
        .episodes()
        .iter()
        .enumerate()
        .map(|(i, ep)| ep.steps.iter().zip(w.episode(i)).map(|(st, r)| r * st.reward).sum())
        .collect();
    Ok(mean(&per_episode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Step, Trajectory};
    use alloc::vec;

    #[test]
    fn hand_computed_weights() {
        // ratios 2 then 1/2, rewards 1 and 1
        let data = Dataset::new(1, 2, 2, vec![Trajectory::new(vec![Step::new(0, 0, 1.0), Step::new(0, 1, 1.0)])]).unwrap();
        let mu = Policy::new(2, 1, 2, vec![0.25, 0.75, 0.5, 0.5]).unwrap();
        let pi = Policy::new(2, 1, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let w = CumulativeWeights::compute(&data, &mu, &pi).unwrap();
        assert_eq!(w.episode(0), &[2.0, 2.0]);
        let pi = Policy::new(2, 1, 2, vec![0.5, 0.5, 0.75, 0.25]).unwrap();
        assert_eq!(CumulativeWeights::compute(&data, &mu, &pi).unwrap().episode(0), &[2.0, 1.0]);
        assert_eq!(estimate_is(&data, &mu, &pi).unwrap(), 2.0);
        assert_eq!(estimate_step_is(&data, &mu, &pi).unwrap(), 3.0);
    }

    #[test]
    fn zero_logging_probability_is_an_error() {
        let data = Dataset::new(1, 2, 1, vec![Trajectory::new(vec![Step::new(0, 1, 1.0)])]).unwrap();
        let mu = Policy::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let pi = Policy::uniform(1, 1, 2).unwrap();
        assert_eq!(
            estimate_is(&data, &mu, &pi),
            Err(Error::InvalidLoggingPolicy { t: 0, state: 0, action: 1 })
        );
    }
}
